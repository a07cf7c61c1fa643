#pragma once

#include <span>
#include <vector>

#include "retort/deck.hpp"
#include "retort/grid.hpp"

namespace retort {

struct FlowSettings {
  double dt_init = 60.0;
  double dt_min = 1e-6;
  double dt_max = 3600.0;
  int max_picard_iters = 40;
  double picard_tol_pressure = 1e-2;  // Pa
  double picard_tol_saturation = 1e-9;
  double specific_storage = 1e-9;  // 1/Pa

  static FlowSettings from(const SolverSettings& s);
};

/// Liquid pressure implied by a (S_L, elastic, S_B) triple. Liquid-full
/// elements (S_L at 1 - S_B) carry their pressure in the elastic store.
double liquid_pressure(double S_L, double elastic, double S_B, const MaterialRecord& mat,
                       const PhaseProperties& phases, double specific_storage);

/// Inverse of liquid_pressure: sets S_L, elastic and S_G of element e from P.
void set_liquid_pressure(GridState& state, std::size_t e, double P, const MaterialRecord& mat,
                         double specific_storage);

/// Re-derives S_L/elastic/S_G/P_L of element e from its liquid volume W (m^3).
void set_liquid_volume(GridState& state, const GridSpec& grid,
                       std::span<const MaterialRecord> materials, std::size_t e, double W,
                       double specific_storage);

/// Liquid Darcy velocity (m/s) from element i to adjacent element j. Both the
/// bioclogged permeability k (1 - S_B)^2 and k_rL enter the interface as
/// distance-weighted harmonic means of the two elements.
double darcy_flux(std::size_t i, std::size_t j, const GridState& state, const GridSpec& grid,
                  std::span<const MaterialRecord> materials);

/// Water exchanged with the outside over one flow step, m^3 per element.
struct FlowStep {
  double dt = 0.0;
  int iterations = 0;
  std::vector<double> face_volume;  // through interface i|i+1, positive downward
  std::vector<double> source;       // liquid boundary sources
  std::vector<double> uptake;       // root uptake actually removed
  std::vector<double> uptake_clipped;
  double bottom_out = 0.0;  // through the bottom face (negative when entering)
  double top_in = 0.0;      // through the top face (head condition only)
  std::vector<double> W_before, W_after;
  /// Per-element liquid boundary inflow carrying species (m^3), keyed by boundary.
  std::vector<std::pair<std::size_t, double>> sourced_by_boundary;
};

/// Backward-Euler, modified-Picard liquid flow on the vertical chain with a
/// mass-conservative storage update. Keeps its own adaptive step size.
class FlowSolver {
 public:
  FlowSolver(const GridSpec& grid, std::span<const MaterialRecord> materials,
             std::span<const BoundarySchedule> boundaries, FlowSettings settings);

  /// Advances `state` by at most dt_limit from state.time. On Picard failure
  /// the step is halved and retried; throws ConvergenceFailure below dt_min.
  FlowStep step(GridState& state, double dt_limit);

  double next_dt() const { return dt_; }

 private:
  bool try_step(const GridState& state, double dt, GridState& out, FlowStep& step) const;

  const GridSpec& grid_;
  std::span<const MaterialRecord> materials_;
  std::span<const BoundarySchedule> boundaries_;
  FlowSettings settings_;
  double dt_;
  int clean_steps_ = 0;
};

/// Flux-free state check used by tests: liquid volume per element (m^3).
std::vector<double> liquid_volumes(const GridState& state, const GridSpec& grid,
                                   std::span<const MaterialRecord> materials);

/// Growth or decay of biophase species moves water between L and B: each unit of
/// new biomass saturation takes f_L from S_L and the rest from S_G. dS_B holds
/// [element * n + j] changes for biophase species j with water fraction f_L[j].
struct ExchangeReport {
  std::vector<double> water_immobilized;  // m^3 per element; negative when released
  std::vector<double> water_clipped;      // m^3 requested but not available
  bool clipped = false;
};

ExchangeReport apply_bio_exchange(GridState& state, const GridSpec& grid,
                                  std::span<const MaterialRecord> materials,
                                  std::span<const double> dS_B, std::span<const double> f_L,
                                  double specific_storage);

/// Boundary rate converted to m^3/s of liquid for an element.
double liquid_rate_m3s(const BoundarySchedule& b, double value, const Element& element,
                       const PhaseProperties& phases);

}  // namespace retort
