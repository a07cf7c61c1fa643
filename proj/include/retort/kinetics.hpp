#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "retort/deck.hpp"
#include "retort/grid.hpp"

namespace retort {

/// Bounds of the microbial response functions. Absent bounds leave the
/// corresponding factor at 1.
struct ResponseParams {
  std::optional<double> T_LB, T_UB;    // K
  std::optional<double> SL_LB, SL_UB;
  double S_Lr = 0.0, S_Gr = 0.0;

  static ResponseParams from(const BioProperties& bio, const MaterialRecord& mat);
};

/// Saturations seen by the gate. S_B_liquid is the water held in the
/// biophase, sum of f_L S_B over biophase species.
struct GateSaturations {
  double S_L = 0.0, S_G = 0.0, S_B = 0.0;
  double S_B_liquid = 0.0;
};

double response_biophase(const GateSaturations& s, const ResponseParams& p);
double response_temperature(double T, const ResponseParams& p);
/// Unnormalized liquid-saturation response.
double response_liquid(double S_L, const ResponseParams& p);
/// Largest value of response_liquid, reached at sqrt(SL_LB * SL_UB).
double response_liquid_max(const ResponseParams& p);

/// min{f(S_B), f(T), f(S_L)/max f(S_L)} clamped to [0, 1].
double microbial_gate(const GateSaturations& s, double T, const ResponseParams& p);

/// Reaction with species resolved to registry indices.
struct CompiledReaction {
  struct Term {
    std::size_t species;
    double value;
  };
  std::vector<Term> stoichiometry, norder, mmm, competition, inhibition;
  double rate = 0.0;
  std::optional<std::size_t> actor;
  InhibitionForm inhibition_form = InhibitionForm::Standard;

  static CompiledReaction compile(const ReactionSpec& spec, const SpeciesRegistry& registry);
};

/// R = r f_B prod X^n prod X/(X + K (1 + sum X_c/K_c)) prod K_i/(X_i + K_i), on
/// concentrations in declared units indexed by registry position.
double reaction_velocity(const CompiledReaction& reaction, std::span<const double> concentration,
                         double f_B);
double reaction_velocity(const ReactionSpec& spec, const SpeciesRegistry& registry,
                         std::span<const double> concentration, double f_B);

struct KineticsSettings {
  double rtol = 1e-8;
  double atol = 1e-30;
  double negative_tol = 1e-12;
};

/// Embedded Dormand-Prince 5(4) integration of dX/dt = f(t, X) over [0, dt].
/// A step that drives any component below -negative_tol is rejected and
/// halved; accepted results are clipped at zero. Throws StiffnessFailure when
/// the step size collapses.
struct OdeStats {
  long accepted = 0, rejected = 0;
};
using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;
OdeStats integrate_dopri5(std::vector<double>& y, double dt, const KineticsSettings& settings,
                          const OdeRhs& rhs);

struct KineticsReport {
  std::vector<double> delta_amount;  // [e * n_species + k], native amount
  std::vector<double> dS_B;          // [e * n_biophase + j]
  std::vector<double> f_L;           // per biophase species
  std::vector<std::size_t> biophase; // registry index per biophase species
  long steps = 0;
};

/// Integrates every reaction in every soil element over dt. Concentrations use
/// the liquid volume at the start of the step; the gate tracks biophase
/// saturation as biomass grows inside the step. Amounts are updated in place;
/// saturations are left for apply_bio_exchange.
KineticsReport step_kinetics(GridState& state, const GridSpec& grid,
                             std::span<const MaterialRecord> materials,
                             const SpeciesRegistry& registry,
                             std::span<const CompiledReaction> reactions, double dt,
                             const KineticsSettings& settings);

}  // namespace retort
