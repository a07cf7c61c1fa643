#pragma once

#include <span>
#include <vector>

#include "retort/deck.hpp"
#include "retort/flow.hpp"
#include "retort/grid.hpp"

namespace retort {

struct TransportSettings {
  double courant = 0.9;
  long max_substeps = 1000000;
  bool chemotaxis = true;
};

/// Amount moved per (element, species), [e * n_species + k]. `net` is the
/// internal exchange between elements (sums to zero over the column).
struct TransportReport {
  std::vector<double> net, in, out;
  long substeps = 0;
  void reset(std::size_t n_elements, std::size_t n_species);
};

/// Interface drift velocity (m/s, positive toward element j) of a BIO species
/// from its attractant and repellent gradients, using liquid mass fractions.
double chemotactic_velocity(std::size_t i, std::size_t j, const Species& bio, const GridState& state,
                            const GridSpec& grid, std::span<const MaterialRecord> materials,
                            const SpeciesRegistry& registry);

/// Dissolved PRI species: upwind advection with the flow step's interface
/// volumes, diffusion with D_eff = phi S_L D, liquid-source loads and outflow
/// losses. Explicit three-stage SSP Runge-Kutta with substeps under the Courant
/// limit; the liquid volume is interpolated linearly across the flow step.
void step_solute_transport(GridState& state, const GridSpec& grid,
                           std::span<const MaterialRecord> materials, const SpeciesRegistry& registry,
                           std::span<const BoundarySchedule> boundaries, const FlowStep& flow,
                           const TransportSettings& settings, TransportReport& report);

/// Liquid-phase BIO species: advection at detachment * v_L, diffusion with
/// D_beta and chemotactic drift frozen at the start of the step.
void step_bio_transport(GridState& state, const GridSpec& grid, std::span<const MaterialRecord> materials,
                        const SpeciesRegistry& registry, const FlowStep& flow,
                        const TransportSettings& settings, TransportReport& report);

/// Species-source boundaries, added directly (used when transport is off too).
void apply_species_sources(GridState& state, const SpeciesRegistry& registry,
                           std::span<const BoundarySchedule> boundaries, double t0, double dt,
                           TransportReport& report);

}  // namespace retort
