#pragma once

#include <span>
#include <string>
#include <vector>

#include "retort/deck.hpp"
#include "retort/grid.hpp"

namespace retort {

struct CompiledEquilibrium {
  struct Term {
    std::size_t species;
    double exponent;
  };
  std::string name;
  std::size_t solved = 0;
  double solved_exponent = 1.0;
  std::vector<Term> primaries;
  double log10K_ref = 0.0, T_ref = 298.15;
  bool has_second = false;
  double log10K_2 = 0.0, T_2 = 298.15;

  static CompiledEquilibrium compile(const EquilibriumSpec& spec, const SpeciesRegistry& registry);
  /// log10 K at temperature T; two-point van 't Hoff (linear in 1/T) when a
  /// second point is given, otherwise the constant value.
  double log10K(double T) const;
};

/// Secondary value from primaries; throws SingularEquilibrium when a primary is
/// exactly zero.
double solve_secondary(const CompiledEquilibrium& eq, std::span<const double> concentration, double T);

/// log10(X_k^x_k prod X_j^x_j / K).
double equilibrium_residual(const CompiledEquilibrium& eq, std::span<const double> concentration, double T);

struct EquilibriumReport {
  struct Flag {
    std::size_t element;
    std::string equilibrium;
  };
  std::vector<Flag> singular;
};

/// Solves every equilibrium in deck order in every soil element and stores the
/// secondaries. Singular cases set the secondary to zero and are flagged.
EquilibriumReport solve_equilibria(GridState& state, const GridSpec& grid,
                                   std::span<const MaterialRecord> materials,
                                   const SpeciesRegistry& registry,
                                   std::span<const CompiledEquilibrium> equilibria);

}  // namespace retort
