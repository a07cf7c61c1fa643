#include "retort/equilibrium.hpp"

#include <cmath>

#include <fmt/format.h>

#include "retort/error.hpp"

namespace retort {

CompiledEquilibrium CompiledEquilibrium::compile(const EquilibriumSpec& spec, const SpeciesRegistry& reg) {
  auto resolve = [&](const std::string& name) {
    const auto k = reg.index_of(name);
    if (!k) throw DeckError(fmt::format("equilibrium '{}' references undeclared species '{}'", spec.name, name));
    return *k;
  };
  CompiledEquilibrium eq;
  eq.name = spec.name;
  eq.solved = resolve(spec.solved);
  eq.solved_exponent = spec.solved_exponent;
  for (const auto& p : spec.primaries) eq.primaries.push_back({resolve(p.species), p.value});
  eq.log10K_ref = spec.log10K;
  eq.T_ref = spec.reference_T;
  if (spec.second_point) {
    eq.has_second = true;
    eq.log10K_2 = spec.second_point->log10K;
    eq.T_2 = spec.second_point->temperature;
  }
  return eq;
}

double CompiledEquilibrium::log10K(double T) const {
  if (!has_second || T_2 == T_ref) return log10K_ref;
  const double slope = (log10K_2 - log10K_ref) / (1.0 / T_2 - 1.0 / T_ref);
  return log10K_ref + slope * (1.0 / T - 1.0 / T_ref);
}

double solve_secondary(const CompiledEquilibrium& eq, std::span<const double> X, double T) {
  double log_rhs = eq.log10K(T);
  for (const auto& p : eq.primaries) {
    if (p.exponent == 0.0) continue;
    if (!(X[p.species] > 0.0))
      throw SingularEquilibrium(fmt::format("equilibrium '{}': primary species {} is zero", eq.name, p.species));
    log_rhs -= p.exponent * std::log10(X[p.species]);
  }
  return std::pow(10.0, log_rhs / eq.solved_exponent);
}

double equilibrium_residual(const CompiledEquilibrium& eq, std::span<const double> X, double T) {
  double q = eq.solved_exponent * std::log10(X[eq.solved]);
  for (const auto& p : eq.primaries) q += p.exponent * std::log10(X[p.species]);
  return q - eq.log10K(T);
}

EquilibriumReport solve_equilibria(GridState& s, const GridSpec& g, std::span<const MaterialRecord> mats,
                                   const SpeciesRegistry& reg, std::span<const CompiledEquilibrium> eqs) {
  EquilibriumReport rep;
  if (eqs.empty()) return rep;
  std::vector<double> X(reg.size());
  for (std::size_t e = 0; e < g.size(); ++e) {
    if (g[e].atmosphere) continue;
    const double W = liquid_volume(s, g, mats, e);
    for (std::size_t k = 0; k < reg.size(); ++k) X[k] = concentration(s, g, mats, reg[k], e, k);
    for (const auto& eq : eqs) {
      double value = 0.0;
      try {
        value = solve_secondary(eq, X, s.temperature);
      } catch (const SingularEquilibrium&) {
        rep.singular.push_back({e, eq.name});
      }
      X[eq.solved] = value;
      const auto& sp = reg[eq.solved];
      s.amount_at(e, eq.solved) =
          sp.unit == ConcentrationUnit::Atm ? value : (W > 0.0 ? amount_from_concentration(value, W, sp.unit) : 0.0);
    }
  }
  return rep;
}

}  // namespace retort
