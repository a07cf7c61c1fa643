#include "retort/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "retort/error.hpp"

namespace retort {

double GridSpec::top() const {
  for (const auto& e : elements) {
    if (!e.atmosphere) return e.z + 0.5 * e.height;
  }
  return elements.empty() ? 0.0 : elements.front().z + 0.5 * elements.front().height;
}

double GridSpec::depth(std::size_t i) const { return top() - elements[i].z; }

double GridSpec::connection_distance(std::size_t upper) const {
  const auto& a = elements[upper];
  const auto& b = elements[upper + 1];
  return 0.5 * (a.height + b.height);
}

double GridSpec::interface_area(std::size_t upper) const {
  return std::min(elements[upper].area, elements[upper + 1].area);
}

bool GridSpec::connected(std::size_t upper) const {
  return upper + 1 < elements.size() && !elements[upper].atmosphere &&
         !elements[upper + 1].atmosphere;
}

GridState::GridState(std::size_t n_elements, std::size_t n_sp)
    : S_L(n_elements, 0.0),
      S_G(n_elements, 1.0),
      S_B(n_elements, 0.0),
      P_L(n_elements, 0.0),
      elastic(n_elements, 0.0),
      n_species(n_sp),
      amount(n_elements * n_sp, 0.0) {}

double liquid_volume(const GridState& state, const GridSpec& grid,
                     std::span<const MaterialRecord> materials, std::size_t e) {
  const auto& el = grid[e];
  return materials[el.material].phi * el.volume * (state.S_L[e] + state.elastic[e]);
}

double concentration(const GridState& state, const GridSpec& grid,
                     std::span<const MaterialRecord> materials, const Species& species,
                     std::size_t e, std::size_t k) {
  const double W = liquid_volume(state, grid, materials, e);
  const double a = state.amount_at(e, k);
  if (species.unit == ConcentrationUnit::Atm) return a;
  if (W <= 0.0) return 0.0;
  return concentration_from_amount(a, W, species.unit);
}

double mass_fraction(const GridState& state, const GridSpec& grid,
                     std::span<const MaterialRecord> materials, const Species& species,
                     std::size_t e, std::size_t k) {
  return mass_fraction_from_concentration(
      concentration(state, grid, materials, species, e, k), species, state.phases.rho_L);
}

void check_partition(const GridState& state, double tol) {
  for (std::size_t e = 0; e < state.size(); ++e) {
    const double sum = state.S_L[e] + state.S_G[e] + state.S_B[e];
    if (std::abs(sum - 1.0) > tol) {
      throw SolverError(fmt::format("saturations in element {} sum to {:.17g}", e, sum));
    }
    for (double s : {state.S_L[e], state.S_G[e], state.S_B[e]}) {
      if (s < -tol || s > 1.0 + tol || !std::isfinite(s)) {
        throw SolverError(fmt::format("saturation {:.17g} out of range in element {}", s, e));
      }
    }
  }
  for (std::size_t i = 0; i < state.amount.size(); ++i) {
    if (!(state.amount[i] >= 0.0)) {
      throw SolverError(fmt::format("negative or non-finite amount {:.17g} (element {}, species {})",
                                    state.amount[i], i / std::max<std::size_t>(state.n_species, 1),
                                    i % std::max<std::size_t>(state.n_species, 1)));
    }
  }
}

double total_phase_mass(const GridState& state, const GridSpec& grid,
                        std::span<const MaterialRecord> materials, Phase phase) {
  double total = 0.0;
  for (std::size_t e = 0; e < grid.size(); ++e) {
    const auto& el = grid[e];
    if (el.atmosphere) continue;
    const auto& mat = materials[el.material];
    switch (phase) {
      case Phase::L:
        total += mat.phi * (state.S_L[e] + state.elastic[e]) * state.phases.rho_L * el.volume;
        break;
      case Phase::G:
        total += mat.phi * state.S_G[e] * state.phases.rho_G * el.volume;
        break;
      case Phase::B:
        total += mat.phi * state.S_B[e] * state.phases.rho_B * el.volume;
        break;
      case Phase::M:
        total += (1.0 - mat.phi) * mat.rho_m * el.volume;
        break;
    }
  }
  return total;
}

MassLedger::MassLedger(std::vector<std::string> quantity_names, std::size_t n_el)
    : names(std::move(quantity_names)), n_elements(n_el), cells(n_el * names.size()) {}

LedgerEntry MassLedger::total(std::size_t q) const {
  LedgerEntry sum;
  for (std::size_t e = 0; e < n_elements; ++e) {
    const auto& c = at(e, q);
    sum.stored0 += c.stored0;
    sum.stored += c.stored;
    sum.influx += c.influx;
    sum.outflux += c.outflux;
    sum.produced += c.produced;
    sum.destroyed += c.destroyed;
    sum.transport_net += c.transport_net;
  }
  return sum;
}

void MassLedger::record_influx(std::size_t e, std::size_t q, double amount) {
  at(e, q).influx += amount;
}

void MassLedger::record_outflux(std::size_t e, std::size_t q, double amount) {
  at(e, q).outflux += amount;
}

void MassLedger::record_reaction(std::size_t e, std::size_t q, double change) {
  if (change >= 0.0)
    at(e, q).produced += change;
  else
    at(e, q).destroyed -= change;
}

void MassLedger::record_transport(std::size_t e, std::size_t q, double net_in) {
  at(e, q).transport_net += net_in;
}

double closure_error(const LedgerEntry& c) {
  const double expected = c.stored0 + c.influx - c.outflux + c.produced - c.destroyed +
                          c.transport_net;
  const double scale = std::max({std::abs(c.stored0), std::abs(c.stored), c.influx, c.outflux,
                                 c.produced, c.destroyed});
  if (scale == 0.0) return 0.0;
  return std::abs(c.stored - expected) / scale;
}

AuditReport audit_ledger(const MassLedger& ledger, double tol_rel) {
  AuditReport report;
  report.global_closure.resize(ledger.n_quantities(), 0.0);
  double worst_local = -1.0;
  for (std::size_t q = 0; q < ledger.n_quantities(); ++q) {
    const double err = closure_error(ledger.total(q));
    report.global_closure[q] = err;
    if (report.worst_quantity.empty() || err > report.worst) {
      report.worst = err;
      report.worst_quantity = ledger.names[q];
    }
    if (err > tol_rel) report.pass = false;
  }
  // Locate the element contributing most to the worst quantity.
  if (!report.worst_quantity.empty()) {
    const auto q = static_cast<std::size_t>(
        std::find(ledger.names.begin(), ledger.names.end(), report.worst_quantity) -
        ledger.names.begin());
    for (std::size_t e = 0; e < ledger.n_elements; ++e) {
      const double err = closure_error(ledger.at(e, q));
      if (err > worst_local) {
        worst_local = err;
        report.worst_element = e;
      }
    }
  }
  return report;
}

}  // namespace retort
