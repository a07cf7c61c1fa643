#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "retort/hydraulics.hpp"
#include "retort/species.hpp"

namespace retort {

/// One finite volume. Elements form a vertical chain ordered top (0) to bottom.
struct Element {
  double volume = 1.0;  // m^3
  double area = 1.0;    // interface area, m^2
  double z = 0.0;       // centre elevation, m (up positive)
  double height = 1.0;  // m
  std::size_t material = 0;
  bool atmosphere = false;
  bool operator==(const Element&) const = default;
};

struct GridSpec {
  std::vector<Element> elements;

  std::size_t size() const { return elements.size(); }
  const Element& operator[](std::size_t i) const { return elements[i]; }
  /// Elevation of the top face of element 0.
  double top() const;
  /// Depth of an element centre below the top of the first soil element.
  double depth(std::size_t i) const;
  /// Centre-to-centre distance between neighbours i and i+1.
  double connection_distance(std::size_t upper) const;
  double interface_area(std::size_t upper) const;
  /// True when i and i+1 exchange liquid (both are soil elements).
  bool connected(std::size_t upper) const;
  bool operator==(const GridSpec&) const = default;
};

/// Constant phase properties for a run.
struct PhaseProperties {
  double rho_L = 1000.0;  // kg/m^3
  double rho_G = 1.2;     // kg/m^3
  double rho_B = 1025.0;  // kg/m^3
  double mu_L = 1.0e-3;   // Pa s
  double gravity = 9.81;  // m/s^2
  bool operator==(const PhaseProperties&) const = default;
};

/// Evolving per-element state. Species are held as native amounts (see
/// ConcentrationUnit); concentrations and mass fractions are views.
///
/// S_G is always 1 - S_L - S_B. `elastic` is liquid stored by compression in a
/// liquid-full element, as a fraction of pore volume; it is zero whenever
/// S_G > 0.
struct GridState {
  double time = 0.0;         // s
  double temperature = 293.15;  // K
  PhaseProperties phases;
  std::vector<double> S_L, S_G, S_B, P_L, elastic;
  std::size_t n_species = 0;
  std::vector<double> amount;  // [element * n_species + species]

  GridState() = default;
  GridState(std::size_t n_elements, std::size_t n_species);

  std::size_t size() const { return S_L.size(); }
  double& amount_at(std::size_t e, std::size_t k) { return amount[e * n_species + k]; }
  double amount_at(std::size_t e, std::size_t k) const { return amount[e * n_species + k]; }
  std::span<double> amounts(std::size_t e) { return {amount.data() + e * n_species, n_species}; }
  std::span<const double> amounts(std::size_t e) const {
    return {amount.data() + e * n_species, n_species};
  }
  bool operator==(const GridState&) const = default;
};

/// Liquid volume (m^3) held in element e, including elastic storage.
double liquid_volume(const GridState& state, const GridSpec& grid,
                     std::span<const MaterialRecord> materials, std::size_t e);

/// Concentration of species k in element e, in the species' declared unit.
double concentration(const GridState& state, const GridSpec& grid,
                     std::span<const MaterialRecord> materials, const Species& species,
                     std::size_t e, std::size_t k);

double mass_fraction(const GridState& state, const GridSpec& grid,
                     std::span<const MaterialRecord> materials, const Species& species,
                     std::size_t e, std::size_t k);

/// Throws SolverError when S_L + S_G + S_B departs from 1 by more than tol or a
/// saturation or amount leaves its admissible range.
void check_partition(const GridState& state, double tol = 1e-12);

/// Mass of a phase over all soil elements, kg: phi S rho V for L, G, B and
/// (1 - phi) rho_m V for M. Atmosphere elements are not part of the soil domain.
double total_phase_mass(const GridState& state, const GridSpec& grid,
                        std::span<const MaterialRecord> materials, Phase phase);

/// Running mass account. Quantity 0 is liquid water (kg); quantity 1 + k is
/// species k in its native amount.
struct LedgerEntry {
  double stored0 = 0.0;
  double stored = 0.0;
  double influx = 0.0;
  double outflux = 0.0;
  double produced = 0.0;
  double destroyed = 0.0;
  double transport_net = 0.0;  // per-element internal exchange; cancels globally
  bool operator==(const LedgerEntry&) const = default;
};

struct MassLedger {
  std::vector<std::string> names;
  std::size_t n_elements = 0;
  std::vector<LedgerEntry> cells;  // [element * names.size() + quantity]

  MassLedger() = default;
  MassLedger(std::vector<std::string> quantity_names, std::size_t n_elements);

  std::size_t n_quantities() const { return names.size(); }
  LedgerEntry& at(std::size_t e, std::size_t q) { return cells[e * names.size() + q]; }
  const LedgerEntry& at(std::size_t e, std::size_t q) const { return cells[e * names.size() + q]; }
  /// Sum over elements.
  LedgerEntry total(std::size_t q) const;

  void record_influx(std::size_t e, std::size_t q, double amount);
  void record_outflux(std::size_t e, std::size_t q, double amount);
  /// Signed reaction change: positive goes to produced, negative to destroyed.
  void record_reaction(std::size_t e, std::size_t q, double change);
  void record_transport(std::size_t e, std::size_t q, double net_in);
};

/// Relative closure error of one entry:
/// |stored - stored0 - (in - out + produced - destroyed + transport)| / scale.
double closure_error(const LedgerEntry& entry);

struct AuditReport {
  bool pass = true;
  double worst = 0.0;
  std::string worst_quantity;
  std::size_t worst_element = 0;
  std::vector<double> global_closure;  // per quantity
};

/// Global closure per quantity must be within tol_rel; the worst element is
/// reported alongside for diagnostics.
AuditReport audit_ledger(const MassLedger& ledger, double tol_rel);

}  // namespace retort
