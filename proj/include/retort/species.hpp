#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace retort {

enum class SpeciesKind { PRI, BIO, SEC, MIN, GAS };
enum class Phase { L, G, B, M };

/// Declared concentration unit of a species. Amounts held in GridState are in
/// the matching extensive quantity: mol for mol/L, kg for mg/L. Gas species in
/// atm hold their partial pressure directly.
enum class ConcentrationUnit { MolPerLitre, MgPerLitre, Atm };

struct ChemotaxisTerm {
  std::string species;
  double coefficient = 0.0;  // m^2/s
  bool operator==(const ChemotaxisTerm&) const = default;
};

struct BioProperties {
  double detachment = 0.0;  // epsilon, fraction of v_L
  double diffusion = 0.0;   // m^2/s
  double f_L = 0.0;         // water volume fraction of biomass
  double density = 1000.0;  // kg/m^3
  std::optional<double> T_LB, T_UB;    // K
  std::optional<double> SL_LB, SL_UB;  // liquid-saturation response bounds
  std::vector<ChemotaxisTerm> attractants;
  std::vector<ChemotaxisTerm> repellents;
  bool operator==(const BioProperties&) const = default;
};

struct Species {
  std::string name;
  SpeciesKind kind = SpeciesKind::PRI;
  Phase phase = Phase::L;
  ConcentrationUnit unit = ConcentrationUnit::MolPerLitre;
  double molar_mass = 0.0;   // kg/mol; zero marks a virtual tracer
  double diffusivity = 0.0;  // m^2/s
  std::optional<BioProperties> bio;

  bool is_primary() const { return kind == SpeciesKind::PRI || kind == SpeciesKind::BIO; }
  /// Species whose volume makes up the biological phase (S_B).
  bool occupies_biophase() const { return kind == SpeciesKind::BIO && phase == Phase::B; }
  bool operator==(const Species&) const = default;
};

struct SpeciesRegistry {
  std::vector<Species> entries;

  std::size_t size() const { return entries.size(); }
  const Species& operator[](std::size_t i) const { return entries[i]; }
  Species& operator[](std::size_t i) { return entries[i]; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool operator==(const SpeciesRegistry&) const = default;
};

std::string_view to_string(SpeciesKind kind);
std::string_view to_string(Phase phase);
std::string_view to_string(ConcentrationUnit unit);
std::optional<SpeciesKind> parse_species_kind(std::string_view text);
std::optional<Phase> parse_phase(std::string_view text);
std::optional<ConcentrationUnit> parse_concentration_unit(std::string_view text);

/// Concentration in the species' declared unit from the amount held in a
/// liquid volume (m^3).
double concentration_from_amount(double amount, double liquid_volume, ConcentrationUnit unit);
double amount_from_concentration(double concentration, double liquid_volume,
                                 ConcentrationUnit unit);

/// Mass in kg of a native amount; zero for virtual species held in mol.
double amount_to_kg(double amount, const Species& species);

/// Liquid-phase mass fraction, c = X rho_L / M (per litre for mol/L species).
double mass_fraction_from_concentration(double concentration, const Species& species,
                                        double rho_L);

}  // namespace retort
