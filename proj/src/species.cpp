#include "retort/species.hpp"

namespace retort {

std::optional<std::size_t> SpeciesRegistry::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name == name) return i;
  }
  return std::nullopt;
}

std::string_view to_string(SpeciesKind kind) {
  switch (kind) {
    case SpeciesKind::PRI: return "PRI";
    case SpeciesKind::BIO: return "BIO";
    case SpeciesKind::SEC: return "SEC";
    case SpeciesKind::MIN: return "MIN";
    case SpeciesKind::GAS: return "GAS";
  }
  return "?";
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::L: return "L";
    case Phase::G: return "G";
    case Phase::B: return "B";
    case Phase::M: return "M";
  }
  return "?";
}

std::string_view to_string(ConcentrationUnit unit) {
  switch (unit) {
    case ConcentrationUnit::MolPerLitre: return "mol/L";
    case ConcentrationUnit::MgPerLitre: return "mg/L";
    case ConcentrationUnit::Atm: return "atm";
  }
  return "?";
}

std::optional<SpeciesKind> parse_species_kind(std::string_view text) {
  if (text == "PRI") return SpeciesKind::PRI;
  if (text == "BIO") return SpeciesKind::BIO;
  if (text == "SEC") return SpeciesKind::SEC;
  if (text == "MIN") return SpeciesKind::MIN;
  if (text == "GAS") return SpeciesKind::GAS;
  return std::nullopt;
}

std::optional<Phase> parse_phase(std::string_view text) {
  if (text == "L") return Phase::L;
  if (text == "G") return Phase::G;
  if (text == "B") return Phase::B;
  if (text == "M") return Phase::M;
  return std::nullopt;
}

std::optional<ConcentrationUnit> parse_concentration_unit(std::string_view text) {
  if (text == "mol/L") return ConcentrationUnit::MolPerLitre;
  if (text == "mg/L") return ConcentrationUnit::MgPerLitre;
  if (text == "atm") return ConcentrationUnit::Atm;
  return std::nullopt;
}

double concentration_from_amount(double amount, double liquid_volume, ConcentrationUnit unit) {
  switch (unit) {
    case ConcentrationUnit::MolPerLitre:
      return amount / (1000.0 * liquid_volume);
    case ConcentrationUnit::MgPerLitre:
      // kg -> mg is 1e6, m^3 -> L is 1e3
      return 1000.0 * amount / liquid_volume;
    case ConcentrationUnit::Atm:
      return amount;
  }
  return 0.0;
}

double amount_from_concentration(double concentration, double liquid_volume,
                                 ConcentrationUnit unit) {
  switch (unit) {
    case ConcentrationUnit::MolPerLitre:
      return concentration * 1000.0 * liquid_volume;
    case ConcentrationUnit::MgPerLitre:
      return concentration * liquid_volume / 1000.0;
    case ConcentrationUnit::Atm:
      return concentration;
  }
  return 0.0;
}

double amount_to_kg(double amount, const Species& species) {
  switch (species.unit) {
    case ConcentrationUnit::MolPerLitre:
      return amount * species.molar_mass;
    case ConcentrationUnit::MgPerLitre:
      return amount;
    case ConcentrationUnit::Atm:
      return 0.0;
  }
  return 0.0;
}

double mass_fraction_from_concentration(double concentration, const Species& species,
                                        double rho_L) {
  switch (species.unit) {
    case ConcentrationUnit::MolPerLitre:
      return concentration * 1000.0 * species.molar_mass / rho_L;
    case ConcentrationUnit::MgPerLitre:
      return concentration / 1000.0 / rho_L;
    case ConcentrationUnit::Atm:
      return 0.0;
  }
  return 0.0;
}

}  // namespace retort
