#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retort/grid.hpp"
#include "retort/hydraulics.hpp"
#include "retort/series.hpp"
#include "retort/species.hpp"

namespace retort {

struct StoichTerm {
  std::string species;
  double coefficient = 0.0;  // negative for reactants
  bool operator==(const StoichTerm&) const = default;
};

/// (species, value) pair used for exponents and half-saturation constants.
struct RateTerm {
  std::string species;
  double value = 0.0;
  bool operator==(const RateTerm&) const = default;
};

/// Standard: K/(X+K). Literal: X/(X+K), the same shape as the Monod term.
enum class InhibitionForm { Standard, Literal };

struct ReactionSpec {
  std::string name;
  std::vector<StoichTerm> stoichiometry;
  double rate = 0.0;  // 1/s, composite with the term structure
  std::vector<RateTerm> norder;
  std::vector<RateTerm> mmm;
  std::vector<RateTerm> competition;
  std::vector<RateTerm> inhibition;
  std::optional<std::string> bio_actor;
  InhibitionForm inhibition_form = InhibitionForm::Standard;
  bool operator==(const ReactionSpec&) const = default;
};

struct VantHoffPoint {
  double temperature = 298.15;  // K
  double log10K = 0.0;
  bool operator==(const VantHoffPoint&) const = default;
};

/// Mass-action law K = X_k^x_k * prod X_j^x_j for one solved secondary.
struct EquilibriumSpec {
  std::string name;
  std::string solved;
  double solved_exponent = 1.0;
  std::vector<RateTerm> primaries;  // (species, exponent)
  double log10K = 0.0;              // at the run temperature, or at reference_T
  std::optional<VantHoffPoint> second_point;
  double reference_T = 298.15;
  bool operator==(const EquilibriumSpec&) const = default;
};

/// Element selection for initial conditions.
struct Selector {
  enum class Kind { All, Elements, Depth };
  Kind kind = Kind::All;
  std::size_t first = 0, last = 0;  // inclusive element range
  double top = 0.0, bottom = 0.0;   // depth range of element centres, m
  bool contains(const GridSpec& grid, std::size_t e) const;
  bool operator==(const Selector&) const = default;
};

struct InitialSaturation {
  double value = 0.0;
  Selector where;
  bool operator==(const InitialSaturation&) const = default;
};

struct InitialConcentration {
  std::string species;
  double value = 0.0;  // in the species' declared unit
  Selector where;
  bool operator==(const InitialConcentration&) const = default;
};

struct InitialState {
  std::vector<InitialSaturation> saturation;
  /// Depth of the water table below the soil top, m. When set, elements start
  /// in hydrostatic equilibrium with it and `saturation` entries are ignored.
  std::optional<double> water_table_depth;
  std::vector<InitialConcentration> concentrations;
  bool operator==(const InitialState&) const = default;
};

enum class BoundaryType { Liquid, Species, Uptake, FreeDrainage, Head };

/// Liquid rates: m3/s, m/s (per element area), mm/day, kg/s.
/// Species rates: mol/s, kg/s, mg/s.
enum class RateUnit { M3PerS, MPerS, MmPerDay, KgPerS, MolPerS, MgPerS };

struct SeriesSource {
  std::string file;
  std::size_t column = 1;
  double time_scale = 86400.0;  // seconds per file time unit
  bool operator==(const SeriesSource&) const = default;
};

struct UptakeShare {
  std::size_t element = 0;
  double fraction = 0.0;
  bool operator==(const UptakeShare&) const = default;
};

enum class Face { Top, Bottom };

struct BoundarySchedule {
  BoundaryType type = BoundaryType::Liquid;
  std::size_t element = 0;
  std::string species;          // Species type only
  double rate = 1.0;            // in `unit`; scales the series when one is given
  RateUnit unit = RateUnit::M3PerS;
  double start = 0.0;           // s
  double end = std::numeric_limits<double>::infinity();  // s
  std::optional<SeriesSource> source;
  std::vector<std::pair<double, double>> points;  // inline series (s, value)
  TimeSeries series;  // resolved samples from `source` or `points`; not serialized
  std::vector<RateTerm> carried;      // concentrations carried by a liquid source
  std::vector<UptakeShare> uptake;    // root-uptake distribution
  double pressure_head = 0.0;         // Head type: m of water at the face
  Face face = Face::Bottom;

  /// Rate multiplier at time t, including the active window.
  double factor(double t) const;
  /// Integral of factor over [t0, t1].
  double factor_integral(double t0, double t1) const;
  bool operator==(const BoundarySchedule&) const = default;
};

struct SolverSettings {
  double t_end = 86400.0;
  double temperature = 293.15;
  double dt_init = 60.0;
  double dt_min = 1e-6;
  double dt_max = 3600.0;
  int max_picard_iters = 40;
  double picard_tol_pressure = 1e-2;    // Pa
  double picard_tol_saturation = 1e-9;
  double audit_tol = 1e-6;
  double kinetics_rtol = 1e-8;
  double kinetics_atol = 1e-30;
  double courant = 0.9;
  long max_substeps = 1000000;
  double specific_storage = 1e-9;  // 1/Pa
  PhaseProperties phases;
  bool flow = true;
  bool transport = true;
  bool chemotaxis = true;
  bool kinetics = true;
  bool equilibrium = true;
  bool operator==(const SolverSettings&) const = default;
};

struct Probe {
  std::string species;
  std::size_t element = 0;
  bool operator==(const Probe&) const = default;
};

struct OutputSpec {
  std::optional<double> interval;  // s
  std::vector<double> times;       // s, strictly increasing
  bool every_step = false;
  std::vector<Probe> probes;
  std::string dir;
  /// Report times up to t_end (always includes t_end).
  std::vector<double> report_times(double t_end) const;
  bool operator==(const OutputSpec&) const = default;
};

enum class SweepMode { Gaussian, Grid };

struct SweepSpec {
  SweepMode mode = SweepMode::Gaussian;
  std::vector<std::string> targets;
  int replicas = 1;
  double rel_std = 0.0;
  std::uint64_t seed = 1;
  std::vector<double> values;
  std::string value_unit;
  std::vector<std::string> quantities;
  int workers = 1;
  bool operator==(const SweepSpec&) const = default;
};

struct SimulationDeck {
  GridSpec grid;
  std::vector<MaterialRecord> materials;
  SpeciesRegistry species;
  std::vector<ReactionSpec> reactions;
  std::vector<EquilibriumSpec> equilibria;
  InitialState initial;
  std::vector<BoundarySchedule> boundaries;
  SolverSettings solver;
  OutputSpec outputs;
  std::optional<SweepSpec> sweep;
  bool operator==(const SimulationDeck&) const = default;
};

enum class Severity { Error, Warning, Note };

struct Diagnostic {
  std::string file;
  int line = 0;
  int column = 0;
  Severity severity = Severity::Error;
  std::string message;
  /// `file:line:col: severity: message`
  std::string format() const;
};

struct ParseResult {
  std::optional<SimulationDeck> deck;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return deck.has_value(); }
  std::size_t error_count() const;
};

struct ParseOptions {
  std::string file_name = "<deck>";
  /// Directory auxiliary series files are resolved against. Empty skips
  /// loading them (the deck still parses; series stay unresolved).
  std::optional<std::filesystem::path> base_dir;
};

/// Total: never throws on malformed text. A deck is returned only when no
/// error-severity diagnostic was raised.
ParseResult parse_deck(std::string_view text, const ParseOptions& options = {});

/// Reads and parses a deck file; throws IoError or DeckError (with all
/// diagnostics in the message).
SimulationDeck load_deck(const std::filesystem::path& path);

/// Deck text that reparses to an identical SimulationDeck.
std::string serialize_deck(const SimulationDeck& deck);

/// Semantic checks on an assembled deck (also run by parse_deck). Returns
/// diagnostics without line information.
std::vector<Diagnostic> validate_deck(const SimulationDeck& deck);

/// Molar-mass weighted stoichiometric imbalance check. Species in mg/L count
/// 1e-6 kg per unit coefficient; species with zero molar mass are skipped.
std::vector<std::string> validate_reaction_balance(const ReactionSpec& spec,
                                                   const SpeciesRegistry& registry);

/// Resolves `source` series against base_dir for every boundary.
void resolve_series(SimulationDeck& deck, const std::filesystem::path& base_dir);

std::string_view to_string(RateUnit unit);
std::optional<RateUnit> parse_rate_unit(std::string_view text);
std::string_view to_string(BoundaryType type);

}  // namespace retort
