#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "retort/deck.hpp"
#include "retort/grid.hpp"

namespace retort {

/// State at one report time. Concentrations are [element * n_species + k] in
/// each species' declared unit.
struct Snapshot {
  double time = 0.0;
  double temperature = 0.0;
  std::vector<double> S_L, S_G, S_B, P_L;
  std::vector<double> concentration;
};

/// One row of flux.csv. Water columns are m^3; species columns are native
/// amounts (mol for mol/L species, kg for mg/L species).
struct FluxRow {
  double time = 0.0;
  double water_stored = 0.0;
  double water_in = 0.0;      // cumulative liquid sources and boundary inflow
  double water_out = 0.0;     // cumulative outflow through the column faces
  double water_uptake = 0.0;  // cumulative root uptake
  double water_immobilized = 0.0;
  double outflow_rate = 0.0;  // mean bottom outflow since the previous row, m^3/s
  double water_table_depth = 0.0;  // NaN when the bottom element is unsaturated
  std::vector<double> species_stored, species_in, species_out;
};

struct ProbeRow {
  double time = 0.0;
  std::string species;
  std::size_t element = 0;
  double value = 0.0;
  std::string unit;
};

struct RunOutputs {
  std::vector<std::string> species_names, species_units;
  std::vector<Snapshot> snapshots;
  std::vector<FluxRow> flux;
  std::vector<ProbeRow> probes;
  long steps = 0;
  double t_end = 0.0;
  double audit_worst = 0.0;
  std::string audit_worst_quantity;
  bool exchange_clipped = false;
  std::size_t singular_equilibria = 0;
  GridState final_state{0, 0};
};

struct RunOptions {
  /// Directory for the CSV files and checkpoint; empty keeps results in memory.
  std::filesystem::path out_dir;
  /// Checkpoint file to resume from.
  std::optional<std::filesystem::path> restart;
  /// Throw AuditFailure when a step's closure exceeds the deck tolerance.
  bool enforce_audit = true;
};

/// Initial state from the deck: saturations (or hydrostatic profile), species
/// amounts, biophase saturation from biophase species, pressures and solved
/// secondaries.
GridState initial_state(const SimulationDeck& deck);

/// Runs the deck from its initial state (or a checkpoint) to t_end. Order per
/// master step: flow, transport, chemotaxis, kinetics, biophase exchange,
/// equilibrium, audit. Outputs are written as they are produced when out_dir
/// is set, so a failing run leaves the rows up to the failure on disk.
RunOutputs run_simulation(const SimulationDeck& deck, const RunOptions& options = {});

/// Column names of flux.csv and the matching values of one row.
std::vector<std::string> flux_columns(const std::vector<std::string>& species_names,
                                      const std::vector<std::string>& species_units);
std::vector<double> flux_values(const FluxRow& row);

/// Writes grid.csv, timeseries.csv, flux.csv and probes.csv.
void write_outputs(const RunOutputs& outputs, const SimulationDeck& deck,
                   const std::filesystem::path& dir);

void write_checkpoint(const GridState& state, const std::filesystem::path& path);
GridState read_checkpoint(const std::filesystem::path& path, const SimulationDeck& deck);

/// Depth (m below the soil top) where liquid pressure crosses zero, searched
/// upward from the bottom element; NaN when the bottom element is unsaturated.
double water_table_depth(const GridState& state, const GridSpec& grid);

struct IsotopeRatio {
  double ratio = 0.0;  // R_S
  double delta = 0.0;  // per mil
};
inline constexpr double kR15Standard = 0.0229;
/// R_S = 15 [15N] / (14 [14N]); delta = (R_S / R_std - 1) 1000. Throws
/// DomainError when [14N] is zero.
IsotopeRatio compute_delta15N(double n14, double n15);
std::vector<IsotopeRatio> compute_delta15N(const std::vector<double>& n14,
                                           const std::vector<double>& n15);

}  // namespace retort
