#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "retort/deck.hpp"
#include "retort/simulation.hpp"

namespace retort {

/// Deck parameter paths:
///   material.<name|*>.<k|phi|psi_s|b|S_Lr|S_Gr|rho_m|vg_alpha|vg_n>
///   reaction.<name>.rate
///   species.<name>.diffusivity
///   equilibrium.<name>.log10K
///   solver.temperature
/// A wildcard material path addresses every material.
std::vector<double*> resolve_target(SimulationDeck& deck, const std::string& path);
std::vector<double> read_target(const SimulationDeck& deck, const std::string& path);

/// N(0, 1) from a 64-bit Mersenne Twister: u1 = (x1 >> 11 + 1) 2^-53,
/// u2 = (x2 >> 11) 2^-53, z = sqrt(-2 ln u1) cos(2 pi u2).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed);
  double next();

 private:
  std::mt19937_64 rng_;
};

/// Gaussian mode: N decks with every resolved target drawn from
/// N(value, rel_std |value|), redrawn (at most 1000 times) outside the
/// parameter's physical bounds. Grid mode: one deck per listed value.
std::vector<SimulationDeck> generate_replicas(const SimulationDeck& deck, const SweepSpec& spec);

/// Series of one quantity at the run's report times:
///   flux.<column of flux.csv>
///   probe.<species>@<element>
///   state.<S_L|S_G|S_B|P_L_Pa|T_K|species>@<element>
std::vector<double> extract_series(const RunOutputs& run, const std::string& quantity);

struct EnsembleSeries {
  std::string quantity;
  std::vector<double> time, mean, std;
};

/// Pointwise mean and population standard deviation. Values are summed in
/// sorted order so the result does not depend on run order.
EnsembleSeries summarize_ensemble(std::span<const RunOutputs> runs, const std::string& quantity);

struct SweepResult {
  std::vector<SimulationDeck> decks;
  std::vector<RunOutputs> runs;
  std::vector<EnsembleSeries> summaries;
};

/// Runs every replica (each in <out_dir>/replica_NNN when out_dir is set) on up
/// to `workers` threads and writes ensemble.csv and replicas.csv.
SweepResult run_sweep(const SimulationDeck& deck, const SweepSpec& spec,
                      const std::filesystem::path& out_dir, int workers);

void write_ensemble(const std::vector<EnsembleSeries>& summaries, const std::filesystem::path& path);

}  // namespace retort
