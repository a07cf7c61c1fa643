#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "retort/deck.hpp"
#include "retort/error.hpp"
#include "retort/log.hpp"
#include "retort/simulation.hpp"
#include "retort/sweep.hpp"

namespace fs = std::filesystem;
using namespace retort;

namespace {

fs::path out_dir(const std::string& flag, const SimulationDeck* deck) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("RETORT_OUT"); env && *env) return env;
  if (deck && !deck->outputs.dir.empty()) return deck->outputs.dir;
  return "out";
}

int cmd_check(const std::string& path) {
  const auto deck = load_deck(path);
  for (const auto& r : deck.reactions)
    for (const auto& w : validate_reaction_balance(r, deck.species)) log::warn("{}", w);
  std::cout << fmt::format("OK: {} elements, {} materials, {} species, {} reactions, {} equilibria, {} boundaries\n",
                           deck.grid.size(), deck.materials.size(), deck.species.size(), deck.reactions.size(),
                           deck.equilibria.size(), deck.boundaries.size());
  return exit_code::kOk;
}

int cmd_run(const std::string& path, const std::string& out_flag, const std::string& restart) {
  const auto deck = load_deck(path);
  RunOptions opt;
  opt.out_dir = out_dir(out_flag, &deck);
  if (!restart.empty()) opt.restart = restart;
  const auto res = run_simulation(deck, opt);
  std::cout << fmt::format("done: {} steps, t = {} s, audit worst {:.3e} ({}){}, outputs in {}\n", res.steps,
                           res.final_state.time, res.audit_worst, res.audit_worst_quantity,
                           res.exchange_clipped ? ", biophase exchange clipped" : "", opt.out_dir.string());
  return exit_code::kOk;
}

int cmd_sweep(const std::string& path, const std::string& out_flag, int workers, std::optional<std::uint64_t> seed) {
  const auto deck = load_deck(path);
  if (!deck.sweep) throw DeckError(fmt::format("{}: no [SWEEP] block", path));
  auto spec = *deck.sweep;
  if (seed) spec.seed = *seed;
  const int w = workers > 0 ? workers : spec.workers;
  const auto dir = out_dir(out_flag, &deck);
  const auto res = run_sweep(deck, spec, dir, w);
  long steps = 0;
  for (const auto& r : res.runs) steps += r.steps;
  std::cout << fmt::format("done: {} replicas, {} steps, seed {}, outputs in {}\n", res.runs.size(), steps, spec.seed,
                           dir.string());
  return exit_code::kOk;
}

int cmd_iso(const std::string& timeseries, const std::string& n14, const std::string& n15, long element,
            const std::string& out_flag) {
  std::ifstream in(timeseries);
  if (!in) throw IoError(fmt::format("cannot read {}", timeseries));
  auto split = [](const std::string& line) {
    std::vector<std::string> v;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(item);
    return v;
  };
  std::string line;
  if (!std::getline(in, line)) throw InputError(fmt::format("{}: empty file", timeseries));
  const auto header = split(line);
  auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto& h = header[i];
      if (h == name || h.substr(0, h.find('[')) == name) return i;
    }
    throw InputError(fmt::format("{}: no column '{}'", timeseries, name));
  };
  const auto c_t = column("time_s"), c_e = column("element"), c14 = column(n14), c15 = column(n15);
  const auto dir = out_dir(out_flag, nullptr);
  fs::create_directories(dir);
  const auto path = dir / "delta15N.csv";
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << "time_s,element,R_S,delta15N_permil\n";
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw InputError(fmt::format("{}: ragged row '{}'", timeseries, line));
    if (element >= 0 && std::stol(f[c_e]) != element) continue;
    const auto r = compute_delta15N(std::stod(f[c14]), std::stod(f[c15]));
    out << f[c_t] << ',' << f[c_e] << ',' << fmt::format("{},{}", r.ratio, r.delta) << '\n';
    ++rows;
  }
  std::cout << fmt::format("done: {} rows in {}\n", rows, path.string());
  return exit_code::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"retort: 1-D/0-D bioreactive transport simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only report errors");
  app.add_flag("-v,--verbose", verbose, "Report solver progress");

  std::string deck, out, restart, timeseries, n14, n15;
  int workers = 0;
  std::uint64_t seed = 0;
  long element = -1;

  auto* check = app.add_subcommand("check", "Validate a deck");
  check->add_option("--deck", deck, "Deck file")->required();
  auto* run = app.add_subcommand("run", "Run one simulation");
  run->add_option("--deck", deck, "Deck file")->required();
  run->add_option("--out", out, "Output directory (default $RETORT_OUT, the deck's dir, or ./out)");
  run->add_option("--restart", restart, "Resume from a checkpoint.csv");
  auto* sweep = app.add_subcommand("sweep", "Run the deck's [SWEEP] ensemble");
  sweep->add_option("--deck", deck, "Deck file")->required();
  sweep->add_option("--out", out, "Output directory");
  sweep->add_option("--workers", workers, "Concurrent replicas (default from the deck)")->check(CLI::PositiveNumber);
  auto* seed_opt = sweep->add_option("--seed", seed, "Override the deck's seed");
  auto* iso = app.add_subcommand("iso", "delta15N of a timeseries.csv");
  iso->add_option("--timeseries", timeseries, "timeseries.csv from a run")->required();
  iso->add_option("--n14", n14, "14N nitrate column")->required();
  iso->add_option("--n15", n15, "15N nitrate column")->required();
  iso->add_option("--element", element, "Only this element");
  iso->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_code::kOk : exit_code::kUsage;
  }
  log::set_level(quiet ? log::Level::Quiet : verbose ? log::Level::Verbose : log::Level::Normal);

  try {
    if (*check) return cmd_check(deck);
    if (*run) return cmd_run(deck, out, restart);
    if (*sweep) return cmd_sweep(deck, out, workers, *seed_opt ? std::optional(seed) : std::nullopt);
    if (*iso) return cmd_iso(timeseries, n14, n15, element, out);
  } catch (const Error& e) {
    log::error("{}", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    log::error("{}", e.what());
    return exit_code::kIo;
  }
  return exit_code::kUsage;
}
