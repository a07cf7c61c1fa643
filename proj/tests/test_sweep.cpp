#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "retort/deck.hpp"
#include "retort/error.hpp"
#include "retort/sweep.hpp"

using namespace retort;
namespace fs = std::filesystem;

namespace {

SimulationDeck decay_deck() { return load_deck(fs::path(RETORT_DECK_DIR) / "first_order_decay.deck"); }

RunOutputs fake_run(std::vector<double> stored) {
  RunOutputs r;
  for (std::size_t i = 0; i < stored.size(); ++i) {
    FluxRow row;
    row.time = 10.0 * (i + 1);
    row.water_stored = stored[i];
    r.flux.push_back(row);
    Snapshot snap;
    snap.time = row.time;
    r.snapshots.push_back(snap);
  }
  return r;
}

}  // namespace

TEST_CASE("targets resolve to deck fields") {
  auto d = load_deck(fs::path(RETORT_DECK_DIR) / "case1_synthetic.deck");
  CHECK(resolve_target(d, "material.*.k").size() == 4);
  CHECK(resolve_target(d, "material.silt.phi").size() == 1);
  CHECK(read_target(d, "solver.temperature") == std::vector<double>{285.15});
  CHECK_THROWS_AS(resolve_target(d, "material.clay.k"), TargetNotFound);
  CHECK_THROWS_AS(resolve_target(d, "material.*.colour"), TargetNotFound);
  CHECK_THROWS_AS(resolve_target(d, "reaction.none.rate"), TargetNotFound);
}

TEST_CASE("normal stream") {
  NormalStream a(7), b(7), c(8);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  bool differ = false;
  for (int i = 0; i < n; ++i) {
    const double x = a.next();
    CHECK(x == b.next());
    differ |= x != c.next();
    s += x;
    s2 += x * x;
  }
  CHECK(differ);
  CHECK(std::abs(s / n) < 0.01);
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("zero spread reproduces the base deck") {
  auto d = decay_deck();
  SweepSpec sp;
  sp.targets = {"reaction.decay.rate"};
  sp.replicas = 4;
  sp.rel_std = 0.0;
  auto reps = generate_replicas(d, sp);
  REQUIRE(reps.size() == 4);
  for (const auto& r : reps) CHECK(r == d);
}

TEST_CASE("grid mode converts value units") {
  auto d = decay_deck();
  SweepSpec sp;
  sp.mode = SweepMode::Grid;
  sp.targets = {"solver.temperature"};
  sp.values = {5, 20, 35};
  sp.value_unit = "C";
  auto reps = generate_replicas(d, sp);
  REQUIRE(reps.size() == 3);
  CHECK(reps[0].solver.temperature == doctest::Approx(278.15));
  CHECK(reps[2].solver.temperature == doctest::Approx(308.15));
  sp.value_unit = "furlong";
  CHECK_THROWS_AS(generate_replicas(d, sp), DeckError);
}

TEST_CASE("gaussian draws centre on the base value and stay admissible") {
  auto d = decay_deck();
  SweepSpec sp;
  sp.targets = {"reaction.decay.rate", "material.box.phi"};
  sp.replicas = 400;
  sp.rel_std = 0.5;
  sp.seed = 3;
  auto reps = generate_replicas(d, sp);
  double sum = 0.0;
  for (const auto& r : reps) {
    sum += r.reactions[0].rate;
    CHECK(r.reactions[0].rate >= 0.0);
    CHECK(r.materials[0].phi > 0.0);
    CHECK(r.materials[0].phi < 1.0);
  }
  CHECK(sum / reps.size() == doctest::Approx(2e-6).epsilon(0.15));
  CHECK(generate_replicas(d, sp) == reps);
}

TEST_CASE("ensemble statistics") {
  std::vector<RunOutputs> runs{fake_run({1.0, 5.0}), fake_run({3.0, 5.0})};
  auto e = summarize_ensemble(runs, "flux.water_stored_m3");
  REQUIRE(e.mean.size() == 2);
  CHECK(e.mean[0] == 2.0);
  CHECK(e.std[0] == 1.0);
  CHECK(e.std[1] == 0.0);
  std::reverse(runs.begin(), runs.end());
  auto r = summarize_ensemble(runs, "flux.water_stored_m3");
  CHECK(r.mean == e.mean);
  CHECK(r.std == e.std);

  runs.push_back(fake_run({1.0}));
  CHECK_THROWS_AS(summarize_ensemble(runs, "flux.water_stored_m3"), MismatchedTimes);
  CHECK_THROWS_AS(extract_series(runs[0], "flux.nothing"), TargetNotFound);
}

TEST_CASE("sweep runs are deterministic and independent of worker count") {
  auto d = decay_deck();
  SweepSpec sp;
  sp.targets = {"reaction.decay.rate"};
  sp.replicas = 6;
  sp.rel_std = 0.3;
  sp.seed = 11;
  sp.quantities = {"probe.A@0"};
  auto dir = fs::temp_directory_path() / "retort_test" / "sweep";
  fs::remove_all(dir);
  auto one = run_sweep(d, sp, dir, 1);
  auto three = run_sweep(d, sp, {}, 3);
  REQUIRE(one.summaries.size() == 1);
  CHECK(one.summaries[0].mean == three.summaries[0].mean);
  CHECK(one.summaries[0].std == three.summaries[0].std);
  CHECK(fs::exists(dir / "ensemble.csv"));
  CHECK(fs::exists(dir / "replicas.csv"));
  CHECK(fs::exists(dir / "replica_005" / "flux.csv"));
  // Each replica decays at its own drawn rate.
  for (std::size_t i = 0; i < one.runs.size(); ++i) {
    const auto a = extract_series(one.runs[i], "probe.A@0");
    const double k = one.decks[i].reactions[0].rate;
    CHECK(a.back() == doctest::Approx(1e-3 * std::exp(-k * d.solver.t_end)).epsilon(1e-6));
  }
}
