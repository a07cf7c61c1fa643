#include "retort/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include <fmt/format.h>

#include "retort/error.hpp"
#include "retort/log.hpp"

namespace retort {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto p = s.find(sep, start);
    out.push_back(s.substr(start, p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

double* material_field(MaterialRecord& m, const std::string& f) {
  if (f == "k") return &m.k;
  if (f == "phi") return &m.phi;
  if (f == "psi_s") return &m.psi_s;
  if (f == "b") return &m.b;
  if (f == "S_Lr") return &m.S_Lr;
  if (f == "S_Gr") return &m.S_Gr;
  if (f == "rho_m") return &m.rho_m;
  if (f == "vg_alpha") return &m.vg_alpha;
  if (f == "vg_n") return &m.vg_n;
  return nullptr;
}

// Whether a drawn value is physically admissible for the addressed field.
bool admissible(const std::string& path, double v) {
  if (!std::isfinite(v)) return false;
  const auto parts = split(path, '.');
  const std::string& field = parts.back();
  if (parts[0] == "material") {
    if (field == "psi_s") return v < 0.0;
    if (field == "phi") return v > 0.0 && v < 1.0;
    if (field == "S_Lr" || field == "S_Gr") return v >= 0.0 && v < 1.0;
    if (field == "vg_n") return v > 1.0;
    return v > 0.0;
  }
  if (parts[0] == "solver") return v > 0.0;
  if (parts[0] == "equilibrium") return true;
  return v >= 0.0;
}

double value_in_si(double v, const std::string& unit) {
  if (unit.empty() || unit == "K" || unit == "s") return v;
  if (unit == "C") return v + 273.15;
  if (unit == "min") return v * 60.0;
  if (unit == "h") return v * 3600.0;
  if (unit == "d") return v * 86400.0;
  throw DeckError(fmt::format("unknown sweep value unit '{}'", unit));
}

std::pair<std::string, std::size_t> at_element(const std::string& s, const std::string& quantity) {
  const auto p = s.rfind('@');
  if (p == std::string::npos) throw TargetNotFound(fmt::format("quantity '{}' needs @<element>", quantity));
  try {
    std::size_t used = 0;
    const auto e = std::stoul(s.substr(p + 1), &used);
    if (used != s.size() - p - 1) throw std::invalid_argument("trailing");
    return {s.substr(0, p), e};
  } catch (const std::logic_error&) {
    throw TargetNotFound(fmt::format("quantity '{}': bad element index", quantity));
  }
}

double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

std::vector<double*> resolve_target(SimulationDeck& d, const std::string& path) {
  const auto parts = split(path, '.');
  std::vector<double*> out;
  auto missing = [&]() { return TargetNotFound(fmt::format("sweep target '{}' does not resolve in the deck", path)); };
  if (parts.size() == 3 && parts[0] == "material") {
    for (auto& m : d.materials) {
      if (parts[1] != "*" && m.name != parts[1]) continue;
      double* f = material_field(m, parts[2]);
      if (!f) throw missing();
      out.push_back(f);
    }
  } else if (parts.size() == 3 && parts[0] == "reaction" && parts[2] == "rate") {
    for (auto& r : d.reactions)
      if (r.name == parts[1]) out.push_back(&r.rate);
  } else if (parts.size() == 3 && parts[0] == "species" && parts[2] == "diffusivity") {
    for (auto& s : d.species.entries)
      if (s.name == parts[1]) out.push_back(&s.diffusivity);
  } else if (parts.size() == 3 && parts[0] == "equilibrium" && parts[2] == "log10K") {
    for (auto& e : d.equilibria)
      if (e.name == parts[1]) out.push_back(&e.log10K);
  } else if (parts.size() == 2 && parts[0] == "solver" && parts[1] == "temperature") {
    out.push_back(&d.solver.temperature);
  }
  if (out.empty()) throw missing();
  return out;
}

std::vector<double> read_target(const SimulationDeck& deck, const std::string& path) {
  auto copy = deck;
  std::vector<double> out;
  for (double* p : resolve_target(copy, path)) out.push_back(*p);
  return out;
}

NormalStream::NormalStream(std::uint64_t seed) : rng_(seed) {}

double NormalStream::next() {
  constexpr double scale = 0x1.0p-53;
  const double u1 = static_cast<double>((rng_() >> 11) + 1) * scale;
  const double u2 = static_cast<double>(rng_() >> 11) * scale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<SimulationDeck> generate_replicas(const SimulationDeck& deck, const SweepSpec& spec) {
  std::vector<SimulationDeck> out;
  if (spec.mode == SweepMode::Grid) {
    for (double v : spec.values) {
      auto d = deck;
      const double si = value_in_si(v, spec.value_unit);
      for (const auto& t : spec.targets)
        for (double* p : resolve_target(d, t)) *p = si;
      out.push_back(std::move(d));
    }
    return out;
  }
  // Resolve every target once up front so a bad path fails before any draw.
  {
    auto probe = deck;
    for (const auto& t : spec.targets) resolve_target(probe, t);
  }
  NormalStream normal(spec.seed);
  for (int r = 0; r < spec.replicas; ++r) {
    auto d = deck;
    for (const auto& t : spec.targets) {
      for (double* p : resolve_target(d, t)) {
        const double mean = *p;
        const double sd = spec.rel_std * std::abs(mean);
        if (sd == 0.0) continue;
        int tries = 0;
        double v = 0.0;
        do {
          if (++tries > 1000)
            throw DeckError(fmt::format("sweep target '{}': 1000 draws outside the admissible range", t));
          v = mean + sd * normal.next();
        } while (!admissible(t, v));
        *p = v;
      }
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<double> extract_series(const RunOutputs& run, const std::string& quantity) {
  const auto dot = quantity.find('.');
  if (dot == std::string::npos) throw TargetNotFound(fmt::format("unknown quantity '{}'", quantity));
  const std::string kind = quantity.substr(0, dot), rest = quantity.substr(dot + 1);
  std::vector<double> out;
  auto species_index = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(run.species_names.begin(), run.species_names.end(), name);
    if (it == run.species_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - run.species_names.begin());
  };
  const std::size_t ns = run.species_names.size();
  if (kind == "flux") {
    const auto cols = flux_columns(run.species_names, run.species_units);
    const auto it = std::find(cols.begin(), cols.end(), rest);
    if (it == cols.end()) throw TargetNotFound(fmt::format("flux.csv has no column '{}'", rest));
    const auto c = static_cast<std::size_t>(it - cols.begin());
    for (const auto& row : run.flux) out.push_back(flux_values(row)[c]);
    return out;
  }
  if (kind == "probe" || kind == "state") {
    const auto [name, e] = at_element(rest, quantity);
    for (const auto& s : run.snapshots) {
      if (e >= s.S_L.size()) throw TargetNotFound(fmt::format("quantity '{}': no element {}", quantity, e));
      if (kind == "state" && name == "S_L") out.push_back(s.S_L[e]);
      else if (kind == "state" && name == "S_G") out.push_back(s.S_G[e]);
      else if (kind == "state" && name == "S_B") out.push_back(s.S_B[e]);
      else if (kind == "state" && name == "P_L_Pa") out.push_back(s.P_L[e]);
      else if (kind == "state" && name == "T_K") out.push_back(s.temperature);
      else if (auto k = species_index(name)) out.push_back(s.concentration[e * ns + *k]);
      else throw TargetNotFound(fmt::format("quantity '{}': unknown column '{}'", quantity, name));
    }
    return out;
  }
  throw TargetNotFound(fmt::format("unknown quantity '{}'", quantity));
}

EnsembleSeries summarize_ensemble(std::span<const RunOutputs> runs, const std::string& quantity) {
  EnsembleSeries out;
  out.quantity = quantity;
  if (runs.empty()) return out;
  for (const auto& s : runs[0].snapshots) out.time.push_back(s.time);
  std::vector<std::vector<double>> series;
  for (const auto& r : runs) {
    if (r.snapshots.size() != out.time.size())
      throw MismatchedTimes(fmt::format("ensemble runs report {} and {} times", out.time.size(), r.snapshots.size()));
    for (std::size_t i = 0; i < out.time.size(); ++i)
      if (r.snapshots[i].time != out.time[i])
        throw MismatchedTimes(fmt::format("ensemble runs disagree at report {}", i));
    series.push_back(extract_series(r, quantity));
  }
  const double N = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < out.time.size(); ++i) {
    std::vector<double> v;
    for (const auto& s : series) v.push_back(s[i]);
    const double mean = sorted_sum(v) / N;
    std::vector<double> sq;
    for (double x : v) sq.push_back((x - mean) * (x - mean));
    out.mean.push_back(mean);
    out.std.push_back(std::sqrt(sorted_sum(sq) / N));
  }
  return out;
}

void write_ensemble(const std::vector<EnsembleSeries>& summaries, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError(fmt::format("cannot write {}", path.string()));
  f << "time_s";
  for (const auto& s : summaries) f << ',' << s.quantity << "_mean," << s.quantity << "_std";
  f << '\n';
  const std::size_t rows = summaries.empty() ? 0 : summaries[0].time.size();
  for (std::size_t i = 0; i < rows; ++i) {
    f << fmt::format("{}", summaries[0].time[i]);
    for (const auto& s : summaries) f << fmt::format(",{},{}", s.mean[i], s.std[i]);
    f << '\n';
  }
  if (!f) throw IoError(fmt::format("failed writing {}", path.string()));
}

SweepResult run_sweep(const SimulationDeck& deck, const SweepSpec& spec, const std::filesystem::path& out_dir,
                      int workers) {
  SweepResult res;
  res.decks = generate_replicas(deck, spec);
  const std::size_t n = res.decks.size();
  res.runs.resize(n);
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError(fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));
    std::ofstream f(out_dir / "replicas.csv");
    if (!f) throw IoError(fmt::format("cannot write {}", (out_dir / "replicas.csv").string()));
    f << "# seed=" << spec.seed << " mode=" << (spec.mode == SweepMode::Grid ? "grid" : "gaussian") << '\n';
    f << "replica";
    for (const auto& t : spec.targets) {
      const auto count = read_target(deck, t).size();
      for (std::size_t i = 0; i < count; ++i) f << ',' << t << (count > 1 ? fmt::format("[{}]", i) : "");
    }
    f << '\n';
    for (std::size_t r = 0; r < n; ++r) {
      f << r;
      for (const auto& t : spec.targets)
        for (double v : read_target(res.decks[r], t)) f << fmt::format(",{}", v);
      f << '\n';
    }
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&]() {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= n) return;
      try {
        RunOptions opt;
        if (!out_dir.empty()) opt.out_dir = out_dir / fmt::format("replica_{:03d}", r);
        res.runs[r] = run_simulation(res.decks[r], opt);
        log::info("replica {} finished ({} steps)", r, res.runs[r].steps);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t nt = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < nt; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t r = 0; r < n; ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const Error& e) {
      log::error("replica {} failed: {}", r, e.what());
      throw;
    }
  }
  for (const auto& q : spec.quantities) res.summaries.push_back(summarize_ensemble(res.runs, q));
  if (!out_dir.empty() && !res.summaries.empty()) write_ensemble(res.summaries, out_dir / "ensemble.csv");
  return res;
}

}  // namespace retort
