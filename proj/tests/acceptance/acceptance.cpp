// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance            run everything
//   acceptance 3 7a ...   run the named criteria
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "retort/deck.hpp"
#include "retort/equilibrium.hpp"
#include "retort/error.hpp"
#include "retort/flow.hpp"
#include "retort/hydraulics.hpp"
#include "retort/kinetics.hpp"
#include "retort/log.hpp"
#include "retort/simulation.hpp"
#include "retort/sweep.hpp"
#include "retort/transport.hpp"

using namespace retort;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path deck_path(const std::string& name) { return fs::path(RETORT_DECK_DIR) / name; }

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / "retort_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("missing column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

// ---------------------------------------------------------------- 1: Cosby

struct TextureRow {
  double sand, silt, clay, phi, b, psi_s, k;
};

Outcome check_texture(const std::vector<TextureRow>& rows) {
  Outcome o{true, ""};
  double worst_shape = 0.0, worst_k = 0.0;
  for (const auto& r : rows) {
    const auto c = cosby_pedotransfer(r.sand, r.silt, r.clay);
    const double shape = std::max({rel(c.phi, r.phi), rel(c.b, r.b), rel(c.psi_s, r.psi_s)});
    worst_shape = std::max(worst_shape, shape);
    worst_k = std::max(worst_k, rel(c.k, r.k));
    if (shape > 0.05 || rel(c.k, r.k) > 0.10) {
      o.pass = false;
      o.detail += fmt::format("{}-{}-{}: phi {:.4g}/{:.4g} b {:.4g}/{:.4g} psi_s {:.4g}/{:.4g} k {:.3g}/{:.3g}; ",
                              r.sand, r.silt, r.clay, c.phi, r.phi, c.b, r.b, c.psi_s, r.psi_s, c.k, r.k);
    }
  }
  o.detail += fmt::format("worst phi/b/psi_s error {:.3g} (tol 0.05), worst k error {:.3g} (tol 0.10)", worst_shape,
                          worst_k);
  return o;
}

Outcome criterion_1a() {
  return check_texture({{16, 60, 24, 0.469, 6.73, -0.47, 1.66e-13},
                        {9, 66, 25, 0.478, 6.88, -0.58, 1.29e-13},
                        {12, 73, 15, 0.474, 5.29, -0.53, 1.44e-13},
                        {12, 68, 20, 0.474, 6.09, -0.53, 1.44e-13}});
}

Outcome criterion_1b() { return check_texture({{90, 5, 5, 0.46, 3.705, -5.02e-2, 2.24e-12}}); }

// ----------------------------------------------------- 2: hydrostatic column

Outcome criterion_2() {
  auto d = load_deck(deck_path("hydrostatic.deck"));
  d.solver.t_end = 10 * 86400.0;
  GridState s = initial_state(d);
  FlowSolver flow(d.grid, d.materials, d.boundaries, FlowSettings::from(d.solver));
  auto total = [&](const GridState& st) {
    double w = 0.0;
    for (double x : liquid_volumes(st, d.grid, d.materials)) w += x;
    return w;
  };
  const double w0 = total(s);
  double worst_q = 0.0;
  long steps = 0;
  while (s.time < d.solver.t_end) {
    const auto fs = flow.step(s, std::min(d.solver.dt_max, d.solver.t_end - s.time));
    ++steps;
    for (std::size_t i = 0; i + 1 < d.grid.size(); ++i)
      worst_q = std::max(worst_q, std::abs(fs.face_volume[i]) / (fs.dt * d.grid.interface_area(i)));
  }
  const double drift = std::abs(total(s) - w0) / w0;
  return {worst_q < 1e-12 && drift < 1e-10,
          fmt::format("{} steps, max interface flux {:.3g} m/s (tol 1e-12), water drift {:.3g} (tol 1e-10)", steps,
                      worst_q, drift)};
}

// ------------------------------------------------ 3: tracer under transport

// Independent semi-discrete transport of one species on a recorded flow step:
// upwind advection and harmonic-mean diffusion, liquid volume linear in time,
// integrated with classical RK4 on many small steps.
void reference_transport(std::vector<double>& M, const FlowStep& f, const std::vector<double>& S_L,
                         const SimulationDeck& d, double D, int substeps) {
  const auto& g = d.grid;
  const std::size_t n = g.size();
  std::vector<double> q(n, 0.0), G(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    q[i] = f.face_volume[i] / f.dt;
    const double a = d.materials[g[i].material].phi * S_L[i] * D;
    const double b = d.materials[g[i + 1].material].phi * S_L[i + 1] * D;
    const double dist = g[i].z - g[i + 1].z;
    G[i] = (a > 0 && b > 0) ? g.interface_area(i) * (2 * a * b / (a + b)) / dist : 0.0;
  }
  auto rhs = [&](const std::vector<double>& m, double tau, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    auto c = [&](std::size_t e) { return m[e] / (f.W_before[e] + tau * (f.W_after[e] - f.W_before[e])); };
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double F = (q[i] >= 0 ? q[i] * c(i) : q[i] * c(i + 1)) + G[i] * (c(i) - c(i + 1));
      out[i] -= F;
      out[i + 1] += F;
    }
  };
  const double h = f.dt / substeps;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (int s = 0; s < substeps; ++s) {
    const double t0 = static_cast<double>(s) / substeps, th = (s + 0.5) / substeps, t1 = (s + 1.0) / substeps;
    rhs(M, t0, k1);
    for (std::size_t e = 0; e < n; ++e) tmp[e] = M[e] + 0.5 * h * k1[e];
    rhs(tmp, th, k2);
    for (std::size_t e = 0; e < n; ++e) tmp[e] = M[e] + 0.5 * h * k2[e];
    rhs(tmp, th, k3);
    for (std::size_t e = 0; e < n; ++e) tmp[e] = M[e] + h * k3[e];
    rhs(tmp, t1, k4);
    for (std::size_t e = 0; e < n; ++e) M[e] += h / 6.0 * (k1[e] + 2 * k2[e] + 2 * k3[e] + k4[e]);
  }
}

Outcome criterion_3() {
  auto d = load_deck(deck_path("tracer_pulse.deck"));
  GridState s = initial_state(d);
  FlowSolver flow(d.grid, d.materials, d.boundaries, FlowSettings::from(d.solver));
  TransportSettings ts{d.solver.courant, d.solver.max_substeps, false};
  const std::size_t br = *d.species.index_of("Br");
  const double D = d.species[br].diffusivity;
  const std::size_t n = d.grid.size();
  std::vector<double> ref(n);
  for (std::size_t e = 0; e < n; ++e) ref[e] = s.amount_at(e, br);
  double m0 = 0.0;
  for (double x : ref) m0 += x;
  double max_face = 0.0;
  TransportReport rep;
  for (int step = 0; step < 1000; ++step) {
    const auto f = flow.step(s, d.solver.dt_max);
    for (double v : f.face_volume) max_face = std::max(max_face, std::abs(v) / f.dt);
    rep.reset(n, d.species.size());
    step_solute_transport(s, d.grid, d.materials, d.species, d.boundaries, f, ts, rep);
    reference_transport(ref, f, s.S_L, d, D, 64);
  }
  double m1 = 0.0, peak = 0.0, diff = 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    m1 += s.amount_at(e, br);
    peak = std::max(peak, ref[e]);
    diff = std::max(diff, std::abs(s.amount_at(e, br) - ref[e]));
  }
  const double drift = std::abs(m1 - m0) / m0;
  const double linf = diff / peak;
  return {max_face > 0.0 && drift < 1e-8 && linf < 1e-4,
          fmt::format("1000 steps to t={:.4g} s, max face flow {:.3g} m3/s, mass drift {:.3g} (tol 1e-8), "
                      "normalized Linf vs RK4 reference {:.3g} (tol 1e-4)",
                      s.time, max_face, drift, linf)};
}

// -------------------------------------------------- 4: kinetics vs reference

struct Net {
  SpeciesRegistry reg;
  std::vector<ReactionSpec> reactions;
  std::vector<double> c0;
};

Net random_network(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ns_d(2, 5), nr_d(1, 3), coin(0, 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Net net;
  const int ns = ns_d(rng);
  for (int k = 0; k < ns; ++k) {
    Species sp;
    sp.name = fmt::format("S{}", k);
    net.reg.entries.push_back(sp);
    net.c0.push_back(0.05 + u(rng));
  }
  const int nr = nr_d(rng);
  for (int r = 0; r < nr; ++r) {
    ReactionSpec rs;
    rs.name = fmt::format("r{}", r);
    rs.rate = std::pow(10.0, -6.0 + 1.5 * u(rng));
    std::vector<int> order(ns);
    for (int k = 0; k < ns; ++k) order[k] = k;
    std::shuffle(order.begin(), order.end(), rng);
    const int n_reac = 1 + (ns > 2 ? coin(rng) : 0);
    for (int i = 0; i < n_reac; ++i) {
      const std::string name = net.reg[order[i]].name;
      rs.stoichiometry.push_back({name, -(1.0 + coin(rng))});
      // Every reactant limits its own rate, so it cannot be driven negative.
      if (coin(rng)) rs.norder.push_back({name, 1.0 + coin(rng)});
      else rs.mmm.push_back({name, 0.05 + u(rng)});
    }
    rs.stoichiometry.push_back({net.reg[order[n_reac]].name, 0.5 + u(rng)});
    if (ns > n_reac + 1 && coin(rng)) {
      const auto& other = net.reg[order[ns - 1]].name;
      if (!rs.mmm.empty()) rs.competition.push_back({other, 0.1 + u(rng)});
      else rs.inhibition.push_back({other, 0.1 + u(rng)});
    }
    if (coin(rng)) rs.inhibition.push_back({net.reg[order[n_reac]].name, 0.2 + u(rng)});
    net.reactions.push_back(std::move(rs));
  }
  return net;
}

// Rate law evaluated from the spec: order terms, Monod terms whose constants
// grow with every competitor, and K/(K + X) inhibition.
std::vector<double> network_rhs(const Net& net, const std::vector<double>& c) {
  std::vector<double> dc(c.size(), 0.0);
  auto X = [&](const std::string& name) { return c[*net.reg.index_of(name)]; };
  for (const auto& r : net.reactions) {
    double v = r.rate;
    for (const auto& t : r.norder) v *= std::pow(std::max(X(t.species), 0.0), t.value);
    double comp = 1.0;
    for (const auto& t : r.competition) comp += X(t.species) / t.value;
    for (const auto& t : r.mmm) v *= X(t.species) / (X(t.species) + t.value * comp);
    for (const auto& t : r.inhibition) v *= t.value / (t.value + X(t.species));
    for (const auto& s : r.stoichiometry) dc[*net.reg.index_of(s.species)] += s.coefficient * v;
  }
  return dc;
}

std::vector<double> rk4(const Net& net, std::vector<double> c, double T, int steps) {
  const double h = T / steps;
  const std::size_t n = c.size();
  std::vector<double> tmp(n);
  for (int s = 0; s < steps; ++s) {
    auto k1 = network_rhs(net, c);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = c[i] + 0.5 * h * k1[i];
    auto k2 = network_rhs(net, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = c[i] + 0.5 * h * k2[i];
    auto k3 = network_rhs(net, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = c[i] + h * k3[i];
    auto k4 = network_rhs(net, tmp);
    for (std::size_t i = 0; i < n; ++i) c[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return c;
}

Outcome criterion_4() {
  std::mt19937_64 rng(20240611);
  GridSpec g;
  g.elements.push_back({1.0, 1.0, -0.5, 1.0, 0, false});
  std::vector<MaterialRecord> mats{MaterialRecord{}};
  mats[0].phi = 0.5;
  const double W = 0.5 * 0.8;
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Net net = random_network(rng);
    std::vector<CompiledReaction> compiled;
    for (const auto& r : net.reactions) compiled.push_back(CompiledReaction::compile(r, net.reg));
    GridState s(1, net.reg.size());
    s.S_L[0] = 0.8;
    s.S_G[0] = 0.2;
    for (std::size_t k = 0; k < net.reg.size(); ++k)
      s.amount_at(0, k) = amount_from_concentration(net.c0[k], W, ConcentrationUnit::MolPerLitre);
    const double T = 5e5, dt = T / 10;
    std::vector<double> ref = net.c0;
    for (int cp = 0; cp < 10; ++cp) {
      step_kinetics(s, g, mats, net.reg, compiled, dt, KineticsSettings{});
      ref = rk4(net, ref, dt, 4000);
      for (std::size_t k = 0; k < net.reg.size(); ++k) {
        const double c = concentration_from_amount(s.amount_at(0, k), W, ConcentrationUnit::MolPerLitre);
        const double err = std::abs(c - ref[k]) / std::max(std::abs(ref[k]), 1e-6);
        worst = std::max(worst, err);
        if (err > 1e-6) ++failures;
      }
    }
  }
  return {failures == 0, fmt::format("100 networks x 10 checkpoints, worst relative error {:.3g} (tol 1e-6, "
                                     "floor 1e-6 mol/L), {} misses",
                                     worst, failures)};
}

// -------------------------------------------------- 5: equilibrium residuals

Outcome criterion_5() {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  const std::vector<double> exps{-2.0, -1.0, -0.5, 0.5, 1.0, 2.0};
  GridSpec g;
  g.elements.push_back({1.0, 1.0, -0.5, 1.0, 0, false});
  std::vector<MaterialRecord> mats{MaterialRecord{}};
  double worst = 0.0, drift = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    SpeciesRegistry reg;
    const int np = 2 + static_cast<int>(u(rng) * 3), nsec = 1 + static_cast<int>(u(rng) * 3);
    for (int k = 0; k < np; ++k) {
      Species sp;
      sp.name = fmt::format("P{}", k);
      reg.entries.push_back(sp);
    }
    for (int k = 0; k < nsec; ++k) {
      Species sp;
      sp.name = fmt::format("X{}", k);
      sp.kind = SpeciesKind::SEC;
      reg.entries.push_back(sp);
    }
    std::vector<EquilibriumSpec> specs;
    for (int k = 0; k < nsec; ++k) {
      EquilibriumSpec q;
      q.name = fmt::format("eq{}", k);
      q.solved = reg[np + k].name;
      q.solved_exponent = coin(rng) ? 1.0 : 2.0;
      const int terms = 1 + static_cast<int>(u(rng) * 3);
      for (int t = 0; t < terms; ++t) {
        // Later laws may lean on secondaries solved before them.
        const int pick = static_cast<int>(u(rng) * (np + k));
        q.primaries.push_back({reg[pick].name, exps[static_cast<std::size_t>(u(rng) * exps.size())]});
      }
      q.log10K = -12.0 + 16.0 * u(rng);
      if (coin(rng)) q.second_point = VantHoffPoint{278.15 + 40.0 * u(rng), q.log10K + 4.0 * (u(rng) - 0.5)};
      if (q.second_point && std::abs(q.second_point->temperature - q.reference_T) < 1.0) q.second_point.reset();
      specs.push_back(q);
    }
    std::vector<CompiledEquilibrium> eqs;
    for (const auto& q : specs) eqs.push_back(CompiledEquilibrium::compile(q, reg));
    GridState s(1, reg.size());
    s.S_L[0] = 0.3 + 0.7 * u(rng);
    s.S_G[0] = 1.0 - s.S_L[0];
    s.temperature = 278.15 + 40.0 * u(rng);
    const double W = mats[0].phi * s.S_L[0];
    for (int k = 0; k < np; ++k)
      s.amount_at(0, k) = amount_from_concentration(std::pow(10.0, -9.0 + 8.0 * u(rng)), W,
                                                    ConcentrationUnit::MolPerLitre);
    const auto rep = solve_equilibria(s, g, mats, reg, eqs);
    if (!rep.singular.empty()) return {false, fmt::format("trial {} flagged a singular law", trial)};
    for (const auto& q : specs) {
      double logK = q.log10K;
      if (q.second_point) {
        const double x = (1.0 / s.temperature - 1.0 / q.reference_T) /
                         (1.0 / q.second_point->temperature - 1.0 / q.reference_T);
        logK = q.log10K + x * (q.second_point->log10K - q.log10K);
      }
      auto lx = [&](const std::string& name) {
        const auto k = *reg.index_of(name);
        return std::log10(concentration_from_amount(s.amount_at(0, k), W, ConcentrationUnit::MolPerLitre));
      };
      double logQ = q.solved_exponent * lx(q.solved);
      for (const auto& p : q.primaries) logQ += p.value * lx(p.species);
      worst = std::max(worst, std::abs(logQ - logK));
    }
    const auto before = s.amount;
    solve_equilibria(s, g, mats, reg, eqs);
    for (std::size_t i = 0; i < before.size(); ++i)
      if (before[i] != 0.0) drift = std::max(drift, std::abs(s.amount[i] - before[i]) / std::abs(before[i]));
  }
  return {worst < 1e-10 && drift < 1e-14,
          fmt::format("1000 specs, worst |log10(Q/K)| {:.3g} (tol 1e-10), idempotence drift {:.3g} (tol 1e-14)", worst,
                      drift)};
}

// ------------------------------------------------------------ 6: clogging

struct ClogRun {
  double max_SL_above = 0.0;
  double cumulative_out = 0.0;
  double peak_time = 0.0;
  std::vector<double> eps_time, eps_mass;
};

ClogRun clog_run(double r) {
  auto d = load_deck(deck_path("case2_clogging.deck"));
  for (auto& rs : d.reactions)
    if (rs.name == "eps_production") rs.rate = r;
  const auto out = run_simulation(d);
  ClogRun c;
  // Deepest element whose bottom lies at or above the colonized band (1.0 m).
  std::size_t above = 0;
  for (std::size_t e = 0; e < d.grid.size(); ++e)
    if (d.grid.depth(e) + 0.5 * d.grid[e].height <= 1.0 + 1e-9) above = e;
  for (const auto& snap : out.snapshots) c.max_SL_above = std::max(c.max_SL_above, snap.S_L[above]);
  double peak = -1.0;
  for (const auto& row : out.flux) {
    if (row.outflow_rate > peak) {
      peak = row.outflow_rate;
      c.peak_time = row.time;
    }
  }
  c.cumulative_out = out.flux.back().water_out;
  const auto eps = *d.species.index_of("EPS");
  for (const auto& row : out.flux) {
    c.eps_time.push_back(row.time);
    c.eps_mass.push_back(row.species_stored[eps]);
  }
  return c;
}

Outcome criterion_6() {
  const auto clog = clog_run(7.5e-2);
  const auto ctrl = clog_run(0.0);
  const bool a = clog.max_SL_above >= 0.99 && ctrl.max_SL_above <= 0.9;
  const bool b = clog.cumulative_out < ctrl.cumulative_out && clog.peak_time > ctrl.peak_time;
  // A rise to an interior maximum followed by a decline before day 12.
  std::size_t imax = 0, last = 0;
  for (std::size_t i = 0; i < clog.eps_time.size(); ++i) {
    if (clog.eps_time[i] > 12 * 86400.0 + 1e-6) break;
    last = i;
    if (clog.eps_mass[i] > clog.eps_mass[imax]) imax = i;
  }
  double after_min = clog.eps_mass[imax];
  for (std::size_t i = imax; i <= last; ++i) after_min = std::min(after_min, clog.eps_mass[i]);
  const bool c = imax > 0 && imax < last && after_min < clog.eps_mass[imax] * (1.0 - 1e-3);
  return {a && b && c,
          fmt::format("(a) max S_L above band {:.4f} vs control {:.4f} [{}]; (b) outflow {:.4g} vs {:.4g} m3, peak at "
                      "{:.2f} d vs {:.2f} d [{}]; (c) EPS max {:.4g} kg at {:.2f} d, then down to {:.4g} kg by 12 d [{}]",
                      clog.max_SL_above, ctrl.max_SL_above, a ? "ok" : "no", clog.cumulative_out, ctrl.cumulative_out,
                      clog.peak_time / 86400.0, ctrl.peak_time / 86400.0, b ? "ok" : "no", clog.eps_mass[imax],
                      clog.eps_time[imax] / 86400.0, after_min, c ? "ok" : "no")};
}

// ---------------------------------------------------- 7: GEBIK and GEBIF

double probe_value(const RunOutputs& out, double t, const std::string& sp) {
  for (const auto& p : out.probes)
    if (p.time == t && p.species == sp) return p.value;
  throw std::runtime_error("missing probe " + sp);
}

Outcome criterion_7a() {
  const auto d = load_deck(deck_path("case3_denitrification.deck"));
  const auto out = run_simulation(d);
  // Table 2 at 20 C with the effective yield z = 5e-5 mol/mg.
  const double z = 5e-5, k1x2 = 5.42e-4, k2 = 4.56e-4, K1 = 2.723, K2 = 2.309, Y = 295.7, delta = 1e-6;
  const double T = 293.15, TLB = 288.15, TUB = 313.15;
  const double fT = 1.0 / (1.0 + std::exp(TLB - T)) / (1.0 + std::exp(T - TUB));
  auto rhs = [&](const std::array<double, 3>& y) {
    const double n14 = y[0], n15 = y[1], B = y[2];
    const double r14 = fT * z * k1x2 * B * n14 / (n14 + K1 * (1.0 + n15 / K2));
    const double r15 = fT * z * k2 * B * n15 / (n15 + K2 * (1.0 + n14 / K1));
    const double d14 = -r14 - r15, d15 = -r15;
    return std::array<double, 3>{d14, d15, Y * (-d14 - d15) - delta * B};
  };
  std::array<double, 3> y{2.0, 0.04275, 1.073};
  double t = 0.0, worst = 0.0;
  const double h = 10.0;
  for (double report : d.outputs.report_times(d.solver.t_end)) {
    while (t < report - 1e-9) {
      const double hh = std::min(h, report - t);
      auto k1 = rhs(y);
      std::array<double, 3> tmp;
      for (int i = 0; i < 3; ++i) tmp[i] = y[i] + 0.5 * hh * k1[i];
      auto k2v = rhs(tmp);
      for (int i = 0; i < 3; ++i) tmp[i] = y[i] + 0.5 * hh * k2v[i];
      auto k3 = rhs(tmp);
      for (int i = 0; i < 3; ++i) tmp[i] = y[i] + hh * k3[i];
      auto k4 = rhs(tmp);
      for (int i = 0; i < 3; ++i) y[i] += hh / 6.0 * (k1[i] + 2 * k2v[i] + 2 * k3[i] + k4[i]);
      t += hh;
    }
    worst = std::max({worst, rel(probe_value(out, report, "NO3_14"), y[0]),
                      rel(probe_value(out, report, "NO3_15"), y[1]), rel(probe_value(out, report, "B"), y[2])});
  }
  return {worst < 1e-4, fmt::format("worst relative deviation from the reference over 800 h: {:.3g} (tol 1e-4); "
                                    "final NO3_14 {:.5g} mol/L",
                                    worst, y[0])};
}

Outcome criterion_7b() {
  const auto d = load_deck(deck_path("case3_denitrification.deck"));
  const auto out = run_simulation(d);
  std::vector<double> n14, n15;
  for (double t : d.outputs.report_times(d.solver.t_end)) {
    n14.push_back(probe_value(out, t, "NO3_14"));
    n15.push_back(probe_value(out, t, "NO3_15"));
  }
  const auto iso = compute_delta15N(n14, n15);
  const double d0 = compute_delta15N(2.0, 0.04275).delta;
  bool ok = iso.front().delta > d0;
  std::size_t checked = 0;
  for (std::size_t i = 1; i < iso.size(); ++i) {
    if (!(n14[i] < n14[i - 1])) continue;  // substrate no longer consumed
    ++checked;
    ok = ok && iso[i].delta > iso[i - 1].delta;
  }
  return {ok && checked + 1 == iso.size(),
          fmt::format("delta15N {:.4g} -> {:.4g} permil over {} reports, strictly increasing: {}", d0,
                      iso.back().delta, iso.size(), ok ? "yes" : "no")};
}

Outcome criterion_7c() {
  const auto d = load_deck(deck_path("case3_denitrification.deck"));
  const auto spec = *d.sweep;
  const auto res = run_sweep(d, spec, {}, 4);
  std::map<long, double> delta;  // by whole degrees C
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const auto n14 = extract_series(res.runs[i], "probe.NO3_14@0").back();
    const auto n15 = extract_series(res.runs[i], "probe.NO3_15@0").back();
    delta[std::lround(res.decks[i].solver.temperature - 273.15)] = compute_delta15N(n14, n15).delta;
  }
  const double a = delta.at(26), b = delta.at(28), c = delta.at(30);
  const double plateau = (a + b + c) / 3.0;
  const double spread = std::max({rel(a, b), rel(b, c), rel(a, c)});
  const bool ok = spread < 0.02 && delta.at(5) < 0.5 * plateau && delta.at(50) < 0.5 * plateau;
  std::string curve;
  for (const auto& [T, v] : delta) curve += fmt::format(" {}C:{:.3g}", T, v);
  return {ok, fmt::format("plateau {:.4g} permil, pairwise spread {:.3g} (tol 0.02), 5C {:.3g}, 50C {:.3g} (< 50%);{}",
                          plateau, spread, delta.at(5), delta.at(50), curve)};
}

// -------------------------------------------------------------- 8: sweep

Outcome criterion_8() {
  auto d = load_deck(deck_path("case1_synthetic.deck"));
  d.solver.t_end = 180 * 86400.0;
  const auto spec = *d.sweep;
  if (spec.replicas != 50 || spec.rel_std != 0.5 || spec.mode != SweepMode::Gaussian)
    return {false, "case 1 deck does not carry the 50-replica, 50% ensemble"};
  const auto dir_a = scratch("sweep_a"), dir_b = scratch("sweep_b");
  const auto A = run_sweep(d, spec, dir_a, 4);
  const auto B = run_sweep(d, spec, dir_b, 1);

  bool deterministic = slurp(dir_a / "ensemble.csv") == slurp(dir_b / "ensemble.csv") &&
                       slurp(dir_a / "replicas.csv") == slurp(dir_b / "replicas.csv");
  for (std::size_t q = 0; q < A.summaries.size(); ++q)
    deterministic = deterministic && A.summaries[q].mean == B.summaries[q].mean && A.summaries[q].std == B.summaries[q].std;

  std::vector<RunOutputs> shuffled = A.runs;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(5));
  bool order_free = true;
  for (const auto& q : spec.quantities) {
    const auto x = summarize_ensemble(A.runs, q), y = summarize_ensemble(shuffled, q);
    order_free = order_free && x.mean == y.mean && x.std == y.std;
  }

  // Recompute from the replica files with long double two-pass sums.
  const auto ens = read_csv(dir_a / "ensemble.csv");
  double worst = 0.0;
  for (const auto& q : spec.quantities) {
    const std::string col = q.substr(q.find('.') + 1);
    std::vector<std::vector<long double>> series;
    for (int r = 0; r < spec.replicas; ++r) {
      const auto rows = read_csv(dir_a / fmt::format("replica_{:03d}", r) / "flux.csv");
      const auto c = column(rows[0], col);
      std::vector<long double> v;
      for (std::size_t i = 1; i < rows.size(); ++i) v.push_back(std::stold(rows[i][c]));
      series.push_back(std::move(v));
    }
    const auto cm = column(ens[0], q + "_mean"), cs = column(ens[0], q + "_std");
    for (std::size_t i = 1; i < ens.size(); ++i) {
      long double s = 0.0L;
      for (const auto& v : series) s += v[i - 1];
      const long double mean = s / series.size();
      long double ss = 0.0L;
      for (const auto& v : series) ss += (v[i - 1] - mean) * (v[i - 1] - mean);
      const long double sd = std::sqrt(ss / series.size());
      const double got_m = std::stod(ens[i][cm]), got_s = std::stod(ens[i][cs]);
      worst = std::max(worst, static_cast<double>(std::abs(got_m - mean) / std::max(1.0L, std::abs(mean))));
      worst = std::max(worst, static_cast<double>(std::abs(got_s - sd) / std::max(1.0L, std::abs(mean))));
    }
  }
  double spread = 0.0;
  for (double x : A.summaries[0].std) spread = std::max(spread, x);
  return {deterministic && order_free && worst <= 1e-12 && spread > 0.0,
          fmt::format("50 replicas over 180 d: deterministic {}, order independent {}, max recompute deviation {:.3g} "
                      "(tol 1e-12), max water-table std {:.3g} m",
                      deterministic ? "yes" : "no", order_free ? "yes" : "no", worst, spread)};
}

// ------------------------------------------------------------- 9: parser

std::vector<fs::path> golden_decks() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(RETORT_DECK_DIR))
    if (e.path().extension() == ".deck") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string mutate(const std::string& text, std::mt19937_64& rng) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  const std::string junk = "=[]#,.-+eE0123456789 \tabcxyz/%*\"\\\x01\xff";
  const int edits = 1 + static_cast<int>(pick(4));
  for (int k = 0; k < edits && !lines.empty(); ++k) {
    auto& l = lines[pick(lines.size())];
    switch (pick(9)) {
      case 0: lines.erase(lines.begin() + pick(lines.size())); break;
      case 1: lines.insert(lines.begin() + pick(lines.size()), lines[pick(lines.size())]); break;
      case 2: std::swap(lines[pick(lines.size())], lines[pick(lines.size())]); break;
      case 3:
        if (!l.empty()) l.erase(pick(l.size()), 1);
        break;
      case 4: l.insert(l.empty() ? 0 : pick(l.size()), 1, junk[pick(junk.size())]); break;
      case 5:
        if (!l.empty()) l[pick(l.size())] = junk[pick(junk.size())];
        break;
      case 6: {
        static const char* numbers[] = {"-1", "0", "1e308", "nan", "inf", "-0", "1e-320", "99999999999999999999", "1/0"};
        const auto eq = l.find('=');
        if (eq != std::string::npos) l = l.substr(0, eq + 1) + " " + numbers[pick(9)];
        break;
      }
      case 7: l = l.substr(0, l.empty() ? 0 : pick(l.size())); break;
      default: {
        static const char* blocks[] = {"[SOLVER]", "[GRID]", "[BOUNDARY]", "[REACTION]", "[SWEEP]", "[NOPE]", "["};
        lines.insert(lines.begin() + pick(lines.size()), blocks[pick(7)]);
      }
    }
  }
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  if (pick(20) == 0 && !out.empty()) out.resize(pick(out.size()));
  return out;
}

Outcome criterion_9() {
  const auto decks = golden_decks();
  std::vector<std::string> texts;
  int round_trips = 0;
  std::string bad;
  for (const auto& p : decks) {
    texts.push_back(slurp(p));
    ParseOptions o;
    o.file_name = p.filename().string();
    o.base_dir = p.parent_path();
    const auto r = parse_deck(texts.back(), o);
    if (!r.ok()) {
      bad += p.filename().string() + " ";
      continue;
    }
    const auto again = parse_deck(serialize_deck(*r.deck), o);
    if (again.ok() && *again.deck == *r.deck) ++round_trips;
    else bad += p.filename().string() + " ";
  }
  std::mt19937_64 rng(99);
  int rejected = 0, silent = 0, threw = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::string text = mutate(texts[static_cast<std::size_t>(i) % texts.size()], rng);
    ParseOptions o;
    o.base_dir = fs::path(RETORT_DECK_DIR);
    try {
      const auto r = parse_deck(text, o);
      if (!r.ok()) {
        ++rejected;
        if (r.error_count() == 0) ++silent;
      }
    } catch (...) {
      ++threw;
    }
  }
  const bool ok = decks.size() >= 13 && round_trips == static_cast<int>(decks.size()) && silent == 0 && threw == 0;
  return {ok, fmt::format("{} golden decks, {} round-trip{}; 10000 mutations: {} rejected with diagnostics, {} rejected "
                          "silently, {} threw",
                          decks.size(), round_trips, bad.empty() ? "" : " (failed: " + bad + ")", rejected - silent,
                          silent, threw)};
}

// ------------------------------------------------------------- 10: ledger

Outcome criterion_10() {
  double worst = 0.0, worst_tracer = 0.0;
  std::string where, where_tracer;
  for (const auto& p : golden_decks()) {
    const auto d = load_deck(p);
    RunOptions opt;
    opt.enforce_audit = false;
    const auto out = run_simulation(d, opt);
    if (out.audit_worst > worst) {
      worst = out.audit_worst;
      where = fmt::format("{} ({})", p.filename().string(), out.audit_worst_quantity);
    }
    // Species untouched by reactions and equilibria must close on transport alone.
    const auto s0 = initial_state(d);
    const auto& last = out.flux.back();
    for (std::size_t k = 0; k < d.species.size(); ++k) {
      const auto& name = d.species[k].name;
      bool reactive = false;
      for (const auto& r : d.reactions)
        for (const auto& t : r.stoichiometry) reactive = reactive || t.species == name;
      for (const auto& q : d.equilibria) {
        reactive = reactive || q.solved == name;
        for (const auto& t : q.primaries) reactive = reactive || t.species == name;
      }
      if (reactive || d.species[k].unit == ConcentrationUnit::Atm) continue;
      double stored0 = 0.0;
      for (std::size_t e = 0; e < d.grid.size(); ++e) stored0 += s0.amount_at(e, k);
      const double scale = stored0 + last.species_in[k];
      if (scale <= 0.0) continue;
      const double err = std::abs(last.species_stored[k] - stored0 - last.species_in[k] + last.species_out[k]) / scale;
      if (err > worst_tracer) {
        worst_tracer = err;
        where_tracer = fmt::format("{} ({})", p.filename().string(), name);
      }
    }
  }
  return {worst <= 1e-6 && worst_tracer <= 1e-8,
          fmt::format("worst per-step closure {:.3g} in {} (tol 1e-6); worst tracer closure {:.3g} in {} (tol 1e-8)",
                      worst, where.empty() ? "-" : where, worst_tracer, where_tracer.empty() ? "-" : where_tracer)};
}

struct Criterion {
  std::string id;
  std::string title;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  log::set_level(log::Level::Quiet);
  const std::vector<Criterion> all{
      {"1a", "pedotransfer reproduces the layered-soil table", 1, criterion_1a},
      {"1b", "pedotransfer reproduces the clogging sand", 1, criterion_1b},
      {"2", "hydrostatic column stays still", 10, criterion_2},
      {"3", "tracer conservation and reference match", 30, criterion_3},
      {"4", "kinetics match a reference integrator", 60, criterion_4},
      {"5", "equilibrium residuals and idempotence", 5, criterion_5},
      {"6", "bioclogging column against its control", 300, criterion_6},
      {"7a", "isotope kinetics match a reference integration", 120, criterion_7a},
      {"7b", "delta15N rises while nitrate is consumed", 120, criterion_7b},
      {"7c", "delta15N temperature plateau", 120, criterion_7c},
      {"8", "ensemble sweep is deterministic and exact", 600, criterion_8},
      {"9", "parser round-trip and mutation robustness", 120, criterion_9},
      {"10", "every shipped deck closes its ledger", 600, criterion_10},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt::format("; over the {:.0f} s budget", c.budget_s);
    }
    fmt::print("{} {:>3}  {}: {} [{:.2f} s]\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail, secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  if (ran == 0) {
    fmt::print(stderr, "no such criterion\n");
    return 64;
  }
  return failed == 0 ? 0 : 1;
}
