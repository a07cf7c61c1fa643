#include "retort/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "retort/equilibrium.hpp"
#include "retort/error.hpp"
#include "retort/flow.hpp"
#include "retort/kinetics.hpp"
#include "retort/log.hpp"
#include "retort/transport.hpp"

namespace retort {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t first_soil(const GridSpec& g) { return (g.size() > 0 && g[0].atmosphere) ? 1 : 0; }

std::string unit_label(const Species& s) { return std::string(to_string(s.unit)); }

// Secondaries solved by an equilibrium are derived, not conserved.
std::vector<bool> solved_species(const SimulationDeck& d) {
  std::vector<bool> out(d.species.size(), false);
  for (const auto& eq : d.equilibria)
    if (auto k = d.species.index_of(eq.solved)) out[*k] = true;
  return out;
}

void refresh_biophase(GridState& s, const SimulationDeck& d) {
  const auto& g = d.grid;
  for (std::size_t e = 0; e < g.size(); ++e) {
    if (g[e].atmosphere) continue;
    const double pore = d.materials[g[e].material].phi * g[e].volume;
    double S_B = 0.0;
    for (std::size_t k = 0; k < d.species.size(); ++k) {
      const auto& sp = d.species[k];
      if (!sp.occupies_biophase()) continue;
      const double density = sp.bio ? sp.bio->density : s.phases.rho_B;
      S_B += amount_to_kg(s.amount_at(e, k), sp) / (density * pore);
    }
    s.S_B[e] = S_B;
  }
}

Snapshot snapshot(const GridState& s, const SimulationDeck& d) {
  Snapshot out;
  out.time = s.time;
  out.temperature = s.temperature;
  out.S_L = s.S_L;
  out.S_G = s.S_G;
  out.S_B = s.S_B;
  out.P_L = s.P_L;
  const std::size_t ns = d.species.size();
  out.concentration.assign(d.grid.size() * ns, 0.0);
  for (std::size_t e = 0; e < d.grid.size(); ++e)
    for (std::size_t k = 0; k < ns; ++k)
      out.concentration[e * ns + k] = concentration(s, d.grid, d.materials, d.species[k], e, k);
  return out;
}

std::ofstream open_csv(const std::filesystem::path& path, bool append) {
  std::ofstream f(path, append ? std::ios::app : std::ios::trunc);
  if (!f) throw IoError(fmt::format("cannot write {}", path.string()));
  return f;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

// Streams the four CSV files row by row.
class CsvWriter {
 public:
  CsvWriter(const SimulationDeck& d, const std::filesystem::path& dir, bool append) : d_(d) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
    write_grid(dir / "grid.csv");
    ts_ = open_csv(dir / "timeseries.csv", append);
    flux_ = open_csv(dir / "flux.csv", append);
    probes_ = open_csv(dir / "probes.csv", append);
    if (!append) headers();
  }

  void add(const Snapshot& s, const FluxRow& f, const std::vector<ProbeRow>& probes) {
    const std::size_t ns = d_.species.size();
    for (std::size_t e = 0; e < d_.grid.size(); ++e) {
      ts_ << num(s.time) << ',' << e << ',' << num(s.S_L[e]) << ',' << num(s.S_G[e]) << ',' << num(s.S_B[e]) << ','
          << num(s.P_L[e]) << ',' << num(s.temperature);
      for (std::size_t k = 0; k < ns; ++k) ts_ << ',' << num(s.concentration[e * ns + k]);
      ts_ << '\n';
    }
    const auto values = flux_values(f);
    for (std::size_t i = 0; i < values.size(); ++i) flux_ << (i ? "," : "") << num(values[i]);
    flux_ << '\n';
    for (const auto& p : probes)
      probes_ << num(p.time) << ',' << p.species << ',' << p.element << ',' << num(p.value) << ',' << p.unit << '\n';
    ts_.flush();
    flux_.flush();
    probes_.flush();
  }

 private:
  void headers() {
    ts_ << "time_s,element,S_L,S_G,S_B,P_L_Pa,T_K";
    for (const auto& sp : d_.species.entries) ts_ << ',' << sp.name << '[' << unit_label(sp) << ']';
    ts_ << '\n';
    std::vector<std::string> names, units;
    for (const auto& sp : d_.species.entries) {
      names.push_back(sp.name);
      units.push_back(unit_label(sp));
    }
    const auto cols = flux_columns(names, units);
    for (std::size_t i = 0; i < cols.size(); ++i) flux_ << (i ? "," : "") << cols[i];
    flux_ << '\n';
    probes_ << "time_s,species,element,value,unit\n";
  }

  void write_grid(const std::filesystem::path& path) {
    auto f = open_csv(path, false);
    f << "element,z_m,height_m,volume_m3,area_m2,atmosphere,material,phi,k_m2,psi_s_m,b,S_Lr,S_Gr,rho_m_kg_m3,"
         "retention\n";
    for (std::size_t e = 0; e < d_.grid.size(); ++e) {
      const auto& el = d_.grid[e];
      const auto& m = d_.materials[el.material];
      f << e << ',' << num(el.z) << ',' << num(el.height) << ',' << num(el.volume) << ',' << num(el.area) << ','
        << (el.atmosphere ? 1 : 0) << ',' << m.name << ',' << num(m.phi) << ',' << num(m.k) << ',' << num(m.psi_s)
        << ',' << num(m.b) << ',' << num(m.S_Lr) << ',' << num(m.S_Gr) << ',' << num(m.rho_m) << ','
        << (m.model == RetentionModel::VanGenuchten ? "van_genuchten" : "brooks_corey") << '\n';
    }
  }

  const SimulationDeck& d_;
  std::ofstream ts_, flux_, probes_;
};

// Conserved quantities: water (kg) and every species that is neither solved by
// an equilibrium nor held as a partial pressure.
struct Ledger {
  MassLedger book;
  std::vector<std::ptrdiff_t> quantity_of;  // per species, -1 when not audited
  static Ledger build(const SimulationDeck& d) {
    const auto solved = solved_species(d);
    std::vector<std::string> names{"water"};
    std::vector<std::ptrdiff_t> q(d.species.size(), -1);
    for (std::size_t k = 0; k < d.species.size(); ++k) {
      if (solved[k] || d.species[k].unit == ConcentrationUnit::Atm) continue;
      q[k] = static_cast<std::ptrdiff_t>(names.size());
      names.push_back(d.species[k].name);
    }
    return Ledger{MassLedger(std::move(names), d.grid.size()), std::move(q)};
  }
  void store(const GridState& s, const SimulationDeck& d, bool initial) {
    const auto& g = d.grid;
    for (std::size_t e = 0; e < g.size(); ++e) {
      const bool atm = g[e].atmosphere;
      auto set = [&](std::size_t q, double v) {
        if (atm) v = 0.0;
        book.at(e, q).stored = v;
        if (initial) book.at(e, q).stored0 = v;
      };
      set(0, liquid_volume(s, g, d.materials, e) * s.phases.rho_L);
      for (std::size_t k = 0; k < quantity_of.size(); ++k)
        if (quantity_of[k] >= 0) set(static_cast<std::size_t>(quantity_of[k]), s.amount_at(e, k));
    }
  }
};

std::vector<double> breakpoints(const SimulationDeck& d) {
  std::vector<double> out;
  for (const auto& b : d.boundaries) {
    for (double t : {b.start, b.end})
      if (std::isfinite(t) && t > 0.0) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::string> flux_columns(const std::vector<std::string>& names, const std::vector<std::string>& units) {
  std::vector<std::string> cols{"time_s",          "water_stored_m3",   "water_in_m3",
                                "water_out_m3",    "water_uptake_m3",   "water_immobilized_m3",
                                "outflow_rate_m3_s", "water_table_depth_m"};
  for (std::size_t k = 0; k < names.size(); ++k) {
    const std::string u = units[k] == "mg/L" ? "kg" : units[k] == "atm" ? "atm" : "mol";
    for (const char* what : {"_stored_", "_in_", "_out_"}) cols.push_back(names[k] + what + u);
  }
  return cols;
}

std::vector<double> flux_values(const FluxRow& f) {
  std::vector<double> v{f.time,         f.water_stored,      f.water_in,    f.water_out,
                        f.water_uptake, f.water_immobilized, f.outflow_rate, f.water_table_depth};
  for (std::size_t k = 0; k < f.species_stored.size(); ++k) {
    v.push_back(f.species_stored[k]);
    v.push_back(f.species_in[k]);
    v.push_back(f.species_out[k]);
  }
  return v;
}

double water_table_depth(const GridState& s, const GridSpec& g) {
  const std::size_t lo = first_soil(g);
  if (g.size() <= lo) return kNaN;
  std::size_t i = g.size() - 1;
  if (s.P_L[i] < 0.0) return kNaN;
  while (i > lo && s.P_L[i - 1] >= 0.0) --i;
  if (i == lo) return 0.0;
  const double Pa = s.P_L[i - 1], Pb = s.P_L[i];
  const double z0 = g[i].z + Pb / (Pb - Pa) * (g[i - 1].z - g[i].z);
  return g.top() - z0;
}

GridState initial_state(const SimulationDeck& d) {
  const auto& g = d.grid;
  const std::size_t ns = d.species.size();
  GridState s(g.size(), ns);
  s.phases = d.solver.phases;
  s.temperature = d.solver.temperature;
  const double Ss = d.solver.specific_storage;
  const double rg = s.phases.rho_L * s.phases.gravity;
  for (std::size_t e = 0; e < g.size(); ++e) {
    if (g[e].atmosphere) {
      s.S_L[e] = 0.0;
      s.S_G[e] = 1.0;
      continue;
    }
    const auto& mat = d.materials[g[e].material];
    if (d.initial.water_table_depth) {
      const double z_wt = g.top() - *d.initial.water_table_depth;
      set_liquid_pressure(s, e, rg * (z_wt - g[e].z), mat, Ss);
    } else {
      double S_L = s.S_L[e];
      for (const auto& sat : d.initial.saturation)
        if (sat.where.contains(g, e)) S_L = sat.value;
      s.S_L[e] = S_L;
      s.S_G[e] = 1.0 - S_L;
    }
  }
  for (const auto& c : d.initial.concentrations) {
    const auto k = d.species.index_of(c.species);
    if (!k) throw DeckError(fmt::format("initial concentration of undeclared species '{}'", c.species));
    const auto& sp = d.species[*k];
    for (std::size_t e = 0; e < g.size(); ++e) {
      if (!c.where.contains(g, e)) continue;
      if (sp.unit == ConcentrationUnit::Atm) {
        s.amount_at(e, *k) = c.value;
        continue;
      }
      if (g[e].atmosphere) continue;
      s.amount_at(e, *k) = amount_from_concentration(c.value, liquid_volume(s, g, d.materials, e), sp.unit);
    }
  }
  refresh_biophase(s, d);
  for (std::size_t e = 0; e < g.size(); ++e) {
    if (g[e].atmosphere) continue;
    const auto& mat = d.materials[g[e].material];
    s.S_G[e] = 1.0 - s.S_L[e] - s.S_B[e];
    if (s.S_G[e] < -1e-12)
      throw DeckError(fmt::format("element {}: initial biophase saturation {:.6g} exceeds the pore space left "
                                  "by S_L = {:.6g}",
                                  e, s.S_B[e], s.S_L[e]));
    s.S_G[e] = std::max(s.S_G[e], 0.0);
    if (s.S_L[e] <= mat.S_Lr)
      throw DeckError(fmt::format("element {}: initial S_L = {:.6g} is not above S_Lr = {:.6g}", e, s.S_L[e], mat.S_Lr));
    s.P_L[e] = liquid_pressure(s.S_L[e], s.elastic[e], s.S_B[e], mat, s.phases, Ss);
  }
  if (d.solver.equilibrium && !d.equilibria.empty()) {
    std::vector<CompiledEquilibrium> eqs;
    for (const auto& eq : d.equilibria) eqs.push_back(CompiledEquilibrium::compile(eq, d.species));
    solve_equilibria(s, g, d.materials, d.species, eqs);
  }
  return s;
}

RunOutputs run_simulation(const SimulationDeck& d, const RunOptions& opt) {
  const auto& g = d.grid;
  const auto& mats = d.materials;
  const auto& reg = d.species;
  const auto& sv = d.solver;
  const std::size_t n = g.size(), ns = reg.size();
  const std::size_t lo = first_soil(g);

  GridState s = opt.restart ? read_checkpoint(*opt.restart, d) : initial_state(d);
  const double t_start = s.time;

  std::vector<CompiledReaction> reactions;
  for (const auto& r : d.reactions) reactions.push_back(CompiledReaction::compile(r, reg));
  std::vector<CompiledEquilibrium> equilibria;
  for (const auto& eq : d.equilibria) equilibria.push_back(CompiledEquilibrium::compile(eq, reg));
  KineticsSettings ks{sv.kinetics_rtol, sv.kinetics_atol, 1e-12};
  TransportSettings ts{sv.courant, sv.max_substeps, sv.chemotaxis};

  std::optional<FlowSolver> flow;
  if (sv.flow) flow.emplace(g, mats, d.boundaries, FlowSettings::from(sv));

  RunOutputs out;
  out.t_end = sv.t_end;
  for (const auto& sp : reg.entries) {
    out.species_names.push_back(sp.name);
    out.species_units.push_back(unit_label(sp));
  }

  std::optional<CsvWriter> csv;
  if (!opt.out_dir.empty()) csv.emplace(d, opt.out_dir, false);

  Ledger ledger = Ledger::build(d);
  ledger.store(s, d, true);
  const double rho_L = s.phases.rho_L;

  // Cumulative water exchange in m^3 and species exchange in native amounts.
  double w_in = 0.0, w_out = 0.0, w_uptake = 0.0, w_immob = 0.0, w_bottom = 0.0;
  double last_bottom = 0.0, last_report_t = t_start;
  std::vector<double> sp_in(ns, 0.0), sp_out(ns, 0.0);

  std::vector<double> reports;
  for (double t : d.outputs.report_times(sv.t_end))
    if (t > t_start) reports.push_back(t);
  const auto breaks = breakpoints(d);
  std::size_t next_report = 0;

  auto emit = [&]() {
    FluxRow f;
    f.time = s.time;
    double stored = 0.0;
    for (std::size_t e = lo; e < n; ++e) stored += liquid_volume(s, g, mats, e);
    f.water_stored = stored;
    f.water_in = w_in;
    f.water_out = w_out;
    f.water_uptake = w_uptake;
    f.water_immobilized = w_immob;
    f.outflow_rate = s.time > last_report_t ? (w_bottom - last_bottom) / (s.time - last_report_t) : 0.0;
    last_bottom = w_bottom;
    last_report_t = s.time;
    f.water_table_depth = water_table_depth(s, g);
    f.species_stored.assign(ns, 0.0);
    for (std::size_t e = lo; e < n; ++e)
      for (std::size_t k = 0; k < ns; ++k) f.species_stored[k] += s.amount_at(e, k);
    f.species_in = sp_in;
    f.species_out = sp_out;
    auto snap = snapshot(s, d);
    std::vector<ProbeRow> rows;
    for (const auto& p : d.outputs.probes) {
      const auto k = reg.index_of(p.species);
      if (!k) continue;
      rows.push_back({s.time, p.species, p.element, snap.concentration[p.element * ns + *k], unit_label(reg[*k])});
    }
    if (csv) {
      csv->add(snap, f, rows);
      write_checkpoint(s, opt.out_dir / "checkpoint.csv");
    }
    out.snapshots.push_back(std::move(snap));
    out.flux.push_back(std::move(f));
    out.probes.insert(out.probes.end(), rows.begin(), rows.end());
  };

  const double eps_t = 1e-9 * std::max(1.0, sv.t_end);
  TransportReport trep;
  std::vector<bool> warned_singular(equilibria.size(), false);
  while (next_report < reports.size()) {
    const double target = reports[next_report];
    if (target - s.time <= eps_t) {
      s.time = target;
      emit();
      ++next_report;
      continue;
    }
    double limit = target - s.time;
    for (double b : breaks)
      if (b > s.time + eps_t) {
        limit = std::min(limit, b - s.time);
        break;
      }
    const double t0 = s.time;
    const long step_no = out.steps + 1;
    try {
      FlowStep fs;
      if (flow) {
        fs = flow->step(s, limit);
      } else {
        fs.dt = std::min(limit, sv.dt_max);
        fs.face_volume.assign(n, 0.0);
        fs.source.assign(n, 0.0);
        fs.uptake.assign(n, 0.0);
        fs.W_before = liquid_volumes(s, g, mats);
        fs.W_after = fs.W_before;
        s.time = t0 + fs.dt;
      }
      const double dt = fs.dt;
      // Snap to the target when the remaining gap is below the time resolution.
      if (target - s.time <= eps_t) s.time = target;

      // Water bookkeeping (kg).
      for (std::size_t e = lo; e < n; ++e) {
        if (fs.source[e] >= 0.0) {
          ledger.book.record_influx(e, 0, fs.source[e] * rho_L);
          w_in += fs.source[e];
        } else {
          ledger.book.record_outflux(e, 0, -fs.source[e] * rho_L);
          w_out -= fs.source[e];
        }
        ledger.book.record_outflux(e, 0, fs.uptake[e] * rho_L);
        w_uptake += fs.uptake[e];
        if (e + 1 < n) {
          ledger.book.record_transport(e, 0, -fs.face_volume[e] * rho_L);
          ledger.book.record_transport(e + 1, 0, fs.face_volume[e] * rho_L);
        }
      }
      if (n > lo) {
        const std::size_t last = n - 1;
        if (fs.bottom_out >= 0.0) {
          ledger.book.record_outflux(last, 0, fs.bottom_out * rho_L);
          w_out += fs.bottom_out;
        } else {
          ledger.book.record_influx(last, 0, -fs.bottom_out * rho_L);
          w_in -= fs.bottom_out;
        }
        w_bottom += fs.bottom_out;
        if (fs.top_in >= 0.0) {
          ledger.book.record_influx(lo, 0, fs.top_in * rho_L);
          w_in += fs.top_in;
        } else {
          ledger.book.record_outflux(lo, 0, -fs.top_in * rho_L);
          w_out -= fs.top_in;
        }
      }

      trep.reset(n, ns);
      if (sv.transport) {
        step_solute_transport(s, g, mats, reg, d.boundaries, fs, ts, trep);
        step_bio_transport(s, g, mats, reg, fs, ts, trep);
      }
      apply_species_sources(s, reg, d.boundaries, t0, dt, trep);
      for (std::size_t e = 0; e < n; ++e) {
        for (std::size_t k = 0; k < ns; ++k) {
          const auto q = ledger.quantity_of[k];
          const std::size_t i = e * ns + k;
          sp_in[k] += trep.in[i];
          sp_out[k] += trep.out[i];
          if (q < 0) continue;
          ledger.book.record_influx(e, q, trep.in[i]);
          ledger.book.record_outflux(e, q, trep.out[i]);
          ledger.book.record_transport(e, q, trep.net[i]);
        }
      }

      if (sv.kinetics && !reactions.empty()) {
        auto krep = step_kinetics(s, g, mats, reg, reactions, dt, ks);
        for (std::size_t e = 0; e < n; ++e)
          for (std::size_t k = 0; k < ns; ++k)
            if (ledger.quantity_of[k] >= 0 && krep.delta_amount[e * ns + k] != 0.0)
              ledger.book.record_reaction(e, ledger.quantity_of[k], krep.delta_amount[e * ns + k]);
        if (!krep.biophase.empty()) {
          auto xrep = apply_bio_exchange(s, g, mats, krep.dS_B, krep.f_L, sv.specific_storage);
          for (std::size_t e = 0; e < n; ++e) {
            const double w = xrep.water_immobilized[e];
            if (w != 0.0) ledger.book.record_reaction(e, 0, -w * rho_L);
            w_immob += w;
          }
          if (xrep.clipped) out.exchange_clipped = true;
          refresh_biophase(s, d);
        }
      }

      if (sv.equilibrium && !equilibria.empty()) {
        auto erep = solve_equilibria(s, g, mats, reg, equilibria);
        out.singular_equilibria += erep.singular.size();
        for (const auto& f : erep.singular) {
          for (std::size_t i = 0; i < equilibria.size(); ++i) {
            if (equilibria[i].name != f.equilibrium || warned_singular[i]) continue;
            warned_singular[i] = true;
            log::warn("equilibrium '{}' is singular in element {} at t={:.6g} s (a primary is zero); "
                      "secondary set to zero",
                      f.equilibrium, f.element, s.time);
          }
        }
      }
    } catch (const SolverError& e) {
      throw SolverError(fmt::format("step {} at t={:.9g} s: {}", step_no, t0, e.what()));
    } catch (const DomainError& e) {
      throw SolverError(fmt::format("step {} at t={:.9g} s: {}", step_no, t0, e.what()));
    }
    ++out.steps;

    ledger.store(s, d, false);
    const auto audit = audit_ledger(ledger.book, sv.audit_tol);
    if (audit.worst >= out.audit_worst) {
      out.audit_worst = audit.worst;
      out.audit_worst_quantity = audit.worst_quantity;
    }
    if (!audit.pass && opt.enforce_audit) {
      throw AuditFailure(fmt::format("step {} at t={:.9g} s: mass closure of '{}' is {:.3e} (element {} worst), "
                                     "above tolerance {:.1e}",
                                     step_no, s.time, audit.worst_quantity, audit.worst, audit.worst_element,
                                     sv.audit_tol));
    }
    if (d.outputs.every_step && reports[next_report] - s.time > eps_t) emit();
  }
  out.final_state = s;
  return out;
}

void write_outputs(const RunOutputs& o, const SimulationDeck& d, const std::filesystem::path& dir) {
  CsvWriter csv(d, dir, false);
  const std::size_t np = d.outputs.probes.size();
  std::size_t p = 0;
  for (std::size_t i = 0; i < o.snapshots.size(); ++i) {
    std::vector<ProbeRow> rows;
    while (p < o.probes.size() && o.probes[p].time == o.snapshots[i].time && rows.size() < np) rows.push_back(o.probes[p++]);
    csv.add(o.snapshots[i], o.flux.at(i), rows);
  }
}

void write_checkpoint(const GridState& s, const std::filesystem::path& path) {
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    auto f = open_csv(tmp, false);
    f << "# retort checkpoint\n";
    f << "time," << num(s.time) << '\n';
    f << "temperature," << num(s.temperature) << '\n';
    f << "size," << s.size() << ',' << s.n_species << '\n';
    f << "element,S_L,S_G,S_B,P_L,elastic,amounts...\n";
    for (std::size_t e = 0; e < s.size(); ++e) {
      f << e << ',' << num(s.S_L[e]) << ',' << num(s.S_G[e]) << ',' << num(s.S_B[e]) << ',' << num(s.P_L[e]) << ','
        << num(s.elastic[e]);
      for (std::size_t k = 0; k < s.n_species; ++k) f << ',' << num(s.amount_at(e, k));
      f << '\n';
    }
    if (!f) throw IoError(fmt::format("failed writing {}", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot replace {}: {}", path.string(), ec.message()));
}

GridState read_checkpoint(const std::filesystem::path& path, const SimulationDeck& d) {
  std::ifstream f(path);
  if (!f) throw IoError(fmt::format("cannot read checkpoint {}", path.string()));
  auto fail = [&](const std::string& why) { return InputError(fmt::format("{}: {}", path.string(), why)); };
  auto fields = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
  };
  auto number = [&](const std::string& t) {
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw fail(fmt::format("bad number '{}'", t));
      return v;
    } catch (const std::logic_error&) {
      throw fail(fmt::format("bad number '{}'", t));
    }
  };
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    rows.push_back(fields(line));
  }
  if (rows.size() < 4 || rows[0].size() != 2 || rows[0][0] != "time" || rows[1].size() != 2 ||
      rows[2].size() != 3 || rows[2][0] != "size")
    throw fail("not a checkpoint file");
  const std::size_t n = d.grid.size(), ns = d.species.size();
  if (rows[2][1] != std::to_string(n) || rows[2][2] != std::to_string(ns))
    throw fail(fmt::format("checkpoint holds {} elements and {} species; the deck has {} and {}", rows[2][1],
                           rows[2][2], n, ns));
  if (rows.size() != 4 + n) throw fail("element rows missing");
  GridState s(n, ns);
  s.phases = d.solver.phases;
  s.time = number(rows[0][1]);
  s.temperature = number(rows[1][1]);
  for (std::size_t e = 0; e < n; ++e) {
    const auto& r = rows[4 + e];
    if (r.size() != 6 + ns) throw fail(fmt::format("element row {} has {} fields", e, r.size()));
    s.S_L[e] = number(r[1]);
    s.S_G[e] = number(r[2]);
    s.S_B[e] = number(r[3]);
    s.P_L[e] = number(r[4]);
    s.elastic[e] = number(r[5]);
    for (std::size_t k = 0; k < ns; ++k) s.amount_at(e, k) = number(r[6 + k]);
  }
  return s;
}

IsotopeRatio compute_delta15N(double n14, double n15) {
  if (n14 == 0.0) throw DomainError("delta15N undefined for a zero 14N concentration");
  IsotopeRatio r;
  r.ratio = 15.0 * n15 / (14.0 * n14);
  r.delta = (r.ratio / kR15Standard - 1.0) * 1000.0;
  return r;
}

std::vector<IsotopeRatio> compute_delta15N(const std::vector<double>& n14, const std::vector<double>& n15) {
  if (n14.size() != n15.size()) throw DomainError("14N and 15N series differ in length");
  std::vector<IsotopeRatio> out;
  out.reserve(n14.size());
  for (std::size_t i = 0; i < n14.size(); ++i) out.push_back(compute_delta15N(n14[i], n15[i]));
  return out;
}

}  // namespace retort
