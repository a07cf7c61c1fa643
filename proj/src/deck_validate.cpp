#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "deck_internal.hpp"

namespace retort {

namespace {

class Checker {
 public:
  Checker(const SimulationDeck& d, const detail::SourceMap* lines, std::string file,
          std::vector<Diagnostic>& out)
      : d_(d), lines_(lines), file_(std::move(file)), out_(out) {}

  void run();

 private:
  void error(int line, std::string msg) { out_.push_back({file_, line, 1, Severity::Error, std::move(msg)}); }
  void warning(int line, std::string msg) {
    out_.push_back({file_, line, 1, Severity::Warning, std::move(msg)});
  }
  int line_of(const std::vector<int> detail::SourceMap::*field, std::size_t i) const {
    if (!lines_) return 0;
    const auto& v = lines_->*field;
    return i < v.size() ? v[i] : 0;
  }
  int line_of(int detail::SourceMap::*field) const { return lines_ ? lines_->*field : 0; }

  const Species* find(const std::string& name) const {
    auto i = d_.species.index_of(name);
    return i ? &d_.species[*i] : nullptr;
  }

  void materials();
  void grid();
  void species();
  void reactions();
  void equilibria();
  void initial();
  void boundaries();
  void solver();
  void outputs();
  void sweep();

  const SimulationDeck& d_;
  const detail::SourceMap* lines_;
  std::string file_;
  std::vector<Diagnostic>& out_;
};

void Checker::materials() {
  if (d_.materials.empty()) error(line_of(&detail::SourceMap::grid), "deck declares no [MATERIAL]");
  std::set<std::string> names;
  for (std::size_t i = 0; i < d_.materials.size(); ++i) {
    const auto& m = d_.materials[i];
    const int ln = line_of(&detail::SourceMap::materials, i);
    const auto id = fmt::format("[MATERIAL] '{}'", m.name);
    if (!names.insert(m.name).second) error(ln, fmt::format("{}: duplicate material name", id));
    if (!(m.k > 0.0)) error(ln, fmt::format("{}: k must be positive", id));
    if (!(m.phi > 0.0 && m.phi < 1.0)) error(ln, fmt::format("{}: phi must lie in (0, 1)", id));
    if (!(m.psi_s < 0.0)) error(ln, fmt::format("{}: psi_s must be negative", id));
    if (!(m.b > 0.0)) error(ln, fmt::format("{}: b must be positive", id));
    if (m.S_Lr < 0.0 || m.S_Gr < 0.0 || !(m.S_Lr + m.S_Gr < 1.0))
      error(ln, fmt::format("{}: residual saturations must satisfy 0 <= S_Lr + S_Gr < 1", id));
    if (!(m.rho_m > 0.0)) error(ln, fmt::format("{}: rho_m must be positive", id));
    if (m.model == RetentionModel::VanGenuchten && !(m.vg_alpha > 0.0 && m.vg_n > 1.0))
      error(ln, fmt::format("{}: van Genuchten needs vg_alpha > 0 and vg_n > 1", id));
  }
}

void Checker::grid() {
  const int ln = line_of(&detail::SourceMap::grid);
  const auto& g = d_.grid;
  if (g.size() == 0) {
    error(ln, "[GRID] defines no elements");
    return;
  }
  std::size_t soil = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& e = g[i];
    if (!(e.volume > 0.0) || !(e.area > 0.0) || !(e.height > 0.0))
      error(ln, fmt::format("[GRID] element {}: volume, area and height must be positive", i));
    if (e.material >= d_.materials.size())
      error(ln, fmt::format("[GRID] element {}: material index {} is undeclared", i, e.material));
    if (e.atmosphere && i != 0) error(ln, fmt::format("[GRID] element {}: only element 0 may be the atmosphere", i));
    if (!e.atmosphere) ++soil;
    if (i > 0 && !(e.z < g[i - 1].z))
      error(ln, fmt::format("[GRID] element {}: elevations must decrease strictly downwards", i));
  }
  if (soil == 0) error(ln, "[GRID] has no soil element");
}

void Checker::species() {
  std::set<std::string> names;
  for (std::size_t i = 0; i < d_.species.size(); ++i) {
    const auto& s = d_.species[i];
    const int ln = line_of(&detail::SourceMap::species, i);
    if (!names.insert(s.name).second) error(ln, fmt::format("[SPECIES] duplicate name '{}'", s.name));
    if (s.molar_mass < 0.0) error(ln, fmt::format("[SPECIES] '{}': molar mass must be >= 0", s.name));
    if (s.diffusivity < 0.0) error(ln, fmt::format("[SPECIES] '{}': diffusivity must be >= 0", s.name));
    if ((s.kind == SpeciesKind::GAS) != (s.unit == ConcentrationUnit::Atm))
      error(ln, fmt::format("[SPECIES] '{}': gas species use atm and only gas species do", s.name));
    if (s.phase == Phase::B && s.kind != SpeciesKind::BIO)
      error(ln, fmt::format("[SPECIES] '{}': only BIO species live in phase B", s.name));
    if (s.occupies_biophase() && s.unit != ConcentrationUnit::MgPerLitre)
      error(ln, fmt::format("[SPECIES] '{}': phase-B biomass must be declared in mg/L", s.name));
    if (s.kind != SpeciesKind::BIO) continue;
    const int bl = lines_ && i < lines_->bio.size() && lines_->bio[i] ? lines_->bio[i] : ln;
    if (!s.bio) {
      error(bl, fmt::format("[BIO] '{}': missing properties", s.name));
      continue;
    }
    const auto& b = *s.bio;
    const auto id = fmt::format("[BIO] '{}'", s.name);
    if (!(b.detachment >= 0.0 && b.detachment <= 1.0)) error(bl, fmt::format("{}: detachment must lie in [0, 1]", id));
    if (!(b.f_L >= 0.0 && b.f_L < 1.0)) error(bl, fmt::format("{}: f_L must lie in [0, 1)", id));
    if (!(b.density > 0.0)) error(bl, fmt::format("{}: density must be positive", id));
    if (b.diffusion < 0.0) error(bl, fmt::format("{}: diffusion must be >= 0", id));
    if (b.T_LB.has_value() != b.T_UB.has_value())
      error(bl, fmt::format("{}: T_LB and T_UB must be given together", id));
    if (b.T_LB && b.T_UB && !(*b.T_LB < *b.T_UB)) error(bl, fmt::format("{}: T_LB must be below T_UB", id));
    if (b.SL_LB.has_value() != b.SL_UB.has_value())
      error(bl, fmt::format("{}: SL_LB and SL_UB must be given together", id));
    if (b.SL_LB && b.SL_UB && !(*b.SL_LB > 0.0 && *b.SL_LB < *b.SL_UB && *b.SL_UB <= 1.0))
      error(bl, fmt::format("{}: need 0 < SL_LB < SL_UB <= 1", id));
    for (const auto* list : {&b.attractants, &b.repellents}) {
      for (const auto& c : *list) {
        const auto* t = find(c.species);
        if (!t) error(bl, fmt::format("{}: chemotaxis references undeclared species '{}'", id, c.species));
        else if (t->phase != Phase::L) error(bl, fmt::format("{}: chemotaxis species '{}' is not dissolved", id, c.species));
        if (!(c.coefficient >= 0.0)) error(bl, fmt::format("{}: chemotaxis coefficients must be >= 0", id));
      }
    }
  }
}

void Checker::reactions() {
  std::set<std::string> names;
  for (std::size_t i = 0; i < d_.reactions.size(); ++i) {
    const auto& r = d_.reactions[i];
    const int ln = line_of(&detail::SourceMap::reactions, i);
    const auto id = fmt::format("[REACTION] '{}'", r.name);
    if (!names.insert(r.name).second) error(ln, fmt::format("{}: duplicate reaction name", id));
    if (!(r.rate >= 0.0)) error(ln, fmt::format("{}: rate must be >= 0", id));
    if (r.stoichiometry.empty()) warning(ln, fmt::format("{}: no stoichiometry; the reaction has no effect", id));
    bool resolved = true;
    for (const auto& t : r.stoichiometry) {
      const auto* s = find(t.species);
      if (!s) {
        error(ln, fmt::format("{}: undeclared species '{}'", id, t.species));
        resolved = false;
      } else if (!s->is_primary()) {
        error(ln, fmt::format("{}: kinetic stoichiometry may only use PRI/BIO species, '{}' is {}", id,
                              t.species, to_string(s->kind)));
      }
      if (t.coefficient == 0.0) error(ln, fmt::format("{}: zero coefficient for '{}'", id, t.species));
    }
    auto terms = [&](const std::vector<RateTerm>& list, const char* what, bool positive) {
      for (const auto& t : list) {
        if (!find(t.species)) {
          error(ln, fmt::format("{}: undeclared species '{}' in {} term", id, t.species, what));
          resolved = false;
        }
        if (positive && !(t.value > 0.0))
          error(ln, fmt::format("{}: {} constant for '{}' must be positive", id, what, t.species));
      }
    };
    terms(r.norder, "order", false);
    terms(r.mmm, "mmm", true);
    terms(r.competition, "competition", true);
    terms(r.inhibition, "inhibition", true);
    if (r.bio_actor) {
      const auto* s = find(*r.bio_actor);
      if (!s) {
        error(ln, fmt::format("{}: undeclared bio actor '{}'", id, *r.bio_actor));
        resolved = false;
      } else if (s->kind != SpeciesKind::BIO) {
        error(ln, fmt::format("{}: bio actor '{}' is not a BIO species", id, *r.bio_actor));
      }
    }
    if (resolved)
      for (auto& w : validate_reaction_balance(r, d_.species)) warning(ln, fmt::format("{}: {}", id, w));
  }
}

void Checker::equilibria() {
  std::map<std::string, std::string> solver_of;
  std::set<std::string> names;
  for (std::size_t i = 0; i < d_.equilibria.size(); ++i) {
    const auto& q = d_.equilibria[i];
    const int ln = line_of(&detail::SourceMap::equilibria, i);
    const auto id = fmt::format("[EQUILIBRIUM] '{}'", q.name);
    if (!names.insert(q.name).second) error(ln, fmt::format("{}: duplicate equilibrium name", id));
    const auto* s = find(q.solved);
    if (!s) error(ln, fmt::format("{}: undeclared species '{}'", id, q.solved));
    else if (s->is_primary())
      error(ln, fmt::format("{}: solved species '{}' must be SEC, MIN or GAS", id, q.solved));
    else if (auto [it, fresh] = solver_of.emplace(q.solved, q.name); !fresh)
      error(ln, fmt::format("{}: '{}' is already solved by '{}'", id, q.solved, it->second));
    if (q.solved_exponent == 0.0) error(ln, fmt::format("{}: solved exponent must be nonzero", id));
    if (q.primaries.empty()) error(ln, fmt::format("{}: needs at least one primary", id));
    for (const auto& p : q.primaries) {
      const auto* ps = find(p.species);
      if (!ps) error(ln, fmt::format("{}: undeclared species '{}'", id, p.species));
      else if (!ps->is_primary())
        error(ln, fmt::format("{}: '{}' is not primary; chained secondaries are not supported", id, p.species));
    }
    if (q.second_point && q.second_point->temperature == q.reference_T)
      error(ln, fmt::format("{}: van 't Hoff points need distinct temperatures", id));
    if (!(q.reference_T > 0.0)) error(ln, fmt::format("{}: reference temperature must be positive", id));
  }
  for (const auto& s : d_.species.entries) {
    if (!s.is_primary() && !solver_of.count(s.name))
      warning(line_of(&detail::SourceMap::species_block),
              fmt::format("[SPECIES] secondary '{}' has no equilibrium and stays at zero", s.name));
  }
}

void Checker::initial() {
  const int ln = line_of(&detail::SourceMap::initial);
  const auto n = d_.grid.size();
  auto check_selector = [&](const Selector& s) {
    if (s.kind == Selector::Kind::Elements && s.last >= n)
      error(ln, fmt::format("[INITIAL] element range {}-{} exceeds the grid ({} elements)", s.first, s.last, n));
  };
  for (const auto& s : d_.initial.saturation) {
    if (!(s.value > 0.0 && s.value <= 1.0)) error(ln, fmt::format("[INITIAL] S_L {} must lie in (0, 1]", s.value));
    check_selector(s.where);
  }
  if (d_.initial.water_table_depth && !std::isfinite(*d_.initial.water_table_depth))
    error(ln, "[INITIAL] hydrostatic depth must be finite");
  if (d_.initial.saturation.empty() && !d_.initial.water_table_depth)
    warning(ln, "[INITIAL] no S_L given; soil starts liquid-full");
  for (const auto& c : d_.initial.concentrations) {
    const auto* s = find(c.species);
    if (!s) error(ln, fmt::format("[INITIAL] undeclared species '{}'", c.species));
    else if (!s->is_primary())
      warning(ln, fmt::format("[INITIAL] '{}' is secondary; its value is overwritten by equilibrium", c.species));
    if (!(c.value >= 0.0)) error(ln, fmt::format("[INITIAL] '{}' must be >= 0", c.species));
    check_selector(c.where);
  }
}

void Checker::boundaries() {
  const auto n = d_.grid.size();
  for (std::size_t i = 0; i < d_.boundaries.size(); ++i) {
    const auto& b = d_.boundaries[i];
    const int ln = line_of(&detail::SourceMap::boundaries, i);
    const auto id = fmt::format("[BOUNDARY] {}", to_string(b.type));
    auto soil_element = [&](std::size_t e) {
      if (e >= n) {
        error(ln, fmt::format("{}: element {} outside the grid", id, e));
        return false;
      }
      if (d_.grid[e].atmosphere) {
        error(ln, fmt::format("{}: element {} is the atmosphere", id, e));
        return false;
      }
      return true;
    };
    const bool liquid_unit = b.unit == RateUnit::M3PerS || b.unit == RateUnit::MPerS ||
                             b.unit == RateUnit::MmPerDay || b.unit == RateUnit::KgPerS;
    switch (b.type) {
      case BoundaryType::Liquid:
        soil_element(b.element);
        if (!liquid_unit) error(ln, fmt::format("{}: '{}' is not a liquid rate unit", id, to_string(b.unit)));
        for (const auto& c : b.carried) {
          const auto* s = find(c.species);
          if (!s) error(ln, fmt::format("{}: undeclared species '{}'", id, c.species));
          else if (s->phase != Phase::L || !s->is_primary())
            error(ln, fmt::format("{}: carried species '{}' must be dissolved PRI/BIO", id, c.species));
          if (!(c.value >= 0.0)) error(ln, fmt::format("{}: carried concentration must be >= 0", id));
        }
        break;
      case BoundaryType::Species: {
        soil_element(b.element);
        const auto* s = find(b.species);
        if (!s) {
          error(ln, fmt::format("{}: undeclared species '{}'", id, b.species));
          break;
        }
        if (!s->is_primary()) error(ln, fmt::format("{}: '{}' must be PRI or BIO", id, b.species));
        const bool mol = s->unit == ConcentrationUnit::MolPerLitre;
        if (mol ? b.unit != RateUnit::MolPerS : (b.unit != RateUnit::KgPerS && b.unit != RateUnit::MgPerS))
          error(ln, fmt::format("{}: unit '{}' does not match species '{}' ({})", id, to_string(b.unit), b.species,
                                to_string(s->unit)));
        break;
      }
      case BoundaryType::Uptake: {
        if (!liquid_unit) error(ln, fmt::format("{}: '{}' is not a liquid rate unit", id, to_string(b.unit)));
        if (b.uptake.empty()) {
          error(ln, fmt::format("{}: no uptake elements", id));
          break;
        }
        double sum = 0.0;
        std::set<std::size_t> seen;
        for (const auto& u : b.uptake) {
          soil_element(u.element);
          if (!seen.insert(u.element).second) error(ln, fmt::format("{}: element {} listed twice", id, u.element));
          if (!(u.fraction >= 0.0)) error(ln, fmt::format("{}: fractions must be >= 0", id));
          sum += u.fraction;
        }
        if (std::abs(sum - 1.0) > 1e-12)
          error(ln, fmt::format("{}: uptake fractions sum to {:.15g}, not 1", id, sum));
        break;
      }
      case BoundaryType::FreeDrainage:
      case BoundaryType::Head:
        break;
    }
    if (!(b.start < b.end)) error(ln, fmt::format("{}: start must precede end", id));
    if (!b.series.empty()) {
      for (std::size_t k = 1; k < b.series.time.size(); ++k)
        if (!(b.series.time[k] > b.series.time[k - 1])) {
          error(ln, fmt::format("{}: series times must increase strictly", id));
          break;
        }
    }
  }
  std::size_t bottom = 0;
  for (const auto& b : d_.boundaries)
    if (b.type == BoundaryType::FreeDrainage || (b.type == BoundaryType::Head && b.face == Face::Bottom)) ++bottom;
  if (bottom > 1) error(0, "[BOUNDARY] more than one bottom condition");
}

void Checker::solver() {
  const int ln = line_of(&detail::SourceMap::solver);
  const auto& s = d_.solver;
  if (!(s.t_end > 0.0)) error(ln, "[SOLVER] end must be positive");
  if (!(s.temperature > 0.0)) error(ln, "[SOLVER] temperature must be positive (K)");
  if (!(s.dt_min > 0.0 && s.dt_min <= s.dt_init && s.dt_init <= s.dt_max))
    error(ln, "[SOLVER] need 0 < dt_min <= dt_init <= dt_max");
  if (s.max_picard_iters < 1) error(ln, "[SOLVER] picard_max_iter must be >= 1");
  if (!(s.picard_tol_pressure > 0.0 && s.picard_tol_saturation > 0.0))
    error(ln, "[SOLVER] Picard tolerances must be positive");
  if (!(s.audit_tol > 0.0)) error(ln, "[SOLVER] audit_tol must be positive");
  if (!(s.kinetics_rtol > 0.0 && s.kinetics_atol > 0.0)) error(ln, "[SOLVER] kinetics tolerances must be positive");
  if (!(s.courant > 0.0 && s.courant <= 1.0)) error(ln, "[SOLVER] courant must lie in (0, 1]");
  if (s.max_substeps < 1) error(ln, "[SOLVER] max_substeps must be >= 1");
  if (!(s.specific_storage > 0.0)) error(ln, "[SOLVER] specific_storage must be positive");
  const auto& p = s.phases;
  if (!(p.rho_L > 0.0 && p.rho_G > 0.0 && p.rho_B > 0.0 && p.mu_L > 0.0 && p.gravity > 0.0))
    error(ln, "[SOLVER] phase properties must be positive");
}

void Checker::outputs() {
  const int ln = line_of(&detail::SourceMap::output);
  const auto& o = d_.outputs;
  for (std::size_t i = 0; i < o.times.size(); ++i) {
    if (!(o.times[i] >= 0.0)) error(ln, "[OUTPUT] times must be >= 0");
    if (i > 0 && !(o.times[i] > o.times[i - 1])) {
      error(ln, "[OUTPUT] times must increase strictly");
      break;
    }
  }
  if (o.interval && !(*o.interval > 0.0)) error(ln, "[OUTPUT] interval must be positive");
  for (const auto& p : o.probes) {
    if (!find(p.species)) error(ln, fmt::format("[OUTPUT] probe references undeclared species '{}'", p.species));
    if (p.element >= d_.grid.size())
      error(ln, fmt::format("[OUTPUT] probe element {} outside the grid", p.element));
  }
}

void Checker::sweep() {
  if (!d_.sweep) return;
  const int ln = line_of(&detail::SourceMap::sweep);
  const auto& w = *d_.sweep;
  if (w.targets.empty()) error(ln, "[SWEEP] needs at least one target");
  if (w.workers < 1) error(ln, "[SWEEP] workers must be >= 1");
  if (w.mode == SweepMode::Gaussian) {
    if (w.replicas < 1) error(ln, "[SWEEP] replicas must be >= 1");
    if (!(w.rel_std >= 0.0)) error(ln, "[SWEEP] rel_std must be >= 0");
  } else {
    if (w.values.empty()) error(ln, "[SWEEP] grid mode needs values");
    if (w.targets.size() > 1) error(ln, "[SWEEP] grid mode takes a single target");
  }
}

void Checker::run() {
  materials();
  grid();
  species();
  reactions();
  equilibria();
  initial();
  boundaries();
  solver();
  outputs();
  sweep();
}

}  // namespace

namespace detail {

void validate_into(const SimulationDeck& deck, const SourceMap* lines, const std::string& file,
                   std::vector<Diagnostic>& out) {
  Checker(deck, lines, file, out).run();
}

}  // namespace detail

std::vector<Diagnostic> validate_deck(const SimulationDeck& deck) {
  std::vector<Diagnostic> out;
  detail::validate_into(deck, nullptr, "<deck>", out);
  return out;
}

std::vector<std::string> validate_reaction_balance(const ReactionSpec& spec, const SpeciesRegistry& registry) {
  std::vector<std::string> warnings;
  double net = 0.0, gross = 0.0;
  for (const auto& t : spec.stoichiometry) {
    const auto i = registry.index_of(t.species);
    if (!i) continue;
    const auto& s = registry[*i];
    if (s.molar_mass == 0.0) continue;  // virtual tracer
    const double per_unit = s.unit == ConcentrationUnit::MgPerLitre ? 1e-6 : s.molar_mass;
    net += t.coefficient * per_unit;
    gross += std::abs(t.coefficient * per_unit);
  }
  if (gross > 0.0 && std::abs(net) > 1e-6 * gross) {
    warnings.push_back(fmt::format("stoichiometry is mass-imbalanced by {:.3g} relative", std::abs(net) / gross));
  }
  return warnings;
}

}  // namespace retort
