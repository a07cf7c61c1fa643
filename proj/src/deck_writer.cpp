#include <charconv>
#include <cmath>
#include <sstream>

#include "deck_internal.hpp"

namespace retort {

namespace detail {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace detail

namespace {

using detail::format_double;

std::string_view model_name(RetentionModel m) {
  return m == RetentionModel::BrooksCorey ? "brooks_corey" : "van_genuchten";
}

std::string selector_text(const Selector& s) {
  switch (s.kind) {
    case Selector::Kind::All: return "";
    case Selector::Kind::Elements:
      return " elements " + std::to_string(s.first) + " " + std::to_string(s.last);
    case Selector::Kind::Depth:
      return " depth " + format_double(s.top) + " " + format_double(s.bottom);
  }
  return "";
}

const char* on_off(bool b) { return b ? "on" : "off"; }

}  // namespace

std::string serialize_deck(const SimulationDeck& d) {
  std::ostringstream o;
  const auto& s = d.solver;
  o << "[SOLVER]\n"
    << "end = " << format_double(s.t_end) << "\n"
    << "temperature = " << format_double(s.temperature) << "\n"
    << "dt_init = " << format_double(s.dt_init) << "\n"
    << "dt_min = " << format_double(s.dt_min) << "\n"
    << "dt_max = " << format_double(s.dt_max) << "\n"
    << "picard_max_iter = " << s.max_picard_iters << "\n"
    << "picard_tol_pressure = " << format_double(s.picard_tol_pressure) << "\n"
    << "picard_tol_saturation = " << format_double(s.picard_tol_saturation) << "\n"
    << "audit_tol = " << format_double(s.audit_tol) << "\n"
    << "kinetics_rtol = " << format_double(s.kinetics_rtol) << "\n"
    << "kinetics_atol = " << format_double(s.kinetics_atol) << "\n"
    << "courant = " << format_double(s.courant) << "\n"
    << "max_substeps = " << s.max_substeps << "\n"
    << "specific_storage = " << format_double(s.specific_storage) << "\n"
    << "rho_L = " << format_double(s.phases.rho_L) << "\n"
    << "rho_G = " << format_double(s.phases.rho_G) << "\n"
    << "rho_B = " << format_double(s.phases.rho_B) << "\n"
    << "mu_L = " << format_double(s.phases.mu_L) << "\n"
    << "gravity = " << format_double(s.phases.gravity) << "\n"
    << "flow = " << on_off(s.flow) << "\n"
    << "transport = " << on_off(s.transport) << "\n"
    << "chemotaxis = " << on_off(s.chemotaxis) << "\n"
    << "kinetics = " << on_off(s.kinetics) << "\n"
    << "equilibrium = " << on_off(s.equilibrium) << "\n\n";

  for (const auto& m : d.materials) {
    o << "[MATERIAL]\nname = " << m.name << "\n"
      << "k = " << format_double(m.k) << "\n"
      << "phi = " << format_double(m.phi) << "\n"
      << "psi_s = " << format_double(m.psi_s) << "\n"
      << "b = " << format_double(m.b) << "\n"
      << "S_Lr = " << format_double(m.S_Lr) << "\n"
      << "S_Gr = " << format_double(m.S_Gr) << "\n"
      << "rho_m = " << format_double(m.rho_m) << "\n"
      << "model = " << model_name(m.model) << "\n"
      << "vg_alpha = " << format_double(m.vg_alpha) << "\n"
      << "vg_n = " << format_double(m.vg_n) << "\n\n";
  }

  o << "[GRID]\n";
  for (const auto& e : d.grid.elements) {
    o << "element = " << format_double(e.z) << " " << format_double(e.height) << " "
      << format_double(e.volume) << " " << format_double(e.area) << " "
      << d.materials.at(e.material).name << (e.atmosphere ? " atmosphere" : "") << "\n";
  }
  o << "\n";

  if (d.species.size() > 0) {
    o << "[SPECIES]\n";
    for (const auto& sp : d.species.entries) {
      o << "species = " << sp.name << " " << to_string(sp.kind) << " " << to_string(sp.phase)
        << " " << to_string(sp.unit) << " " << format_double(sp.molar_mass) << " "
        << format_double(sp.diffusivity) << "\n";
    }
    o << "\n";
  }
  for (const auto& sp : d.species.entries) {
    if (!sp.bio) continue;
    const auto& b = *sp.bio;
    o << "[BIO]\nname = " << sp.name << "\n"
      << "detachment = " << format_double(b.detachment) << "\n"
      << "diffusion = " << format_double(b.diffusion) << "\n"
      << "f_L = " << format_double(b.f_L) << "\n"
      << "density = " << format_double(b.density) << "\n";
    if (b.T_LB) o << "T_LB = " << format_double(*b.T_LB) << "\n";
    if (b.T_UB) o << "T_UB = " << format_double(*b.T_UB) << "\n";
    if (b.SL_LB) o << "SL_LB = " << format_double(*b.SL_LB) << "\n";
    if (b.SL_UB) o << "SL_UB = " << format_double(*b.SL_UB) << "\n";
    for (const auto& c : b.attractants)
      o << "attractant = " << c.species << " " << format_double(c.coefficient) << "\n";
    for (const auto& c : b.repellents)
      o << "repellent = " << c.species << " " << format_double(c.coefficient) << "\n";
    o << "\n";
  }

  for (const auto& r : d.reactions) {
    o << "[REACTION]\nname = " << r.name << "\nrate = " << format_double(r.rate) << "\n";
    for (const auto& t : r.stoichiometry)
      o << "stoich = " << t.species << " " << format_double(t.coefficient) << "\n";
    for (const auto& t : r.norder) o << "order = " << t.species << " " << format_double(t.value) << "\n";
    for (const auto& t : r.mmm) o << "mmm = " << t.species << " " << format_double(t.value) << "\n";
    for (const auto& t : r.competition)
      o << "competition = " << t.species << " " << format_double(t.value) << "\n";
    for (const auto& t : r.inhibition)
      o << "inhibition = " << t.species << " " << format_double(t.value) << "\n";
    if (r.bio_actor) o << "bio = " << *r.bio_actor << "\n";
    if (r.inhibition_form == InhibitionForm::Literal) o << "inhibition_form = literal\n";
    o << "\n";
  }

  for (const auto& q : d.equilibria) {
    o << "[EQUILIBRIUM]\nname = " << q.name << "\n"
      << "solve = " << q.solved << " " << format_double(q.solved_exponent) << "\n";
    for (const auto& p : q.primaries)
      o << "primary = " << p.species << " " << format_double(p.value) << "\n";
    o << "log10K = " << format_double(q.log10K) << "\n"
      << "reference_T = " << format_double(q.reference_T) << "\n";
    if (q.second_point)
      o << "log10K_at = " << format_double(q.second_point->temperature) << " "
        << format_double(q.second_point->log10K) << "\n";
    o << "\n";
  }

  const auto& in = d.initial;
  o << "[INITIAL]\n";
  for (const auto& s0 : in.saturation)
    o << "S_L = " << format_double(s0.value) << selector_text(s0.where) << "\n";
  if (in.water_table_depth) o << "hydrostatic = " << format_double(*in.water_table_depth) << "\n";
  for (const auto& c : in.concentrations)
    o << "species = " << c.species << " " << format_double(c.value) << selector_text(c.where)
      << "\n";
  o << "\n";

  for (const auto& b : d.boundaries) {
    o << "[BOUNDARY]\ntype = " << to_string(b.type) << "\n";
    switch (b.type) {
      case BoundaryType::FreeDrainage: break;
      case BoundaryType::Head:
        o << "element = " << b.element << "\n"
          << "pressure_head = " << format_double(b.pressure_head) << "\n"
          << "face = " << (b.face == Face::Top ? "top" : "bottom") << "\n";
        break;
      default:
        o << "element = " << b.element << "\n"
          << "rate = " << format_double(b.rate) << "\n"
          << "unit = " << to_string(b.unit) << "\n";
        break;
    }
    if (b.type == BoundaryType::Species) o << "species = " << b.species << "\n";
    o << "start = " << format_double(b.start) << "\n";
    if (std::isfinite(b.end)) o << "end = " << format_double(b.end) << "\n";
    if (b.source) {
      o << "series = " << b.source->file << " " << b.source->column << "\n"
        << "series_scale = " << format_double(b.source->time_scale) << "\n";
    }
    for (const auto& [t, v] : b.points)
      o << "point = " << format_double(t) << " " << format_double(v) << "\n";
    for (const auto& c : b.carried) o << "conc = " << c.species << " " << format_double(c.value) << "\n";
    for (const auto& u : b.uptake) o << "uptake = " << u.element << " " << format_double(u.fraction) << "\n";
    o << "\n";
  }

  const auto& out = d.outputs;
  o << "[OUTPUT]\n";
  if (out.interval) o << "interval = " << format_double(*out.interval) << "\n";
  if (!out.times.empty()) {
    o << "times =";
    for (double t : out.times) o << " " << format_double(t);
    o << "\n";
  }
  if (out.every_step) o << "every_step = on\n";
  for (const auto& p : out.probes) o << "probe = " << p.species << " " << p.element << "\n";
  if (!out.dir.empty()) o << "dir = " << out.dir << "\n";
  o << "\n";

  if (d.sweep) {
    const auto& w = *d.sweep;
    o << "[SWEEP]\nmode = " << (w.mode == SweepMode::Gaussian ? "gaussian" : "grid") << "\n";
    for (const auto& t : w.targets) o << "target = " << t << "\n";
    o << "replicas = " << w.replicas << "\n"
      << "rel_std = " << format_double(w.rel_std) << "\n"
      << "seed = " << w.seed << "\n";
    if (!w.values.empty()) {
      o << "values =";
      for (double v : w.values) o << " " << format_double(v);
      o << "\n";
    }
    if (!w.value_unit.empty()) o << "value_unit = " << w.value_unit << "\n";
    for (const auto& q : w.quantities) o << "quantity = " << q << "\n";
    o << "workers = " << w.workers << "\n";
  }
  return o.str();
}

}  // namespace retort
