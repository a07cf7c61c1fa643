#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "deck_internal.hpp"
#include "retort/error.hpp"

namespace retort {

namespace {

constexpr std::size_t kMaxElements = 100000;

struct Token {
  std::string text;
  int col = 0;
};

struct Entry {
  std::string key;
  int line = 0;
  int key_col = 0;
  int value_col = 0;  // column just after '='
  std::vector<Token> values;
};

struct Block {
  std::string name;
  int line = 0;
  int col = 0;
  std::vector<Entry> entries;
};

std::vector<Token> tokenize(std::string_view s, int base_col) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; };
  while (i < s.size()) {
    while (i < s.size() && space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !space(s[j])) ++j;
    if (j > i) out.push_back({std::string(s.substr(i, j - i)), base_col + static_cast<int>(i)});
    i = j;
  }
  return out;
}

class Reader {
 public:
  Reader(std::string file, std::vector<Diagnostic>& diags) : file_(std::move(file)), diags_(diags) {}

  void error(int line, int col, std::string msg) {
    diags_.push_back({file_, line, col, Severity::Error, std::move(msg)});
  }
  void warning(int line, int col, std::string msg) {
    diags_.push_back({file_, line, col, Severity::Warning, std::move(msg)});
  }

  std::optional<double> number(const Token& t) {
    std::string_view s = t.text;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v) || s.empty()) {
      error(line_, t.col, fmt::format("expected a finite number, got '{}'", t.text));
      return std::nullopt;
    }
    return v;
  }

  /// Decimal or a/b rational.
  std::optional<double> rational(const Token& t) {
    const auto slash = t.text.find('/');
    if (slash == std::string::npos) return number(t);
    const auto a = number({t.text.substr(0, slash), t.col});
    const auto b = number({t.text.substr(slash + 1), t.col + static_cast<int>(slash) + 1});
    if (!a || !b) return std::nullopt;
    if (*b == 0.0) {
      error(line_, t.col, "zero denominator");
      return std::nullopt;
    }
    return *a / *b;
  }

  template <typename Int>
  std::optional<Int> integer(const Token& t) {
    Int v{};
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size()) {
      error(line_, t.col, fmt::format("expected an integer, got '{}'", t.text));
      return std::nullopt;
    }
    return v;
  }

  bool arity(const Entry& e, std::size_t lo, std::size_t hi) {
    if (e.values.size() < lo || e.values.size() > hi) {
      if (lo == hi)
        error(e.line, e.value_col, fmt::format("'{}' takes {} value(s), got {}", e.key, lo, e.values.size()));
      else
        error(e.line, e.value_col,
              fmt::format("'{}' takes {} to {} values, got {}", e.key, lo, hi, e.values.size()));
      return false;
    }
    return true;
  }

  void at(int line) { line_ = line; }
  const std::string& file() const { return file_; }

 private:
  std::string file_;
  std::vector<Diagnostic>& diags_;
  int line_ = 0;
};

enum class Dim { None, Time, Length, Temperature, Pressure };

std::optional<double> unit_scale(Dim dim, std::string_view u, double v) {
  switch (dim) {
    case Dim::Time:
      if (u == "s") return v;
      if (u == "min") return v * 60.0;
      if (u == "h") return v * 3600.0;
      if (u == "d" || u == "day" || u == "days") return v * 86400.0;
      break;
    case Dim::Length:
      if (u == "m") return v;
      if (u == "cm") return v / 100.0;
      if (u == "mm") return v / 1000.0;
      break;
    case Dim::Temperature:
      if (u == "K") return v;
      if (u == "C") return v + 273.15;
      break;
    case Dim::Pressure:
      if (u == "Pa") return v;
      if (u == "kPa") return v * 1000.0;
      break;
    case Dim::None: break;
  }
  return std::nullopt;
}

std::optional<double> time_unit_seconds(std::string_view u) { return unit_scale(Dim::Time, u, 1.0); }

class DeckBuilder {
 public:
  DeckBuilder(Reader& r, const ParseOptions& opts) : r_(r), opts_(opts) {}

  std::optional<SimulationDeck> build(std::vector<Block>& blocks);
  detail::SourceMap lines;

 private:
  // Scalar value with optional unit suffix.
  std::optional<double> quantity(const Entry& e, Dim dim) {
    r_.at(e.line);
    if (!r_.arity(e, 1, dim == Dim::None ? 1 : 2)) return std::nullopt;
    auto v = r_.number(e.values[0]);
    if (!v) return std::nullopt;
    if (e.values.size() == 2) {
      auto s = unit_scale(dim, e.values[1].text, *v);
      if (!s) {
        r_.error(e.line, e.values[1].col, fmt::format("unknown unit '{}' for '{}'", e.values[1].text, e.key));
        return std::nullopt;
      }
      return s;
    }
    return v;
  }

  std::optional<bool> flag(const Entry& e) {
    r_.at(e.line);
    if (!r_.arity(e, 1, 1)) return std::nullopt;
    const auto& t = e.values[0].text;
    if (t == "on" || t == "yes" || t == "true") return true;
    if (t == "off" || t == "no" || t == "false") return false;
    r_.error(e.line, e.values[0].col, fmt::format("expected on/off, got '{}'", t));
    return std::nullopt;
  }

  std::optional<std::string> word(const Entry& e) {
    r_.at(e.line);
    if (!r_.arity(e, 1, 1)) return std::nullopt;
    return e.values[0].text;
  }

  std::optional<RateTerm> pair(const Entry& e, bool rational = false) {
    r_.at(e.line);
    if (!r_.arity(e, 2, 2)) return std::nullopt;
    auto v = rational ? r_.rational(e.values[1]) : r_.number(e.values[1]);
    if (!v) return std::nullopt;
    return RateTerm{e.values[0].text, *v};
  }

  void unknown(const Entry& e, const Block& b) {
    r_.error(e.line, e.key_col, fmt::format("unknown key '{}' in [{}]", e.key, b.name));
  }

  // Rejects a second occurrence of a scalar key within one block.
  bool once(std::set<std::string>& seen, const Entry& e) {
    if (!seen.insert(e.key).second) {
      r_.error(e.line, e.key_col, fmt::format("duplicate key '{}'", e.key));
      return false;
    }
    return true;
  }

  std::optional<Selector> selector(const Entry& e, std::size_t from);

  void solver_block(const Block& b, SimulationDeck& d);
  void material_block(const Block& b, SimulationDeck& d);
  void species_block(const Block& b, SimulationDeck& d);
  void bio_block(const Block& b, SimulationDeck& d);
  void grid_block(const Block& b, SimulationDeck& d);
  void reaction_block(const Block& b, SimulationDeck& d);
  void equilibrium_block(const Block& b, SimulationDeck& d);
  void initial_block(const Block& b, SimulationDeck& d);
  void boundary_block(const Block& b, SimulationDeck& d);
  void output_block(const Block& b, SimulationDeck& d);
  void sweep_block(const Block& b, SimulationDeck& d);

  Reader& r_;
  const ParseOptions& opts_;
};

void DeckBuilder::solver_block(const Block& b, SimulationDeck& d) {
  auto& s = d.solver;
  std::set<std::string> seen;
  for (const auto& e : b.entries) {
    if (!once(seen, e)) continue;
    auto set = [&](double& field, Dim dim) {
      if (auto v = quantity(e, dim)) field = *v;
    };
    auto set_flag = [&](bool& field) {
      if (auto v = flag(e)) field = *v;
    };
    if (e.key == "end") set(s.t_end, Dim::Time);
    else if (e.key == "temperature") set(s.temperature, Dim::Temperature);
    else if (e.key == "dt_init") set(s.dt_init, Dim::Time);
    else if (e.key == "dt_min") set(s.dt_min, Dim::Time);
    else if (e.key == "dt_max") set(s.dt_max, Dim::Time);
    else if (e.key == "picard_max_iter") {
      r_.at(e.line);
      if (r_.arity(e, 1, 1))
        if (auto v = r_.integer<int>(e.values[0])) s.max_picard_iters = *v;
    } else if (e.key == "picard_tol_pressure") set(s.picard_tol_pressure, Dim::Pressure);
    else if (e.key == "picard_tol_saturation") set(s.picard_tol_saturation, Dim::None);
    else if (e.key == "audit_tol") set(s.audit_tol, Dim::None);
    else if (e.key == "kinetics_rtol") set(s.kinetics_rtol, Dim::None);
    else if (e.key == "kinetics_atol") set(s.kinetics_atol, Dim::None);
    else if (e.key == "courant") set(s.courant, Dim::None);
    else if (e.key == "max_substeps") {
      r_.at(e.line);
      if (r_.arity(e, 1, 1))
        if (auto v = r_.integer<long>(e.values[0])) s.max_substeps = *v;
    } else if (e.key == "specific_storage") set(s.specific_storage, Dim::None);
    else if (e.key == "rho_L") set(s.phases.rho_L, Dim::None);
    else if (e.key == "rho_G") set(s.phases.rho_G, Dim::None);
    else if (e.key == "rho_B") set(s.phases.rho_B, Dim::None);
    else if (e.key == "mu_L") set(s.phases.mu_L, Dim::None);
    else if (e.key == "gravity") set(s.phases.gravity, Dim::None);
    else if (e.key == "flow") set_flag(s.flow);
    else if (e.key == "transport") set_flag(s.transport);
    else if (e.key == "chemotaxis") set_flag(s.chemotaxis);
    else if (e.key == "kinetics") set_flag(s.kinetics);
    else if (e.key == "equilibrium") set_flag(s.equilibrium);
    else unknown(e, b);
  }
}

void DeckBuilder::material_block(const Block& b, SimulationDeck& d) {
  MaterialRecord m;
  std::set<std::string> seen;
  std::optional<CosbyEstimate> cosby;
  int cosby_line = 0;
  bool have_name = false;
  for (const auto& e : b.entries) {
    if (!once(seen, e)) continue;
    auto set = [&](double& field, Dim dim) {
      if (auto v = quantity(e, dim)) field = *v;
    };
    if (e.key == "name") {
      if (auto w = word(e)) {
        m.name = *w;
        have_name = true;
      }
    } else if (e.key == "k") set(m.k, Dim::None);
    else if (e.key == "phi") set(m.phi, Dim::None);
    else if (e.key == "psi_s") set(m.psi_s, Dim::Length);
    else if (e.key == "b") set(m.b, Dim::None);
    else if (e.key == "S_Lr") set(m.S_Lr, Dim::None);
    else if (e.key == "S_Gr") set(m.S_Gr, Dim::None);
    else if (e.key == "rho_m") set(m.rho_m, Dim::None);
    else if (e.key == "vg_alpha") set(m.vg_alpha, Dim::None);
    else if (e.key == "vg_n") set(m.vg_n, Dim::None);
    else if (e.key == "model") {
      if (auto w = word(e)) {
        if (*w == "brooks_corey" || *w == "BC") m.model = RetentionModel::BrooksCorey;
        else if (*w == "van_genuchten" || *w == "VG") m.model = RetentionModel::VanGenuchten;
        else r_.error(e.line, e.values[0].col, fmt::format("unknown retention model '{}'", *w));
      }
    } else if (e.key == "cosby") {
      r_.at(e.line);
      if (!r_.arity(e, 3, 3)) continue;
      auto sa = r_.number(e.values[0]), si = r_.number(e.values[1]), cl = r_.number(e.values[2]);
      if (!sa || !si || !cl) continue;
      try {
        cosby = cosby_pedotransfer(*sa, *si, *cl);
        cosby_line = e.line;
      } catch (const Error& ex) {
        r_.error(e.line, e.value_col, ex.what());
      }
    } else {
      unknown(e, b);
    }
  }
  if (cosby) {
    // Explicit keys take precedence over the texture estimate.
    if (!seen.count("phi")) m.phi = cosby->phi;
    if (!seen.count("b")) m.b = cosby->b;
    if (!seen.count("psi_s")) m.psi_s = cosby->psi_s;
    if (!seen.count("k")) m.k = cosby->k;
    (void)cosby_line;
  } else {
    for (const char* req : {"k", "phi", "psi_s", "b"}) {
      if (!seen.count(req))
        r_.error(b.line, b.col, fmt::format("[MATERIAL] '{}' is missing '{}'", m.name, req));
    }
  }
  if (!have_name) r_.error(b.line, b.col, "[MATERIAL] needs a name");
  d.materials.push_back(m);
  lines.materials.push_back(b.line);
}

void DeckBuilder::species_block(const Block& b, SimulationDeck& d) {
  lines.species_block = b.line;
  for (const auto& e : b.entries) {
    if (e.key != "species") {
      unknown(e, b);
      continue;
    }
    r_.at(e.line);
    if (!r_.arity(e, 4, 6)) continue;
    Species sp;
    sp.name = e.values[0].text;
    auto kind = parse_species_kind(e.values[1].text);
    auto phase = parse_phase(e.values[2].text);
    auto unit = parse_concentration_unit(e.values[3].text);
    if (!kind) r_.error(e.line, e.values[1].col, fmt::format("unknown species kind '{}'", e.values[1].text));
    if (!phase) r_.error(e.line, e.values[2].col, fmt::format("unknown phase '{}'", e.values[2].text));
    if (!unit) r_.error(e.line, e.values[3].col, fmt::format("unknown unit '{}'", e.values[3].text));
    if (!kind || !phase || !unit) continue;
    sp.kind = *kind;
    sp.phase = *phase;
    sp.unit = *unit;
    if (e.values.size() > 4) {
      auto m = r_.number(e.values[4]);
      if (!m) continue;
      sp.molar_mass = *m;
    }
    if (e.values.size() > 5) {
      auto D = r_.number(e.values[5]);
      if (!D) continue;
      sp.diffusivity = *D;
    }
    if (sp.kind == SpeciesKind::BIO) sp.bio = BioProperties{};
    d.species.entries.push_back(sp);
    lines.species.push_back(e.line);
  }
}

void DeckBuilder::bio_block(const Block& b, SimulationDeck& d) {
  std::optional<std::string> name;
  for (const auto& e : b.entries)
    if (e.key == "name") name = word(e);
  if (!name) {
    r_.error(b.line, b.col, "[BIO] needs a name");
    return;
  }
  auto idx = d.species.index_of(*name);
  if (!idx) {
    r_.error(b.line, b.col, fmt::format("[BIO] names undeclared species '{}'", *name));
    return;
  }
  auto& sp = d.species[*idx];
  if (sp.kind != SpeciesKind::BIO) {
    r_.error(b.line, b.col, fmt::format("[BIO] species '{}' is not of kind BIO", *name));
    return;
  }
  if (lines.bio[*idx] != 0) {
    r_.error(b.line, b.col, fmt::format("second [BIO] block for '{}'", *name));
    return;
  }
  lines.bio[*idx] = b.line;
  BioProperties p;
  std::set<std::string> seen;
  for (const auto& e : b.entries) {
    if (e.key == "attractant" || e.key == "repellent") {
      if (auto t = pair(e)) {
        (e.key == "attractant" ? p.attractants : p.repellents).push_back({t->species, t->value});
      }
      continue;
    }
    if (!once(seen, e)) continue;
    auto set = [&](double& field, Dim dim) {
      if (auto v = quantity(e, dim)) field = *v;
    };
    auto set_opt = [&](std::optional<double>& field, Dim dim) {
      if (auto v = quantity(e, dim)) field = *v;
    };
    if (e.key == "name") continue;
    else if (e.key == "detachment") set(p.detachment, Dim::None);
    else if (e.key == "diffusion") set(p.diffusion, Dim::None);
    else if (e.key == "f_L") set(p.f_L, Dim::None);
    else if (e.key == "density") set(p.density, Dim::None);
    else if (e.key == "T_LB") set_opt(p.T_LB, Dim::Temperature);
    else if (e.key == "T_UB") set_opt(p.T_UB, Dim::Temperature);
    else if (e.key == "SL_LB") set_opt(p.SL_LB, Dim::None);
    else if (e.key == "SL_UB") set_opt(p.SL_UB, Dim::None);
    else unknown(e, b);
  }
  sp.bio = p;
}

void DeckBuilder::grid_block(const Block& b, SimulationDeck& d) {
  lines.grid = b.line;
  double area = 1.0, top = 0.0;
  std::optional<double> atmosphere;
  int atmosphere_line = 0;
  struct Layer {
    double thickness;
    std::size_t count;
    std::size_t material;
  };
  std::vector<Layer> layers;
  std::vector<Element> explicit_elements;
  std::set<std::string> seen;
  auto material_index = [&](const Token& t, int line) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < d.materials.size(); ++i)
      if (d.materials[i].name == t.text) return i;
    r_.error(line, t.col, fmt::format("[GRID] references undeclared material '{}'", t.text));
    return std::nullopt;
  };
  std::size_t total = 0;
  for (const auto& e : b.entries) {
    r_.at(e.line);
    if (e.key == "layer") {
      if (!r_.arity(e, 3, 3)) continue;
      auto th = r_.number(e.values[0]);
      auto n = r_.integer<std::size_t>(e.values[1]);
      auto m = material_index(e.values[2], e.line);
      if (!th || !n || !m) continue;
      if (*n == 0 || *th <= 0.0) {
        r_.error(e.line, e.value_col, "layer needs a positive thickness and element count");
        continue;
      }
      if (*n > kMaxElements || total + *n > kMaxElements) {
        r_.error(e.line, e.values[1].col, fmt::format("grid exceeds {} elements", kMaxElements));
        continue;
      }
      total += *n;
      layers.push_back({*th, *n, *m});
    } else if (e.key == "element") {
      if (!r_.arity(e, 5, 6)) continue;
      auto z = r_.number(e.values[0]);
      auto h = r_.number(e.values[1]);
      auto v = r_.number(e.values[2]);
      auto a = r_.number(e.values[3]);
      auto m = material_index(e.values[4], e.line);
      if (!z || !h || !v || !a || !m) continue;
      bool atm = false;
      if (e.values.size() == 6) {
        if (e.values[5].text != "atmosphere") {
          r_.error(e.line, e.values[5].col, fmt::format("unexpected '{}'", e.values[5].text));
          continue;
        }
        atm = true;
      }
      if (++total > kMaxElements) {
        r_.error(e.line, e.key_col, fmt::format("grid exceeds {} elements", kMaxElements));
        continue;
      }
      explicit_elements.push_back({*v, *a, *z, *h, *m, atm});
    } else if (!once(seen, e)) {
      continue;
    } else if (e.key == "area") {
      if (auto v = quantity(e, Dim::None)) area = *v;
    } else if (e.key == "top") {
      if (auto v = quantity(e, Dim::Length)) top = *v;
    } else if (e.key == "atmosphere") {
      if (auto v = quantity(e, Dim::Length)) {
        atmosphere = *v;
        atmosphere_line = e.line;
      }
    } else {
      unknown(e, b);
    }
  }
  if (!layers.empty() && !explicit_elements.empty()) {
    r_.error(b.line, b.col, "[GRID] mixes 'layer' and 'element' lines");
    return;
  }
  if (!explicit_elements.empty()) {
    if (atmosphere) r_.error(atmosphere_line, 1, "'atmosphere' height only applies to layered grids");
    d.grid.elements = std::move(explicit_elements);
    return;
  }
  if (atmosphere) {
    if (*atmosphere <= 0.0 || layers.empty()) {
      r_.error(atmosphere_line, 1, "atmosphere needs a positive height and at least one layer");
    } else {
      d.grid.elements.push_back(
          {area * *atmosphere, area, top + 0.5 * *atmosphere, *atmosphere, layers.front().material, true});
    }
  }
  double depth = 0.0;
  for (const auto& L : layers) {
    const double h = L.thickness / static_cast<double>(L.count);
    for (std::size_t i = 0; i < L.count; ++i) {
      const double upper = depth + static_cast<double>(i) * h;
      d.grid.elements.push_back({area * h, area, top - (upper + 0.5 * h), h, L.material, false});
    }
    depth += L.thickness;
  }
}

void DeckBuilder::reaction_block(const Block& b, SimulationDeck& d) {
  ReactionSpec r;
  std::set<std::string> seen;
  bool have_rate = false;
  for (const auto& e : b.entries) {
    auto add = [&](std::vector<RateTerm>& list) {
      if (auto t = pair(e)) list.push_back(*t);
    };
    if (e.key == "stoich") {
      if (auto t = pair(e, true)) r.stoichiometry.push_back({t->species, t->value});
    } else if (e.key == "order") add(r.norder);
    else if (e.key == "mmm") add(r.mmm);
    else if (e.key == "competition") add(r.competition);
    else if (e.key == "inhibition") add(r.inhibition);
    else if (!once(seen, e)) continue;
    else if (e.key == "name") {
      if (auto w = word(e)) r.name = *w;
    } else if (e.key == "rate") {
      if (auto v = quantity(e, Dim::None)) {
        r.rate = *v;
        have_rate = true;
      }
    } else if (e.key == "bio") {
      if (auto w = word(e)) r.bio_actor = *w;
    } else if (e.key == "inhibition_form") {
      if (auto w = word(e)) {
        if (*w == "standard") r.inhibition_form = InhibitionForm::Standard;
        else if (*w == "literal") r.inhibition_form = InhibitionForm::Literal;
        else r_.error(e.line, e.values[0].col, fmt::format("unknown inhibition form '{}'", *w));
      }
    } else {
      unknown(e, b);
    }
  }
  if (r.name.empty()) r_.error(b.line, b.col, "[REACTION] needs a name");
  if (!have_rate) r_.error(b.line, b.col, fmt::format("[REACTION] '{}' is missing 'rate'", r.name));
  d.reactions.push_back(std::move(r));
  lines.reactions.push_back(b.line);
}

void DeckBuilder::equilibrium_block(const Block& b, SimulationDeck& d) {
  EquilibriumSpec q;
  std::set<std::string> seen;
  bool have_k = false, have_solve = false;
  for (const auto& e : b.entries) {
    if (e.key == "primary") {
      if (auto t = pair(e, true)) q.primaries.push_back(*t);
      continue;
    }
    if (!once(seen, e)) continue;
    if (e.key == "name") {
      if (auto w = word(e)) q.name = *w;
    } else if (e.key == "solve") {
      r_.at(e.line);
      if (!r_.arity(e, 1, 2)) continue;
      q.solved = e.values[0].text;
      have_solve = true;
      if (e.values.size() == 2)
        if (auto v = r_.rational(e.values[1])) q.solved_exponent = *v;
    } else if (e.key == "log10K") {
      if (auto v = quantity(e, Dim::None)) {
        q.log10K = *v;
        have_k = true;
      }
    } else if (e.key == "reference_T") {
      if (auto v = quantity(e, Dim::Temperature)) q.reference_T = *v;
    } else if (e.key == "log10K_at") {
      r_.at(e.line);
      if (!r_.arity(e, 2, 3)) continue;
      auto T = r_.number(e.values[0]);
      std::size_t vi = 1;
      if (T && e.values.size() == 3) {
        T = unit_scale(Dim::Temperature, e.values[1].text, *T);
        if (!T) r_.error(e.line, e.values[1].col, fmt::format("unknown unit '{}'", e.values[1].text));
        vi = 2;
      }
      auto v = r_.number(e.values[vi]);
      if (T && v) q.second_point = VantHoffPoint{*T, *v};
    } else {
      unknown(e, b);
    }
  }
  if (q.name.empty()) r_.error(b.line, b.col, "[EQUILIBRIUM] needs a name");
  if (!have_solve) r_.error(b.line, b.col, fmt::format("[EQUILIBRIUM] '{}' is missing 'solve'", q.name));
  if (!have_k) r_.error(b.line, b.col, fmt::format("[EQUILIBRIUM] '{}' is missing 'log10K'", q.name));
  d.equilibria.push_back(std::move(q));
  lines.equilibria.push_back(b.line);
}

std::optional<Selector> DeckBuilder::selector(const Entry& e, std::size_t from) {
  Selector s;
  if (e.values.size() == from) return s;
  const auto& kw = e.values[from];
  r_.at(e.line);
  if (kw.text == "all" && e.values.size() == from + 1) return s;
  if (kw.text == "elements" || kw.text == "element") {
    if (e.values.size() != from + 2 && e.values.size() != from + 3) {
      r_.error(e.line, kw.col, "'elements' takes one or two indices");
      return std::nullopt;
    }
    auto a = r_.integer<std::size_t>(e.values[from + 1]);
    auto z = e.values.size() == from + 3 ? r_.integer<std::size_t>(e.values[from + 2]) : a;
    if (!a || !z) return std::nullopt;
    if (*z < *a) {
      r_.error(e.line, kw.col, "element range is reversed");
      return std::nullopt;
    }
    s.kind = Selector::Kind::Elements;
    s.first = *a;
    s.last = *z;
    return s;
  }
  if (kw.text == "depth") {
    if (e.values.size() != from + 3) {
      r_.error(e.line, kw.col, "'depth' takes a top and a bottom depth");
      return std::nullopt;
    }
    auto a = r_.number(e.values[from + 1]);
    auto z = r_.number(e.values[from + 2]);
    if (!a || !z) return std::nullopt;
    if (*z < *a) {
      r_.error(e.line, kw.col, "depth range is reversed");
      return std::nullopt;
    }
    s.kind = Selector::Kind::Depth;
    s.top = *a;
    s.bottom = *z;
    return s;
  }
  r_.error(e.line, kw.col, fmt::format("expected 'elements', 'depth' or 'all', got '{}'", kw.text));
  return std::nullopt;
}

void DeckBuilder::initial_block(const Block& b, SimulationDeck& d) {
  lines.initial = b.line;
  auto& in = d.initial;
  bool have_hydro = false;
  for (const auto& e : b.entries) {
    r_.at(e.line);
    if (e.key == "S_L") {
      if (e.values.empty()) {
        r_.error(e.line, e.value_col, "'S_L' needs a value");
        continue;
      }
      auto v = r_.number(e.values[0]);
      auto s = selector(e, 1);
      if (v && s) in.saturation.push_back({*v, *s});
    } else if (e.key == "species") {
      if (e.values.size() < 2) {
        r_.error(e.line, e.value_col, "'species' needs a name and a value");
        continue;
      }
      auto v = r_.number(e.values[1]);
      auto s = selector(e, 2);
      if (v && s) in.concentrations.push_back({e.values[0].text, *v, *s});
    } else if (e.key == "hydrostatic") {
      if (have_hydro) {
        r_.error(e.line, e.key_col, "duplicate key 'hydrostatic'");
        continue;
      }
      have_hydro = true;
      if (auto v = quantity(e, Dim::Length)) in.water_table_depth = *v;
    } else {
      unknown(e, b);
    }
  }
}

void DeckBuilder::boundary_block(const Block& b, SimulationDeck& d) {
  BoundarySchedule s;
  std::set<std::string> seen;
  bool have_type = false, have_rate = false, have_element = false;
  std::optional<double> file_scale;
  for (const auto& e : b.entries) {
    r_.at(e.line);
    if (e.key == "point") {
      if (!r_.arity(e, 2, 3)) continue;
      auto t = r_.number(e.values[0]);
      if (t && e.values.size() == 3) {
        t = unit_scale(Dim::Time, e.values[1].text, *t);
        if (!t) r_.error(e.line, e.values[1].col, fmt::format("unknown time unit '{}'", e.values[1].text));
      }
      auto v = r_.number(e.values.back());
      if (t && v) s.points.emplace_back(*t, *v);
      continue;
    }
    if (e.key == "conc") {
      if (auto t = pair(e)) s.carried.push_back(*t);
      continue;
    }
    if (e.key == "uptake") {
      if (!r_.arity(e, 2, 2)) continue;
      auto el = r_.integer<std::size_t>(e.values[0]);
      auto f = r_.number(e.values[1]);
      if (el && f) s.uptake.push_back({*el, *f});
      continue;
    }
    if (!once(seen, e)) continue;
    if (e.key == "type") {
      auto w = word(e);
      if (!w) continue;
      have_type = true;
      if (*w == "liquid") s.type = BoundaryType::Liquid;
      else if (*w == "species") s.type = BoundaryType::Species;
      else if (*w == "uptake") s.type = BoundaryType::Uptake;
      else if (*w == "free_drainage") s.type = BoundaryType::FreeDrainage;
      else if (*w == "head") s.type = BoundaryType::Head;
      else {
        have_type = false;
        r_.error(e.line, e.values[0].col, fmt::format("unknown boundary type '{}'", *w));
      }
    } else if (e.key == "element") {
      if (!r_.arity(e, 1, 1)) continue;
      if (auto v = r_.integer<std::size_t>(e.values[0])) {
        s.element = *v;
        have_element = true;
      }
    } else if (e.key == "species") {
      if (auto w = word(e)) s.species = *w;
    } else if (e.key == "rate") {
      if (auto v = quantity(e, Dim::None)) {
        s.rate = *v;
        have_rate = true;
      }
    } else if (e.key == "unit") {
      if (auto w = word(e)) {
        if (auto u = parse_rate_unit(*w)) s.unit = *u;
        else r_.error(e.line, e.values[0].col, fmt::format("unknown rate unit '{}'", *w));
      }
    } else if (e.key == "start") {
      if (auto v = quantity(e, Dim::Time)) s.start = *v;
    } else if (e.key == "end") {
      if (auto v = quantity(e, Dim::Time)) s.end = *v;
    } else if (e.key == "series") {
      if (!r_.arity(e, 1, 2)) continue;
      SeriesSource src;
      src.file = e.values[0].text;
      if (e.values.size() == 2) {
        auto c = r_.integer<std::size_t>(e.values[1]);
        if (!c) continue;
        if (*c == 0) {
          r_.error(e.line, e.values[1].col, "series column 0 is the time column");
          continue;
        }
        src.column = *c;
      }
      s.source = src;
    } else if (e.key == "time_unit") {
      if (auto w = word(e)) {
        if (auto sc = time_unit_seconds(*w)) file_scale = *sc;
        else r_.error(e.line, e.values[0].col, fmt::format("unknown time unit '{}'", *w));
      }
    } else if (e.key == "series_scale") {
      if (auto v = quantity(e, Dim::None)) file_scale = *v;
    } else if (e.key == "pressure_head") {
      if (auto v = quantity(e, Dim::Length)) s.pressure_head = *v;
    } else if (e.key == "face") {
      if (auto w = word(e)) {
        if (*w == "top") s.face = Face::Top;
        else if (*w == "bottom") s.face = Face::Bottom;
        else r_.error(e.line, e.values[0].col, fmt::format("unknown face '{}'", *w));
      }
    } else {
      unknown(e, b);
    }
  }
  if (!have_type) r_.error(b.line, b.col, "[BOUNDARY] needs a type");
  if (file_scale) {
    if (s.source) s.source->time_scale = *file_scale;
    else r_.warning(b.line, b.col, "time unit given without a series file");
  }
  const bool rated = s.type == BoundaryType::Liquid || s.type == BoundaryType::Species ||
                     s.type == BoundaryType::Uptake;
  if (rated && !have_rate && !s.source && s.points.empty())
    r_.error(b.line, b.col, "[BOUNDARY] needs a rate, a series file or series points");
  if ((s.type == BoundaryType::Liquid || s.type == BoundaryType::Species) && !have_element)
    r_.error(b.line, b.col, "[BOUNDARY] needs an element");
  if (s.source && !s.points.empty())
    r_.error(b.line, b.col, "[BOUNDARY] has both a series file and inline points");
  if (!s.points.empty()) {
    for (const auto& [t, v] : s.points) {
      s.series.time.push_back(t);
      s.series.value.push_back(v);
    }
  } else if (s.source && opts_.base_dir) {
    try {
      s.series = load_series(*opts_.base_dir / s.source->file, s.source->column, s.source->time_scale);
    } catch (const Error& ex) {
      r_.error(b.line, b.col, ex.what());
    }
  }
  d.boundaries.push_back(std::move(s));
  lines.boundaries.push_back(b.line);
}

void DeckBuilder::output_block(const Block& b, SimulationDeck& d) {
  lines.output = b.line;
  auto& o = d.outputs;
  std::set<std::string> seen;
  for (const auto& e : b.entries) {
    r_.at(e.line);
    if (e.key == "probe") {
      if (!r_.arity(e, 2, 2)) continue;
      if (auto el = r_.integer<std::size_t>(e.values[1])) o.probes.push_back({e.values[0].text, *el});
      continue;
    }
    if (!once(seen, e)) continue;
    if (e.key == "interval") {
      if (auto v = quantity(e, Dim::Time)) o.interval = *v;
    } else if (e.key == "times") {
      if (e.values.empty()) {
        r_.error(e.line, e.value_col, "'times' needs at least one value");
        continue;
      }
      double scale = 1.0;
      std::size_t n = e.values.size();
      if (auto sc = time_unit_seconds(e.values.back().text)) {
        scale = *sc;
        --n;
      }
      for (std::size_t i = 0; i < n; ++i)
        if (auto v = r_.number(e.values[i])) o.times.push_back(*v * scale);
    } else if (e.key == "every_step") {
      if (auto v = flag(e)) o.every_step = *v;
    } else if (e.key == "dir") {
      if (auto w = word(e)) o.dir = *w;
    } else {
      unknown(e, b);
    }
  }
}

void DeckBuilder::sweep_block(const Block& b, SimulationDeck& d) {
  lines.sweep = b.line;
  SweepSpec w;
  std::set<std::string> seen;
  for (const auto& e : b.entries) {
    r_.at(e.line);
    if (e.key == "target") {
      if (auto t = word(e)) w.targets.push_back(*t);
      continue;
    }
    if (e.key == "quantity") {
      if (auto t = word(e)) w.quantities.push_back(*t);
      continue;
    }
    if (!once(seen, e)) continue;
    if (e.key == "mode") {
      if (auto t = word(e)) {
        if (*t == "gaussian") w.mode = SweepMode::Gaussian;
        else if (*t == "grid") w.mode = SweepMode::Grid;
        else r_.error(e.line, e.values[0].col, fmt::format("unknown sweep mode '{}'", *t));
      }
    } else if (e.key == "replicas") {
      if (r_.arity(e, 1, 1))
        if (auto v = r_.integer<int>(e.values[0])) w.replicas = *v;
    } else if (e.key == "workers") {
      if (r_.arity(e, 1, 1))
        if (auto v = r_.integer<int>(e.values[0])) w.workers = *v;
    } else if (e.key == "seed") {
      if (r_.arity(e, 1, 1))
        if (auto v = r_.integer<std::uint64_t>(e.values[0])) w.seed = *v;
    } else if (e.key == "rel_std") {
      if (auto v = quantity(e, Dim::None)) w.rel_std = *v;
    } else if (e.key == "values") {
      if (e.values.empty()) {
        r_.error(e.line, e.value_col, "'values' needs at least one value");
        continue;
      }
      std::size_t n = e.values.size();
      const auto& last = e.values.back().text;
      if (n > 1 && (last == "C" || last == "K" || time_unit_seconds(last))) {
        w.value_unit = last;
        --n;
      }
      for (std::size_t i = 0; i < n; ++i)
        if (auto v = r_.number(e.values[i])) w.values.push_back(*v);
    } else if (e.key == "value_unit") {
      if (auto t = word(e)) w.value_unit = *t;
    } else {
      unknown(e, b);
    }
  }
  d.sweep = w;
}

std::optional<SimulationDeck> DeckBuilder::build(std::vector<Block>& blocks) {
  static const std::set<std::string> singletons{"SOLVER", "GRID", "SPECIES", "INITIAL", "OUTPUT", "SWEEP"};
  static const std::set<std::string> known{"SOLVER",  "MATERIAL",    "SPECIES", "BIO",
                                           "GRID",    "REACTION",    "EQUILIBRIUM", "INITIAL",
                                           "BOUNDARY", "OUTPUT",     "SWEEP"};
  std::map<std::string, int> first_seen;
  for (const auto& b : blocks) {
    if (!known.count(b.name)) {
      r_.error(b.line, b.col, fmt::format("unknown block [{}]", b.name));
      continue;
    }
    if (singletons.count(b.name)) {
      auto [it, fresh] = first_seen.emplace(b.name, b.line);
      if (!fresh)
        r_.error(b.line, b.col, fmt::format("[{}] already given at line {}", b.name, it->second));
    }
  }
  SimulationDeck d;
  // Fixed processing order makes the result independent of block order.
  auto each = [&](const char* name, auto fn) {
    bool done = false;
    for (const auto& b : blocks) {
      if (b.name != name) continue;
      if (singletons.count(name) && done) continue;
      done = true;
      (this->*fn)(b, d);
    }
  };
  each("SOLVER", &DeckBuilder::solver_block);
  each("MATERIAL", &DeckBuilder::material_block);
  each("SPECIES", &DeckBuilder::species_block);
  lines.bio.assign(d.species.size(), 0);
  each("BIO", &DeckBuilder::bio_block);
  each("GRID", &DeckBuilder::grid_block);
  each("REACTION", &DeckBuilder::reaction_block);
  each("EQUILIBRIUM", &DeckBuilder::equilibrium_block);
  each("INITIAL", &DeckBuilder::initial_block);
  each("BOUNDARY", &DeckBuilder::boundary_block);
  each("OUTPUT", &DeckBuilder::output_block);
  each("SWEEP", &DeckBuilder::sweep_block);
  if (!first_seen.count("GRID")) r_.error(1, 1, "deck has no [GRID] block");
  return d;
}

std::vector<Block> lex(std::string_view text, Reader& r) {
  std::vector<Block> blocks;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r\v\f");
    if (first == std::string_view::npos) {
      if (nl == text.size()) break;
      continue;
    }
    const int col0 = static_cast<int>(first) + 1;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      const auto rest = close == std::string_view::npos ? std::string_view{} : line.substr(close + 1);
      if (close == std::string_view::npos || rest.find_first_not_of(" \t\r\v\f") != std::string_view::npos) {
        r.error(lineno, col0, "malformed block header; expected [NAME]");
        blocks.push_back({"", lineno, col0, {}});  // swallow its lines
        continue;
      }
      std::string name(line.substr(first + 1, close - first - 1));
      if (name.empty() || name.find_first_of(" \t") != std::string::npos) {
        r.error(lineno, col0, "malformed block header; expected [NAME]");
        name.clear();
      }
      blocks.push_back({name, lineno, col0, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      r.error(lineno, col0, "expected 'key = value'");
      continue;
    }
    auto keys = tokenize(line.substr(0, eq), 1);
    if (keys.size() != 1) {
      r.error(lineno, col0, keys.empty() ? "missing key before '='" : "key must be a single word");
      continue;
    }
    if (blocks.empty()) {
      r.error(lineno, col0, "content before the first block header");
      continue;
    }
    Entry e;
    e.key = keys[0].text;
    e.line = lineno;
    e.key_col = keys[0].col;
    e.value_col = static_cast<int>(eq) + 2;
    e.values = tokenize(line.substr(eq + 1), static_cast<int>(eq) + 2);
    if (!e.values.empty() && e.values[0].text.find('=') != std::string::npos) {
      r.error(lineno, e.values[0].col, "unexpected '='");
      continue;
    }
    blocks.back().entries.push_back(std::move(e));
  }
  // Unnamed blocks were reported at their header; drop them.
  std::erase_if(blocks, [](const Block& b) { return b.name.empty(); });
  return blocks;
}

}  // namespace

bool Selector::contains(const GridSpec& grid, std::size_t e) const {
  switch (kind) {
    case Kind::All: return !grid[e].atmosphere;
    case Kind::Elements: return e >= first && e <= last;
    case Kind::Depth: {
      if (grid[e].atmosphere) return false;
      const double z = grid.depth(e);
      return z >= top && z <= bottom;
    }
  }
  return false;
}

double BoundarySchedule::factor(double t) const {
  if (t < start || t >= end) return 0.0;
  return series.empty() ? 1.0 : series.at(t);
}

double BoundarySchedule::factor_integral(double t0, double t1) const {
  const double a = std::max(t0, start);
  const double b = std::min(t1, end);
  if (b <= a) return 0.0;
  return series.empty() ? (b - a) : series.integral(a, b);
}

std::vector<double> OutputSpec::report_times(double t_end) const {
  std::vector<double> out;
  for (double t : times)
    if (t > 0.0 && t < t_end) out.push_back(t);
  if (interval && *interval > 0.0) {
    const auto n = static_cast<long long>(std::floor(t_end / *interval));
    for (long long i = 1; i <= n; ++i) {
      const double t = static_cast<double>(i) * *interval;
      if (t < t_end) out.push_back(t);
    }
  }
  out.push_back(t_end);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string_view to_string(RateUnit unit) {
  switch (unit) {
    case RateUnit::M3PerS: return "m3/s";
    case RateUnit::MPerS: return "m/s";
    case RateUnit::MmPerDay: return "mm/day";
    case RateUnit::KgPerS: return "kg/s";
    case RateUnit::MolPerS: return "mol/s";
    case RateUnit::MgPerS: return "mg/s";
  }
  return "?";
}

std::optional<RateUnit> parse_rate_unit(std::string_view t) {
  if (t == "m3/s") return RateUnit::M3PerS;
  if (t == "m/s") return RateUnit::MPerS;
  if (t == "mm/day" || t == "mm/d") return RateUnit::MmPerDay;
  if (t == "kg/s") return RateUnit::KgPerS;
  if (t == "mol/s") return RateUnit::MolPerS;
  if (t == "mg/s") return RateUnit::MgPerS;
  return std::nullopt;
}

std::string_view to_string(BoundaryType type) {
  switch (type) {
    case BoundaryType::Liquid: return "liquid";
    case BoundaryType::Species: return "species";
    case BoundaryType::Uptake: return "uptake";
    case BoundaryType::FreeDrainage: return "free_drainage";
    case BoundaryType::Head: return "head";
  }
  return "?";
}

std::string Diagnostic::format() const {
  const char* sev = severity == Severity::Error ? "error" : severity == Severity::Warning ? "warning" : "note";
  return fmt::format("{}:{}:{}: {}: {}", file, line, column, sev, message);
}

std::size_t ParseResult::error_count() const {
  return static_cast<std::size_t>(std::count_if(diagnostics.begin(), diagnostics.end(),
                                                [](const Diagnostic& d) { return d.severity == Severity::Error; }));
}

ParseResult parse_deck(std::string_view text, const ParseOptions& options) {
  ParseResult result;
  try {
    Reader reader(options.file_name, result.diagnostics);
    auto blocks = lex(text, reader);
    DeckBuilder builder(reader, options);
    auto deck = builder.build(blocks);
    if (result.error_count() == 0 && deck) {
      detail::validate_into(*deck, &builder.lines, options.file_name, result.diagnostics);
    }
    if (result.error_count() == 0) result.deck = std::move(deck);
  } catch (const std::exception& ex) {
    // Parsing is total: anything unexpected becomes a diagnostic.
    result.diagnostics.push_back({options.file_name, 0, 0, Severity::Error,
                                  fmt::format("internal parser error: {}", ex.what())});
    result.deck.reset();
  }
  return result;
}

SimulationDeck load_deck(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open deck {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  ParseOptions opts;
  opts.file_name = path.string();
  opts.base_dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  auto res = parse_deck(buf.str(), opts);
  if (!res.ok()) {
    std::string msg;
    for (const auto& d : res.diagnostics) {
      if (d.severity != Severity::Error) continue;
      if (!msg.empty()) msg += '\n';
      msg += d.format();
    }
    throw DeckError(msg);
  }
  return std::move(*res.deck);
}

void resolve_series(SimulationDeck& deck, const std::filesystem::path& base_dir) {
  for (auto& b : deck.boundaries) {
    if (b.source) b.series = load_series(base_dir / b.source->file, b.source->column, b.source->time_scale);
  }
}

}  // namespace retort
