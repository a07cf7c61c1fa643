#include "retort/kinetics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "retort/error.hpp"

namespace retort {

ResponseParams ResponseParams::from(const BioProperties& bio, const MaterialRecord& mat) {
  ResponseParams p;
  p.T_LB = bio.T_LB;
  p.T_UB = bio.T_UB;
  p.SL_LB = bio.SL_LB;
  p.SL_UB = bio.SL_UB;
  p.S_Lr = mat.S_Lr;
  p.S_Gr = mat.S_Gr;
  return p;
}

double response_biophase(const GateSaturations& s, const ResponseParams& p) {
  if (s.S_B <= 0.0) return 1.0;
  double f = 1.0 - (s.S_B - p.S_Lr) / (1.0 - p.S_Lr - p.S_Gr);
  const double held_liquid = s.S_B_liquid;
  const double held_solid = s.S_B - s.S_B_liquid;
  if (held_liquid > 0.0) f = std::min(f, s.S_L > 0.0 ? 1.0 - held_liquid / s.S_L : 0.0);
  if (held_solid > 0.0) f = std::min(f, s.S_G > 0.0 ? 1.0 - held_solid / s.S_G : 0.0);
  return f;
}

double response_temperature(double T, const ResponseParams& p) {
  // e^T/(e^T_LB + e^T) written without overflowing exponentials.
  double f = 1.0;
  if (p.T_LB) f *= 1.0 / (1.0 + std::exp(*p.T_LB - T));
  if (p.T_UB) f *= 1.0 / (1.0 + std::exp(T - *p.T_UB));
  return f;
}

double response_liquid(double S_L, const ResponseParams& p) {
  double f = 1.0;
  if (p.SL_LB) f *= S_L / (*p.SL_LB + S_L);
  if (p.SL_UB) f *= *p.SL_UB / (*p.SL_UB + S_L);
  return f;
}

double response_liquid_max(const ResponseParams& p) {
  if (p.SL_LB && p.SL_UB) return response_liquid(std::sqrt(*p.SL_LB * *p.SL_UB), p);
  return 1.0;
}

double microbial_gate(const GateSaturations& s, double T, const ResponseParams& p) {
  const double f = std::min({response_biophase(s, p), response_temperature(T, p),
                             response_liquid(std::max(s.S_L, 0.0), p) / response_liquid_max(p)});
  return std::clamp(f, 0.0, 1.0);
}

CompiledReaction CompiledReaction::compile(const ReactionSpec& spec, const SpeciesRegistry& reg) {
  auto resolve = [&](const std::string& name) {
    const auto k = reg.index_of(name);
    if (!k) throw DeckError(fmt::format("reaction '{}' references undeclared species '{}'", spec.name, name));
    return *k;
  };
  auto terms = [&](const std::vector<RateTerm>& in) {
    std::vector<Term> out;
    for (const auto& t : in) out.push_back({resolve(t.species), t.value});
    return out;
  };
  CompiledReaction r;
  for (const auto& s : spec.stoichiometry) r.stoichiometry.push_back({resolve(s.species), s.coefficient});
  r.norder = terms(spec.norder);
  r.mmm = terms(spec.mmm);
  r.competition = terms(spec.competition);
  r.inhibition = terms(spec.inhibition);
  r.rate = spec.rate;
  if (spec.bio_actor) r.actor = resolve(*spec.bio_actor);
  r.inhibition_form = spec.inhibition_form;
  return r;
}

double reaction_velocity(const CompiledReaction& r, std::span<const double> X, double f_B) {
  double R = r.rate * f_B;
  if (R == 0.0) return 0.0;
  for (const auto& t : r.norder) R *= std::pow(std::max(X[t.species], 0.0), t.value);
  double competition = 1.0;
  for (const auto& t : r.competition) competition += std::max(X[t.species], 0.0) / t.value;
  for (const auto& t : r.mmm) {
    const double x = std::max(X[t.species], 0.0);
    const double K = t.value * competition;
    R *= (x + K) > 0.0 ? x / (x + K) : 0.0;
  }
  for (const auto& t : r.inhibition) {
    const double x = std::max(X[t.species], 0.0);
    const double num = r.inhibition_form == InhibitionForm::Standard ? t.value : x;
    R *= (x + t.value) > 0.0 ? num / (x + t.value) : 1.0;
  }
  return R;
}

double reaction_velocity(const ReactionSpec& spec, const SpeciesRegistry& reg, std::span<const double> X,
                         double f_B) {
  return reaction_velocity(CompiledReaction::compile(spec, reg), X, f_B);
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

OdeStats integrate_dopri5(std::vector<double>& y, double dt, const KineticsSettings& ks, const OdeRhs& f) {
  OdeStats stats;
  const std::size_t n = y.size();
  if (n == 0 || dt <= 0.0) return stats;
  std::array<std::vector<double>, 7> k;
  for (auto& v : k) v.assign(n, 0.0);
  std::vector<double> tmp(n), y5(n);
  double t = 0.0, h = dt;
  const double h_min = dt * 1e-14;
  f(t, y, k[0]);
  bool fsal_valid = true;
  while (t < dt) {
    h = std::min(h, dt - t);
    if (!fsal_valid) {
      f(t, y, k[0]);
      fsal_valid = true;
    }
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k[0][i];
    f(t + c2 * h, tmp, k[1]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k[0][i] + a32 * k[1][i]);
    f(t + c3 * h, tmp, k[2]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]);
    f(t + c4 * h, tmp, k[3]);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] + a54 * k[3][i]);
    f(t + c5 * h, tmp, k[4]);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] + a64 * k[3][i] + a65 * k[4][i]);
    const double t_next = (h == dt - t) ? dt : t + h;
    f(t_next, tmp, k[5]);
    for (std::size_t i = 0; i < n; ++i)
      y5[i] = y[i] + h * (b1 * k[0][i] + b3 * k[2][i] + b4 * k[3][i] + b5 * k[4][i] + b6 * k[5][i]);
    f(t_next, y5, k[6]);
    double err = 0.0;
    bool negative = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double e =
          h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] + e6 * k[5][i] + e7 * k[6][i]);
      const double sc = ks.atol + ks.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(e) / sc);
      if (y5[i] < -ks.negative_tol || !std::isfinite(y5[i])) negative = true;
    }
    // A rate that does not vanish with its reactant keeps overshooting zero;
    // past a small fraction of dt the overshoot is clipped instead.
    const bool force_clip = negative && h <= 1e-9 * dt;
    if (!force_clip && (negative || !(err <= 1.0))) {
      ++stats.rejected;
      h = negative || !std::isfinite(err) ? 0.5 * h : h * std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (h < h_min)
        throw StiffnessFailure(fmt::format("kinetics step collapsed to {:.3g} s at t = {:.6g} s", h, t));
      continue;
    }
    ++stats.accepted;
    bool clipped = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (y5[i] < 0.0) {
        y5[i] = 0.0;
        clipped = true;
      }
    }
    y.swap(y5);
    t = t_next;
    if (clipped) {
      fsal_valid = false;
    } else {
      k[0].swap(k[6]);
    }
    const double grow = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
    h *= grow;
  }
  return stats;
}

KineticsReport step_kinetics(GridState& s, const GridSpec& g, std::span<const MaterialRecord> mats,
                             const SpeciesRegistry& reg, std::span<const CompiledReaction> reactions, double dt,
                             const KineticsSettings& ks) {
  const std::size_t ns = reg.size();
  KineticsReport rep;
  rep.delta_amount.assign(g.size() * ns, 0.0);
  for (std::size_t k = 0; k < ns; ++k) {
    if (reg[k].occupies_biophase()) {
      rep.biophase.push_back(k);
      rep.f_L.push_back(reg[k].bio ? reg[k].bio->f_L : 0.0);
    }
  }
  const std::size_t nb = rep.biophase.size();
  rep.dS_B.assign(g.size() * nb, 0.0);
  if (reactions.empty() || dt <= 0.0) return rep;

  for (std::size_t e = 0; e < g.size(); ++e) {
    if (g[e].atmosphere) continue;
    const auto& mat = mats[g[e].material];
    const double W = liquid_volume(s, g, mats, e);
    if (!(W > 0.0)) continue;
    const double pore = mat.phi * g[e].volume;
    std::vector<double> X0(ns);
    for (std::size_t k = 0; k < ns; ++k) X0[k] = concentration(s, g, mats, reg[k], e, k);
    // Biophase saturation per unit concentration change of each biophase species.
    std::vector<double> sat_per_conc(nb), S_Bj0(nb);
    for (std::size_t j = 0; j < nb; ++j) {
      const auto& sp = reg[rep.biophase[j]];
      const double density = sp.bio ? sp.bio->density : s.phases.rho_B;
      sat_per_conc[j] = amount_to_kg(amount_from_concentration(1.0, W, sp.unit), sp) / (density * pore);
      S_Bj0[j] = amount_to_kg(s.amount_at(e, rep.biophase[j]), sp) / (density * pore);
    }
    std::vector<ResponseParams> params(reactions.size());
    for (std::size_t r = 0; r < reactions.size(); ++r) {
      if (reactions[r].actor && reg[*reactions[r].actor].bio)
        params[r] = ResponseParams::from(*reg[*reactions[r].actor].bio, mat);
    }
    const double T = s.temperature;
    const GateSaturations sat0{s.S_L[e], s.S_G[e], s.S_B[e], 0.0};
    auto rhs = [&](double, std::span<const double> X, std::span<double> dX) {
      std::fill(dX.begin(), dX.end(), 0.0);
      GateSaturations sat = sat0;
      for (std::size_t j = 0; j < nb; ++j) {
        const double dS = (X[rep.biophase[j]] - X0[rep.biophase[j]]) * sat_per_conc[j];
        sat.S_B += dS;
        sat.S_L -= rep.f_L[j] * dS;
        sat.S_G -= (1.0 - rep.f_L[j]) * dS;
        sat.S_B_liquid += rep.f_L[j] * std::max(S_Bj0[j] + dS, 0.0);
      }
      sat.S_L = std::max(sat.S_L, 0.0);
      sat.S_G = std::max(sat.S_G, 0.0);
      for (std::size_t r = 0; r < reactions.size(); ++r) {
        const auto& rx = reactions[r];
        const double f_B = rx.actor ? microbial_gate(sat, T, params[r]) : 1.0;
        const double R = reaction_velocity(rx, X, f_B);
        if (R == 0.0) continue;
        for (const auto& t : rx.stoichiometry) dX[t.species] += t.value * R;
      }
    };
    std::vector<double> X = X0;
    const auto stats = integrate_dopri5(X, dt, ks, rhs);
    rep.steps += stats.accepted;
    for (std::size_t k = 0; k < ns; ++k) {
      if (X[k] == X0[k]) continue;
      double& a = s.amount_at(e, k);
      const double before = a;
      a = reg[k].unit == ConcentrationUnit::Atm ? X[k] : amount_from_concentration(X[k], W, reg[k].unit);
      rep.delta_amount[e * ns + k] = a - before;
    }
    for (std::size_t j = 0; j < nb; ++j)
      rep.dS_B[e * nb + j] = (X[rep.biophase[j]] - X0[rep.biophase[j]]) * sat_per_conc[j];
  }
  return rep;
}

}  // namespace retort
