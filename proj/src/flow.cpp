#include "retort/flow.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "retort/error.hpp"
#include "retort/hydraulics.hpp"
#include "retort/log.hpp"

namespace retort {

namespace {

// Smallest pore space left to liquid when biomass fills an element.
constexpr double kMinOpenPore = 1e-9;

double open_pore(double S_B, const MaterialRecord& mat) {
  return std::max(1.0 - S_B, mat.S_Lr + kMinOpenPore);
}

// Pressure at which the element becomes liquid-full (S_L = 1 - S_B).
double entry_pressure(double S_B, const MaterialRecord& mat, const PhaseProperties& ph) {
  return ph.rho_L * ph.gravity * retention_suction(open_pore(S_B, mat), mat);
}

double permeability(std::size_t e, const GridState& s, const GridSpec& g,
                    std::span<const MaterialRecord> mats) {
  return clogged_permeability(mats[g[e].material].k, std::clamp(s.S_B[e], 0.0, 1.0));
}

double rel_perm(std::size_t e, const GridState& s, const GridSpec& g,
                std::span<const MaterialRecord> mats) {
  return relative_permeability(s.S_L[e], s.S_B[e], mats[g[e].material]);
}

// Distance-weighted harmonic mean of two permeabilities.
double interface_k(double ka, double ha, double kb, double hb) {
  if (ka <= 0.0 || kb <= 0.0) return 0.0;
  return (ha + hb) / (ha / ka + hb / kb);
}

std::size_t first_soil(const GridSpec& g) {
  return (g.size() > 0 && g[0].atmosphere) ? 1 : 0;
}

// Tridiagonal solve (Thomas); a is the sub-, c the super-diagonal.
bool thomas(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c,
            std::vector<double>& d, std::size_t lo, std::size_t hi, std::vector<double>& x) {
  for (std::size_t i = lo + 1; i < hi; ++i) {
    if (b[i - 1] == 0.0) return false;
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  if (b[hi - 1] == 0.0) return false;
  x[hi - 1] = d[hi - 1] / b[hi - 1];
  for (std::size_t i = hi - 1; i-- > lo;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
  for (std::size_t i = lo; i < hi; ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

struct Link {
  double T = 0.0;       // Gamma k'_f / (mu d), m^3/(Pa s) before k_r
  double lambda = 0.0;  // interface k_r, lagged per iteration
  double dz = 0.0;      // z_i - z_j
};

}  // namespace

FlowSettings FlowSettings::from(const SolverSettings& s) {
  FlowSettings f;
  f.dt_init = s.dt_init;
  f.dt_min = s.dt_min;
  f.dt_max = s.dt_max;
  f.max_picard_iters = s.max_picard_iters;
  f.picard_tol_pressure = s.picard_tol_pressure;
  f.picard_tol_saturation = s.picard_tol_saturation;
  f.specific_storage = s.specific_storage;
  return f;
}

double liquid_pressure(double S_L, double elastic, double S_B, const MaterialRecord& mat,
                       const PhaseProperties& ph, double Ss) {
  const double S_max = open_pore(S_B, mat);
  const double rg = ph.rho_L * ph.gravity;
  if (S_L >= S_max || elastic > 0.0) {
    return entry_pressure(S_B, mat, ph) + elastic / (S_max * Ss);
  }
  if (!(S_L > mat.S_Lr)) return rg * -1.0e6;
  return rg * retention_suction(S_L, mat);
}

void set_liquid_pressure(GridState& s, std::size_t e, double P, const MaterialRecord& mat,
                         double Ss) {
  const auto& ph = s.phases;
  const double S_max = open_pore(s.S_B[e], mat);
  const double Pe = entry_pressure(s.S_B[e], mat, ph);
  if (P >= Pe) {
    s.S_L[e] = S_max;
    s.elastic[e] = (P - Pe) * S_max * Ss;
  } else {
    s.S_L[e] = std::min(retention_saturation(P / (ph.rho_L * ph.gravity), mat), S_max);
    s.elastic[e] = 0.0;
  }
  s.S_G[e] = std::max(0.0, 1.0 - s.S_L[e] - s.S_B[e]);
  s.P_L[e] = P;
}

void set_liquid_volume(GridState& s, const GridSpec& g, std::span<const MaterialRecord> mats,
                       std::size_t e, double W, double Ss) {
  const auto& mat = mats[g[e].material];
  const double pv = mat.phi * g[e].volume;
  const double S_max = open_pore(s.S_B[e], mat);
  const double frac = W / pv;
  if (frac >= S_max) {
    s.S_L[e] = S_max;
    s.elastic[e] = frac - S_max;
  } else {
    s.S_L[e] = std::max(frac, 0.0);
    s.elastic[e] = 0.0;
  }
  s.S_G[e] = std::max(0.0, 1.0 - s.S_L[e] - s.S_B[e]);
  s.P_L[e] = liquid_pressure(s.S_L[e], s.elastic[e], s.S_B[e], mat, s.phases, Ss);
}

std::vector<double> liquid_volumes(const GridState& s, const GridSpec& g,
                                   std::span<const MaterialRecord> mats) {
  std::vector<double> W(g.size(), 0.0);
  for (std::size_t e = 0; e < g.size(); ++e)
    if (!g[e].atmosphere) W[e] = liquid_volume(s, g, mats, e);
  return W;
}

double darcy_flux(std::size_t i, std::size_t j, const GridState& s, const GridSpec& g,
                  std::span<const MaterialRecord> mats) {
  const auto& ph = s.phases;
  const double rg = ph.rho_L * ph.gravity;
  const double d = 0.5 * (g[i].height + g[j].height);
  const double kf =
      interface_k(permeability(i, s, g, mats), g[i].height, permeability(j, s, g, mats), g[j].height) *
      interface_k(rel_perm(i, s, g, mats), g[i].height, rel_perm(j, s, g, mats), g[j].height);
  const double phi_i = s.P_L[i] + rg * g[i].z;
  const double phi_j = s.P_L[j] + rg * g[j].z;
  return kf / ph.mu_L * (phi_i - phi_j) / d;
}

double liquid_rate_m3s(const BoundarySchedule& b, double value, const Element& el,
                       const PhaseProperties& ph) {
  switch (b.unit) {
    case RateUnit::M3PerS: return value;
    case RateUnit::MPerS: return value * el.area;
    case RateUnit::MmPerDay: return value * 1e-3 / 86400.0 * el.area;
    case RateUnit::KgPerS: return value / ph.rho_L;
    default: return 0.0;
  }
}

FlowSolver::FlowSolver(const GridSpec& grid, std::span<const MaterialRecord> materials,
                       std::span<const BoundarySchedule> boundaries, FlowSettings settings)
    : grid_(grid),
      materials_(materials),
      boundaries_(boundaries),
      settings_(settings),
      dt_(settings.dt_init) {}

FlowStep FlowSolver::step(GridState& state, double dt_limit) {
  if (!(dt_limit > 0.0)) throw SolverError("flow step requested with non-positive dt");
  double dt = std::min(dt_, dt_limit);
  bool clipped_by_limit = dt_ >= dt_limit;
  for (;;) {
    GridState trial = state;
    FlowStep out;
    if (try_step(state, dt, trial, out)) {
      state = std::move(trial);
      if (!clipped_by_limit || dt < dt_) {
        if (++clean_steps_ >= 3) {
          dt_ = std::min(dt_ * 1.2, settings_.dt_max);
          clean_steps_ = 0;
        }
      }
      return out;
    }
    clean_steps_ = 0;
    dt *= 0.5;
    dt_ = dt;
    clipped_by_limit = false;
    if (dt < settings_.dt_min) {
      throw ConvergenceFailure(fmt::format(
          "liquid flow did not converge at t={:.6g} s with dt above dt_min={:.3g} s", state.time,
          settings_.dt_min));
    }
    log::debug("flow: halving dt to {:.4g} s at t={:.6g} s", dt, state.time);
  }
}

bool FlowSolver::try_step(const GridState& s0, double dt, GridState& s, FlowStep& out) const {
  const auto& g = grid_;
  const auto& ph = s0.phases;
  const double rg = ph.rho_L * ph.gravity;
  const double Ss = settings_.specific_storage;
  const std::size_t n = g.size();
  const std::size_t lo = first_soil(g);
  const double t0 = s0.time;

  out = FlowStep{};
  out.dt = dt;
  out.face_volume.assign(n, 0.0);
  out.source.assign(n, 0.0);
  out.uptake.assign(n, 0.0);
  out.uptake_clipped.assign(n, 0.0);
  out.W_before = liquid_volumes(s0, g, materials_);

  // Explicit boundary terms, as step-averaged rates (m^3/s).
  std::vector<double> src(n, 0.0), sink(n, 0.0);
  const BoundarySchedule* drainage = nullptr;
  const BoundarySchedule* head_bottom = nullptr;
  const BoundarySchedule* head_top = nullptr;
  for (std::size_t bi = 0; bi < boundaries_.size(); ++bi) {
    const auto& b = boundaries_[bi];
    switch (b.type) {
      case BoundaryType::Liquid: {
        const double q =
            liquid_rate_m3s(b, b.rate * b.factor_integral(t0, t0 + dt) / dt, g[b.element], ph);
        src[b.element] += q;
        out.sourced_by_boundary.emplace_back(bi, q * dt);
        break;
      }
      case BoundaryType::Uptake: {
        const double avg = b.rate * b.factor_integral(t0, t0 + dt) / dt;
        for (const auto& u : b.uptake) {
          const double q = liquid_rate_m3s(b, avg, g[u.element], ph) * u.fraction;
          sink[u.element] += q;
        }
        break;
      }
      case BoundaryType::FreeDrainage: drainage = &b; break;
      case BoundaryType::Head: (b.face == Face::Bottom ? head_bottom : head_top) = &b; break;
      case BoundaryType::Species: break;
    }
  }
  // Uptake may not draw an element below halfway to residual saturation.
  for (std::size_t e = lo; e < n; ++e) {
    if (sink[e] <= 0.0) continue;
    const auto& mat = materials_[g[e].material];
    const double pv = mat.phi * g[e].volume;
    const double avail = 0.5 * std::max(0.0, out.W_before[e] + dt * src[e] - pv * mat.S_Lr);
    if (sink[e] * dt > avail) {
      out.uptake_clipped[e] = sink[e] * dt - avail;
      sink[e] = avail / dt;
    }
  }

  // Interface transmissibilities (fixed over the step).
  std::vector<Link> faces(n);
  for (std::size_t i = lo; i + 1 < n; ++i) {
    const double kf = interface_k(permeability(i, s0, g, materials_), g[i].height,
                                  permeability(i + 1, s0, g, materials_), g[i + 1].height);
    faces[i].T = g.interface_area(i) * kf / (ph.mu_L * g.connection_distance(i));
    faces[i].dz = g[i].z - g[i + 1].z;
  }
  const std::size_t last = n - 1;
  auto head_face = [&](const BoundarySchedule& b, std::size_t e, double sign) {
    // sign = -1 for the bottom face (below e), +1 for the top face.
    Link f;
    const double half = 0.5 * g[e].height;
    f.T = g[e].area * permeability(e, s0, g, materials_) / (ph.mu_L * half);
    f.dz = -sign * half;  // z_e - z_face
    (void)b;
    return f;
  };
  Link bottom_face, top_face;
  if (head_bottom) bottom_face = head_face(*head_bottom, last, -1.0);
  if (head_top) top_face = head_face(*head_top, lo, 1.0);

  std::vector<double> P(n), Pm(n), W(n), C(n), Pprev(n), Wprev(n);
  for (std::size_t e = lo; e < n; ++e) P[e] = s0.P_L[e];
  std::vector<double> a(n), b(n), c(n), d(n);
  double q_drain = 0.0, q_bottom = 0.0, q_top = 0.0;

  bool converged = false;
  int it = 0;
  for (; it < settings_.max_picard_iters; ++it) {
    Pm = P;
    for (std::size_t e = lo; e < n; ++e) {
      const auto& mat = materials_[g[e].material];
      const double pv = mat.phi * g[e].volume;
      set_liquid_pressure(s, e, Pm[e], mat, Ss);
      W[e] = pv * (s.S_L[e] + s.elastic[e]);
      const double S_max = open_pore(s.S_B[e], mat);
      const double Pe = entry_pressure(s.S_B[e], mat, ph);
      double dSdP = Pm[e] >= Pe ? S_max * Ss : retention_slope(Pm[e] / rg, mat) / rg;
      // Keep the matrix diagonal positive in the saturated limit of VG/BC.
      dSdP = std::max(dSdP, S_max * Ss);
      C[e] = pv * dSdP;
      // Chord slope once an iterate crosses the entry pressure, which stops the
      // tangent from flipping between the saturated and unsaturated branches.
      if (it > 0 && (Pm[e] - Pe) * (Pprev[e] - Pe) < 0.0 && std::abs(Pm[e] - Pprev[e]) > 1e-12 * rg)
        C[e] = std::max(C[e], (W[e] - Wprev[e]) / (Pm[e] - Pprev[e]));
    }
    Pprev = Pm;
    Wprev = W;
    for (std::size_t i = lo; i + 1 < n; ++i) {
      faces[i].lambda = interface_k(rel_perm(i, s, g, materials_), g[i].height, rel_perm(i + 1, s, g, materials_),
                                    g[i + 1].height);
    }
    if (drainage) {
      q_drain = g[last].area * permeability(last, s, g, materials_) * rel_perm(last, s, g, materials_) * rg /
                ph.mu_L;
    }
    auto face_lambda = [&](const BoundarySchedule& bs, Link& f, std::size_t e) {
      const double P_face = rg * bs.pressure_head;
      const double phi_e = Pm[e] + rg * f.dz;  // relative to face elevation
      if (phi_e >= P_face) {
        f.lambda = rel_perm(e, s, g, materials_);
      } else {
        const auto& mat = materials_[g[e].material];
        const double S_face = retention_saturation(bs.pressure_head, mat);
        f.lambda = relative_permeability(S_face, s.S_B[e], mat);
      }
    };
    if (head_bottom) face_lambda(*head_bottom, bottom_face, last);
    if (head_top) face_lambda(*head_top, top_face, lo);

    for (std::size_t i = lo; i < n; ++i) {
      a[i] = c[i] = 0.0;
      b[i] = C[i];
      d[i] = C[i] * Pm[i] - W[i] + out.W_before[i] + dt * (src[i] - sink[i]);
      if (i > lo) {
        const auto& f = faces[i - 1];
        const double tl = dt * f.T * f.lambda;
        a[i] = -tl;
        b[i] += tl;
        d[i] += tl * rg * f.dz;
      }
      if (i + 1 < n) {
        const auto& f = faces[i];
        const double tl = dt * f.T * f.lambda;
        c[i] = -tl;
        b[i] += tl;
        d[i] -= tl * rg * f.dz;
      }
    }
    if (drainage) d[last] -= dt * q_drain;
    if (head_bottom) {
      const double tl = dt * bottom_face.T * bottom_face.lambda;
      b[last] += tl;
      d[last] += tl * (rg * head_bottom->pressure_head - rg * bottom_face.dz);
    }
    if (head_top) {
      const double tl = dt * top_face.T * top_face.lambda;
      b[lo] += tl;
      d[lo] += tl * (rg * head_top->pressure_head - rg * top_face.dz);
    }
    if (!thomas(a, b, c, d, lo, n, P)) return false;

    double worst = 0.0;
    for (std::size_t e = lo; e < n; ++e) {
      const auto& mat = materials_[g[e].material];
      const double dP = std::abs(P[e] - Pm[e]);
      // Saturation change implied by the pressure update.
      const double dS = C[e] * dP / (mat.phi * g[e].volume);
      worst = std::max(worst, std::min(dP / settings_.picard_tol_pressure,
                                       dS / settings_.picard_tol_saturation));
    }
    if (worst <= 1.0) {
      converged = true;
      ++it;
      break;
    }
  }
  out.iterations = it;
  if (!converged) return false;

  // Conservative update from the fluxes of the final iterate.
  std::vector<double> net(n, 0.0);
  for (std::size_t i = lo; i + 1 < n; ++i) {
    const auto& f = faces[i];
    const double q = f.T * f.lambda * (P[i] - P[i + 1] + rg * f.dz);
    out.face_volume[i] = q * dt;
    net[i] -= q;
    net[i + 1] += q;
  }
  if (drainage) {
    q_bottom = q_drain;
    net[last] -= q_drain;
  }
  if (head_bottom) {
    q_bottom = bottom_face.T * bottom_face.lambda *
               (P[last] + rg * bottom_face.dz - rg * head_bottom->pressure_head);
    net[last] -= q_bottom;
  }
  if (head_top) {
    q_top = top_face.T * top_face.lambda * (rg * head_top->pressure_head - P[lo] - rg * top_face.dz);
    net[lo] += q_top;
  }
  out.bottom_out = q_bottom * dt;
  out.top_in = q_top * dt;
  out.W_after.assign(n, 0.0);
  for (std::size_t e = lo; e < n; ++e) {
    const auto& mat = materials_[g[e].material];
    const double pv = mat.phi * g[e].volume;
    out.source[e] = src[e] * dt;
    out.uptake[e] = sink[e] * dt;
    const double Wn = out.W_before[e] + dt * (net[e] + src[e] - sink[e]);
    if (!(Wn > pv * mat.S_Lr) || !std::isfinite(Wn)) return false;
    out.W_after[e] = Wn;
  }
  for (std::size_t e = lo; e < n; ++e) set_liquid_volume(s, g, materials_, e, out.W_after[e], Ss);
  s.time = t0 + dt;
  return true;
}

ExchangeReport apply_bio_exchange(GridState& s, const GridSpec& g, std::span<const MaterialRecord> mats,
                                  std::span<const double> dS_B, std::span<const double> f_L, double Ss) {
  const std::size_t n = g.size();
  const std::size_t nb = f_L.size();
  ExchangeReport rep;
  rep.water_immobilized.assign(n, 0.0);
  rep.water_clipped.assign(n, 0.0);
  if (nb == 0) return rep;
  for (std::size_t e = 0; e < n; ++e) {
    if (g[e].atmosphere) continue;
    double dSB = 0.0, dW = 0.0;
    for (std::size_t j = 0; j < nb; ++j) {
      dSB += dS_B[e * nb + j];
      dW += f_L[j] * dS_B[e * nb + j];
    }
    if (dSB == 0.0 && dW == 0.0) continue;
    const auto& mat = mats[g[e].material];
    const double pv = mat.phi * g[e].volume;
    double W = pv * (s.S_L[e] + s.elastic[e]);
    double take = dW * pv;
    if (take > W) {
      rep.water_clipped[e] = take - W;
      rep.clipped = true;
      log::warn("exchange clipped in element {}: {:.3g} m3 of water requested beyond the {:.3g} m3 held", e,
                take - W, W);
      take = W;
    }
    W -= take;
    rep.water_immobilized[e] = take;
    s.S_B[e] = std::clamp(s.S_B[e] + dSB, 0.0, 1.0);
    const double gas = 1.0 - s.S_B[e] - W / pv;
    if (gas < -1e-9) {
      rep.clipped = true;
      log::debug("exchange in element {} fills the gas phase; {:.3g} of pore held elastically", e, -gas);
    }
    set_liquid_volume(s, g, mats, e, W, Ss);
  }
  return rep;
}

}  // namespace retort
