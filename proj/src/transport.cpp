#include "retort/transport.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "retort/error.hpp"

namespace retort {

namespace {

std::size_t first_soil(const GridSpec& g) { return (g.size() > 0 && g[0].atmosphere) ? 1 : 0; }

double harmonic(double a, double b) { return (a > 0.0 && b > 0.0) ? 2.0 * a * b / (a + b) : 0.0; }

// Converts a species boundary rate to native amount per second.
double species_rate_native(const BoundarySchedule& b, double value) {
  return b.unit == RateUnit::MgPerS ? value * 1e-6 : value;
}

// One transported quantity set on a fixed flow field.
struct Problem {
  std::vector<std::size_t> species;      // registry indices moved together
  std::vector<double> face_q;            // m^3/s, positive downward, per interface
  std::vector<std::vector<double>> face_g;  // per species: diffusive conductance m^3/s
  std::vector<double> src_q;             // liquid inflow m^3/s per element
  std::vector<std::vector<double>> src_load;  // per species: amount/s carried in
  double bottom_q = 0.0;                 // m^3/s leaving through the bottom (neg: entering)
  double top_q = 0.0;                    // m^3/s entering through the top
  std::vector<double> W0, W1;            // liquid volume before/after the flow step
};

class Integrator {
 public:
  Integrator(GridState& s, const GridSpec& g, const Problem& p, double dt, const TransportSettings& ts,
             TransportReport& rep)
      : s_(s), g_(g), p_(p), dt_(dt), ts_(ts), rep_(rep), lo_(first_soil(g)), n_(g.size()) {}

  void run() {
    if (p_.species.empty()) return;
    // Forward-Euler stability bound per element.
    double h_max = dt_;
    for (std::size_t e = lo_; e < n_; ++e) {
      double out = 0.0;
      if (e > lo_) out += std::max(-p_.face_q[e - 1], 0.0);
      if (e + 1 < n_) out += std::max(p_.face_q[e], 0.0);
      if (e == n_ - 1) out += std::max(p_.bottom_q, 0.0);
      if (e == lo_) out += std::max(-p_.top_q, 0.0);
      double gmax = 0.0;
      for (std::size_t k = 0; k < p_.species.size(); ++k) {
        double gsum = 0.0;
        if (e > lo_) gsum += p_.face_g[k][e - 1];
        if (e + 1 < n_) gsum += p_.face_g[k][e];
        gmax = std::max(gmax, gsum);
      }
      const double rate = out + gmax;
      const double W = std::min(p_.W0[e], p_.W1[e]);
      if (rate > 0.0) {
        if (!(W > 0.0)) throw CflUnderflow(fmt::format("element {} holds no liquid but has flow", e));
        h_max = std::min(h_max, ts_.courant * W / rate);
      }
    }
    const double nsub = std::ceil(dt_ / h_max);
    if (!(nsub <= static_cast<double>(ts_.max_substeps)))
      throw CflUnderflow(fmt::format("transport needs {:.3g} substeps (cap {})", nsub, ts_.max_substeps));
    const long N = std::max(1L, static_cast<long>(nsub));
    rep_.substeps += N;
    const double h = dt_ / static_cast<double>(N);
    const std::size_t ns = s_.n_species;
    std::vector<double> a(n_ * p_.species.size()), a1(a.size()), a2(a.size());
    std::vector<double> f0(a.size()), f1(a.size()), f2(a.size());
    for (std::size_t e = 0; e < n_; ++e)
      for (std::size_t k = 0; k < p_.species.size(); ++k) a[e * p_.species.size() + k] = s_.amount_at(e, p_.species[k]);
    Flux flux0(n_, p_.species.size()), flux1(n_, p_.species.size()), flux2(n_, p_.species.size());
    // Three-stage SSP Runge-Kutta: each stage is a convex blend of forward-Euler
    // steps, so positivity holds under the same step bound.
    for (long step = 0; step < N; ++step) {
      // Stage clock as a fraction of the flow step; the last stage ends at 1.
      const double tau0 = static_cast<double>(step) / static_cast<double>(N);
      const double tau1 = static_cast<double>(step + 1) / static_cast<double>(N);
      rhs(a, tau0, f0, flux0);
      for (std::size_t i = 0; i < a.size(); ++i) a1[i] = a[i] + h * f0[i];
      rhs(a1, tau1, f1, flux1);
      for (std::size_t i = 0; i < a.size(); ++i) a2[i] = 0.75 * a[i] + 0.25 * (a1[i] + h * f1[i]);
      rhs(a2, 0.5 * (tau0 + tau1), f2, flux2);
      for (std::size_t i = 0; i < a.size(); ++i)
        a[i] = std::max(0.0, a[i] / 3.0 + 2.0 / 3.0 * (a2[i] + h * f2[i]));
      auto blend = [&](const std::vector<double>& x0, const std::vector<double>& x1, const std::vector<double>& x2,
                       std::size_t i) { return h * ((x0[i] + x1[i]) / 6.0 + 2.0 / 3.0 * x2[i]); };
      for (std::size_t i = 0; i < a.size(); ++i) {
        net_[i] += blend(flux0.net, flux1.net, flux2.net, i);
        in_[i] += blend(flux0.in, flux1.in, flux2.in, i);
        out_[i] += blend(flux0.out, flux1.out, flux2.out, i);
      }
    }
    for (std::size_t e = 0; e < n_; ++e) {
      for (std::size_t k = 0; k < p_.species.size(); ++k) {
        const std::size_t i = e * p_.species.size() + k;
        const std::size_t sp = p_.species[k];
        s_.amount_at(e, sp) = a[i];
        rep_.net[e * ns + sp] += net_[i];
        rep_.in[e * ns + sp] += in_[i];
        rep_.out[e * ns + sp] += out_[i];
      }
    }
  }

 private:
  struct Flux {
    Flux(std::size_t n, std::size_t m) : net(n * m), in(n * m), out(n * m) {}
    std::vector<double> net, in, out;
  };

  void rhs(const std::vector<double>& a, double tau, std::vector<double>& f, Flux& fl) {
    const std::size_t m = p_.species.size();
    std::fill(f.begin(), f.end(), 0.0);
    std::fill(fl.net.begin(), fl.net.end(), 0.0);
    std::fill(fl.in.begin(), fl.in.end(), 0.0);
    std::fill(fl.out.begin(), fl.out.end(), 0.0);
    auto conc = [&](std::size_t e, std::size_t k) {
      const double W = p_.W0[e] + tau * (p_.W1[e] - p_.W0[e]);
      return W > 0.0 ? a[e * m + k] / W : 0.0;
    };
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t i = lo_; i + 1 < n_; ++i) {
        const double q = p_.face_q[i];
        const double ci = conc(i, k), cj = conc(i + 1, k);
        const double F = (q >= 0.0 ? q * ci : q * cj) + p_.face_g[k][i] * (ci - cj);
        f[i * m + k] -= F;
        f[(i + 1) * m + k] += F;
        fl.net[i * m + k] -= F;
        fl.net[(i + 1) * m + k] += F;
      }
      const std::size_t last = n_ - 1;
      if (p_.bottom_q != 0.0) {
        const double F = p_.bottom_q > 0.0 ? p_.bottom_q * conc(last, k) : 0.0;
        f[last * m + k] -= F;
        fl.out[last * m + k] += F;
      }
      if (p_.top_q < 0.0) {
        const double F = -p_.top_q * conc(lo_, k);
        f[lo_ * m + k] -= F;
        fl.out[lo_ * m + k] += F;
      }
      for (std::size_t e = lo_; e < n_; ++e) {
        const double L = p_.src_load[k][e];
        f[e * m + k] += L;
        fl.in[e * m + k] += L;
      }
    }
  }

  GridState& s_;
  const GridSpec& g_;
  const Problem& p_;
  double dt_;
  const TransportSettings& ts_;
  TransportReport& rep_;
  std::size_t lo_, n_;
  std::vector<double> net_ = std::vector<double>(n_ * p_.species.size(), 0.0);
  std::vector<double> in_ = std::vector<double>(n_ * p_.species.size(), 0.0);
  std::vector<double> out_ = std::vector<double>(n_ * p_.species.size(), 0.0);
};

Problem base_problem(const GridSpec& g, const FlowStep& flow) {
  Problem p;
  const std::size_t n = g.size();
  p.face_q.assign(n, 0.0);
  p.src_q.assign(n, 0.0);
  p.W0 = flow.W_before;
  p.W1 = flow.W_after;
  if (p.W0.size() != n) p.W0.assign(n, 0.0);
  if (p.W1.size() != n) p.W1 = p.W0;
  if (flow.dt > 0.0) {
    for (std::size_t i = 0; i < n && i < flow.face_volume.size(); ++i) p.face_q[i] = flow.face_volume[i] / flow.dt;
    p.bottom_q = flow.bottom_out / flow.dt;
    p.top_q = flow.top_in / flow.dt;
  }
  return p;
}

// Diffusive conductance Gamma * D_eff / d across each interface.
std::vector<double> conductance(const GridState& s, const GridSpec& g, std::span<const MaterialRecord> mats, double D) {
  std::vector<double> out(g.size(), 0.0);
  if (D <= 0.0) return out;
  for (std::size_t i = first_soil(g); i + 1 < g.size(); ++i) {
    const double a = mats[g[i].material].phi * s.S_L[i] * D;
    const double b = mats[g[i + 1].material].phi * s.S_L[i + 1] * D;
    out[i] = g.interface_area(i) * harmonic(a, b) / g.connection_distance(i);
  }
  return out;
}

}  // namespace

void TransportReport::reset(std::size_t n, std::size_t ns) {
  net.assign(n * ns, 0.0);
  in.assign(n * ns, 0.0);
  out.assign(n * ns, 0.0);
  substeps = 0;
}

double chemotactic_velocity(std::size_t i, std::size_t j, const Species& bio, const GridState& s, const GridSpec& g,
                            std::span<const MaterialRecord> mats, const SpeciesRegistry& reg) {
  if (!bio.bio) return 0.0;
  const double d = 0.5 * (g[i].height + g[j].height);
  auto gradient = [&](const std::string& name) {
    const auto k = reg.index_of(name);
    if (!k) return 0.0;
    const double xi = mass_fraction(s, g, mats, reg[*k], i, *k);
    const double xj = mass_fraction(s, g, mats, reg[*k], j, *k);
    return (xj - xi) / d;
  };
  double v = 0.0;
  for (const auto& c : bio.bio->attractants) v += c.coefficient * gradient(c.species);
  for (const auto& c : bio.bio->repellents) v -= c.coefficient * gradient(c.species);
  return v;
}

void step_solute_transport(GridState& s, const GridSpec& g, std::span<const MaterialRecord> mats,
                           const SpeciesRegistry& reg, std::span<const BoundarySchedule> bcs, const FlowStep& flow,
                           const TransportSettings& ts, TransportReport& rep) {
  if (flow.dt <= 0.0) return;
  Problem p = base_problem(g, flow);
  for (std::size_t k = 0; k < reg.size(); ++k) {
    const auto& sp = reg[k];
    if (sp.kind != SpeciesKind::PRI || sp.phase != Phase::L) continue;
    p.species.push_back(k);
    p.face_g.push_back(conductance(s, g, mats, sp.diffusivity));
    std::vector<double> load(g.size(), 0.0);
    for (const auto& [bi, vol] : flow.sourced_by_boundary) {
      const auto& b = bcs[bi];
      if (!(vol > 0.0)) continue;
      for (const auto& c : b.carried) {
        if (c.species != sp.name) continue;
        // Concentration (declared unit) times liquid volume gives the amount.
        load[b.element] += amount_from_concentration(c.value, vol, sp.unit) / flow.dt;
      }
    }
    p.src_load.push_back(std::move(load));
  }
  Integrator(s, g, p, flow.dt, ts, rep).run();
}

void step_bio_transport(GridState& s, const GridSpec& g, std::span<const MaterialRecord> mats,
                        const SpeciesRegistry& reg, const FlowStep& flow, const TransportSettings& ts,
                        TransportReport& rep) {
  if (flow.dt <= 0.0) return;
  // Each species has its own velocity field, so each is integrated separately.
  for (std::size_t k = 0; k < reg.size(); ++k) {
    const auto& sp = reg[k];
    if (sp.kind != SpeciesKind::BIO || sp.phase != Phase::L || !sp.bio) continue;
    const auto& bio = *sp.bio;
    const bool chemo = ts.chemotaxis && (!bio.attractants.empty() || !bio.repellents.empty());
    if (bio.detachment == 0.0 && bio.diffusion == 0.0 && !chemo) continue;
    Problem p = base_problem(g, flow);
    for (auto& q : p.face_q) q *= bio.detachment;
    p.bottom_q *= bio.detachment;
    p.top_q *= bio.detachment;
    if (chemo) {
      for (std::size_t i = first_soil(g); i + 1 < g.size(); ++i) {
        const double v = chemotactic_velocity(i, i + 1, sp, s, g, mats, reg);
        const double a = mats[g[i].material].phi * s.S_L[i];
        const double b = mats[g[i + 1].material].phi * s.S_L[i + 1];
        p.face_q[i] += g.interface_area(i) * harmonic(a, b) * v;
      }
    }
    p.species = {k};
    p.face_g = {conductance(s, g, mats, bio.diffusion)};
    p.src_load = {std::vector<double>(g.size(), 0.0)};
    Integrator(s, g, p, flow.dt, ts, rep).run();
  }
}

void apply_species_sources(GridState& s, const SpeciesRegistry& reg, std::span<const BoundarySchedule> bcs, double t0,
                           double dt, TransportReport& rep) {
  for (const auto& b : bcs) {
    if (b.type != BoundaryType::Species) continue;
    const auto k = reg.index_of(b.species);
    if (!k) continue;
    const double amount = species_rate_native(b, b.rate) * b.factor_integral(t0, t0 + dt);
    if (amount >= 0.0) {
      s.amount_at(b.element, *k) += amount;
      rep.in[b.element * s.n_species + *k] += amount;
    } else {
      const double taken = std::min(-amount, s.amount_at(b.element, *k));
      s.amount_at(b.element, *k) -= taken;
      rep.out[b.element * s.n_species + *k] += taken;
    }
  }
}

}  // namespace retort
