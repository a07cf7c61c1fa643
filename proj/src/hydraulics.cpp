#include "retort/hydraulics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "retort/error.hpp"
#include "retort/log.hpp"

namespace retort {

namespace {

// Intrinsic-permeability conversion for the pedotransfer output (20 C water).
constexpr double kWaterViscosity = 1.0e-3;  // Pa s
constexpr double kWaterDensity = 1000.0;    // kg/m^3
constexpr double kGravity = 9.81;           // m/s^2
constexpr double kInchPerHourToMetrePerSecond = 0.0254 / 3600.0;

// Suction floor; keeps P_L finite for bone-dry cells.
constexpr double kMinSuction = -1.0e6;

double clamp_unit(double x, const char* what) {
  if (x < 0.0 || x > 1.0) {
    log::debug("{} {} clamped to [0,1]", what, x);
  }
  return std::clamp(x, 0.0, 1.0);
}

double vg_m(const MaterialRecord& mat) { return 1.0 - 1.0 / mat.vg_n; }

}  // namespace

double effective_saturation(double S_L, const MaterialRecord& mat) {
  return clamp_unit((S_L - mat.S_Lr) / (1.0 - mat.S_Lr), "S_e");
}

double retention_suction(double S_L, const MaterialRecord& mat) {
  if (!(S_L > mat.S_Lr)) {
    throw DomainError("retention_suction: S_L=" + std::to_string(S_L) +
                      " is not above residual saturation " + std::to_string(mat.S_Lr));
  }
  const double se = effective_saturation(S_L, mat);
  double psi = 0.0;
  if (mat.model == RetentionModel::BrooksCorey) {
    psi = mat.psi_s * std::pow(se, -mat.b);
  } else {
    const double m = vg_m(mat);
    psi = -std::pow(std::pow(se, -1.0 / m) - 1.0, 1.0 / mat.vg_n) / mat.vg_alpha;
  }
  return std::max(psi, kMinSuction);
}

double retention_saturation(double psi, const MaterialRecord& mat) {
  double se = 1.0;
  if (mat.model == RetentionModel::BrooksCorey) {
    if (psi < mat.psi_s) se = std::pow(psi / mat.psi_s, -1.0 / mat.b);
  } else if (psi < 0.0) {
    const double m = vg_m(mat);
    se = std::pow(1.0 + std::pow(-mat.vg_alpha * psi, mat.vg_n), -m);
  }
  return mat.S_Lr + (1.0 - mat.S_Lr) * se;
}

double retention_slope(double psi, const MaterialRecord& mat) {
  if (mat.model == RetentionModel::BrooksCorey) {
    if (psi >= mat.psi_s) return 0.0;
    const double ratio = psi / mat.psi_s;
    return (1.0 - mat.S_Lr) * (-1.0 / mat.b) * std::pow(ratio, -1.0 / mat.b - 1.0) / mat.psi_s;
  }
  if (psi >= 0.0) return 0.0;
  const double n = mat.vg_n;
  const double m = vg_m(mat);
  const double ap = -mat.vg_alpha * psi;
  // d/dpsi [1 + (a|psi|)^n]^-m
  return (1.0 - mat.S_Lr) * m * n * mat.vg_alpha * std::pow(ap, n - 1.0) *
         std::pow(1.0 + std::pow(ap, n), -m - 1.0);
}

double relative_permeability(double S_L, double S_B, const MaterialRecord& mat) {
  const double s = std::min(S_L, 1.0 - std::clamp(S_B, 0.0, 1.0));
  const double se = effective_saturation(s, mat);
  if (mat.model == RetentionModel::BrooksCorey) {
    return std::pow(se, 2.0 * mat.b + 3.0);
  }
  const double m = vg_m(mat);
  const double inner = 1.0 - std::pow(1.0 - std::pow(se, 1.0 / m), m);
  return std::sqrt(se) * inner * inner;
}

double clogged_permeability(double k, double S_B) {
  const double open = 1.0 - S_B;
  return k * open * open;
}

CosbyEstimate cosby_pedotransfer(double sand, double silt, double clay) {
  if (sand < 0.0 || silt < 0.0 || clay < 0.0) {
    throw InputError("cosby_pedotransfer: texture fractions must be nonnegative");
  }
  const double total = sand + silt + clay;
  if (!(total >= 99.0 && total <= 101.0)) {
    throw InputError("cosby_pedotransfer: sand+silt+clay=" + std::to_string(total) +
                     " is outside [99, 101]");
  }
  CosbyEstimate out{};
  out.phi = 0.489 - 0.00126 * sand;
  out.b = 2.91 + 0.159 * clay;
  // Regression gives suction in cm of water.
  out.psi_s = -std::pow(10.0, 1.88 - 0.0131 * sand) / 100.0;
  const double ks_inch_per_hour = std::pow(10.0, -0.884 + 0.0153 * sand);
  const double ks = ks_inch_per_hour * kInchPerHourToMetrePerSecond;
  out.k = ks * kWaterViscosity / (kWaterDensity * kGravity);
  return out;
}

}  // namespace retort
