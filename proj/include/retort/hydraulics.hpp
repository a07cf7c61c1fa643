#pragma once

#include <string>

namespace retort {

enum class RetentionModel { BrooksCorey, VanGenuchten };

/// Hydraulic and mineral properties of one soil layer.
///
/// Suctions are pressure heads in metres and negative (psi_s < 0). van Genuchten
/// parameters are only read when `model == VanGenuchten`; they are never derived
/// from (psi_s, b).
struct MaterialRecord {
  std::string name;
  double k = 1e-12;        // absolute permeability, m^2
  double phi = 0.4;        // porosity
  double psi_s = -0.1;     // air-entry suction, m
  double b = 4.0;          // pore-size distribution index
  double S_Lr = 0.0;       // residual liquid saturation
  double S_Gr = 0.0;       // residual gas saturation
  double rho_m = 2650.0;   // mineral density, kg/m^3
  RetentionModel model = RetentionModel::BrooksCorey;
  double vg_alpha = 0.0;   // 1/m
  double vg_n = 0.0;

  bool operator==(const MaterialRecord&) const = default;
};

/// Effective saturation (S_L - S_Lr)/(1 - S_Lr) clamped to [0, 1].
double effective_saturation(double S_L, const MaterialRecord& mat);

/// Matric suction psi (m, <= 0) at liquid saturation S_L. Throws DomainError
/// when S_L <= S_Lr.
double retention_suction(double S_L, const MaterialRecord& mat);

/// Inverse of retention_suction: liquid saturation at suction psi (m).
/// Returns 1 at and above the entry suction.
double retention_saturation(double psi, const MaterialRecord& mat);

/// d S_L / d psi (1/m); zero above the entry suction.
double retention_slope(double psi, const MaterialRecord& mat);

/// Liquid relative permeability. S_e is taken on the mobile liquid saturation
/// over the whole pore space; S_L is capped at the space left by biomass
/// (1 - S_B). Brooks-Corey uses the Burdine form S_e^(2b+3), van Genuchten the
/// Mualem form.
double relative_permeability(double S_L, double S_B, const MaterialRecord& mat);

/// Bioclogged permeability k (1 - S_B)^2.
double clogged_permeability(double k, double S_B);

struct CosbyEstimate {
  double phi;    // porosity
  double b;      // pore-size distribution index
  double psi_s;  // air-entry suction, m (negative)
  double k;      // intrinsic permeability, m^2
};

/// Univariate Cosby et al. (1984) regressions on sand/clay percentages.
/// Throws InputError unless the fractions are nonnegative and sum to [99, 101].
CosbyEstimate cosby_pedotransfer(double sand, double silt, double clay);

}  // namespace retort
