#include <doctest.h>

#include <cmath>
#include <random>

#include "retort/error.hpp"
#include "retort/hydraulics.hpp"

using namespace retort;

namespace {

MaterialRecord sand() {
  MaterialRecord m;
  m.k = 2.24e-12;
  m.phi = 0.46;
  m.psi_s = -5.02e-2;
  m.b = 3.705;
  return m;
}

MaterialRecord vg_loam() {
  MaterialRecord m;
  m.model = RetentionModel::VanGenuchten;
  m.vg_alpha = 3.6;
  m.vg_n = 1.56;
  m.S_Lr = 0.1;
  return m;
}

}  // namespace

TEST_CASE("Brooks-Corey suction") {
  auto m = sand();
  CHECK(retention_suction(1.0, m) == doctest::Approx(m.psi_s));
  // -5.02e-2 * 2^3.705
  CHECK(retention_suction(0.5, m) == doctest::Approx(-0.65459).epsilon(1e-4));
  CHECK_THROWS_AS(retention_suction(0.0, m), DomainError);
  m.S_Lr = 0.2;
  CHECK_THROWS_AS(retention_suction(0.2, m), DomainError);
}

TEST_CASE("van Genuchten suction endpoint and inverse") {
  auto m = vg_loam();
  CHECK(retention_suction(1.0, m) == 0.0);
  for (double s : {0.2, 0.45, 0.8, 0.99}) {
    const double psi = retention_suction(s, m);
    CHECK(retention_saturation(psi, m) == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("relative permeability") {
  auto m = sand();
  CHECK(relative_permeability(1.0, 0.0, m) == 1.0);
  CHECK(relative_permeability(0.0, 0.0, m) == 0.0);
  CHECK(relative_permeability(0.5, 0.0, m) == doctest::Approx(7.35e-4).epsilon(2e-3));
  CHECK(relative_permeability(1.0, 0.0, vg_loam()) == doctest::Approx(1.0));
  // Biomass caps the mobile liquid.
  CHECK(relative_permeability(0.9, 0.5, m) == doctest::Approx(std::pow(0.5, 2 * 3.705 + 3)));
}

TEST_CASE("clogged permeability") {
  CHECK(clogged_permeability(1.0, 0.0) == 1.0);
  CHECK(clogged_permeability(1.0, 0.5) == 0.25);
  CHECK(clogged_permeability(2.24e-12, 0.9) == doctest::Approx(2.24e-14));
}

TEST_CASE("retention monotone on random materials") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    MaterialRecord m;
    const bool vg = trial % 2;
    m.S_Lr = 0.3 * U(rng);
    if (vg) {
      m.model = RetentionModel::VanGenuchten;
      m.vg_alpha = 0.1 + 10 * U(rng);
      m.vg_n = 1.05 + 3 * U(rng);
    } else {
      m.psi_s = -(0.01 + U(rng));
      m.b = 1 + 10 * U(rng);
    }
    double prev_psi = -INFINITY, prev_kr = -1.0;
    for (int i = 1; i <= 100; ++i) {
      const double s = i == 100 ? 1.0 : m.S_Lr + (1.0 - m.S_Lr) * i / 100.0;
      const double psi = retention_suction(s, m);
      const double kr = relative_permeability(s, 0.0, m);
      CHECK(psi >= prev_psi);
      CHECK(kr >= prev_kr);
      prev_psi = psi;
      prev_kr = kr;
    }
    CHECK(prev_kr == doctest::Approx(1.0));
  }
}

TEST_CASE("Cosby pedotransfer texture rows") {
  struct Row {
    double sand, silt, clay, phi, b, psi, k;
  };
  // Tabulated soil-survey estimates for the four silt-loam layers.
  const Row rows[] = {{16, 60, 24, 0.469, 6.73, -0.47, 1.66e-13},
                      {9, 66, 25, 0.478, 6.88, -0.58, 1.29e-13},
                      {12, 73, 15, 0.474, 5.29, -0.53, 1.44e-13},
                      {12, 68, 20, 0.474, 6.09, -0.53, 1.44e-13}};
  for (const auto& r : rows) {
    const auto c = cosby_pedotransfer(r.sand, r.silt, r.clay);
    CHECK(std::abs(c.phi / r.phi - 1) < 0.05);
    CHECK(std::abs(c.b / r.b - 1) < 0.05);
    CHECK(std::abs(c.psi_s / r.psi - 1) < 0.05);
    CHECK(std::abs(c.k / r.k - 1) < 0.10);
  }
  const auto s = cosby_pedotransfer(90, 5, 5);
  CHECK(s.b == doctest::Approx(3.705));
  CHECK(s.psi_s == doctest::Approx(-5.02e-2).epsilon(0.05));
  CHECK(s.k == doctest::Approx(2.24e-12).epsilon(0.10));
  CHECK_THROWS_AS(cosby_pedotransfer(50, 30, 10), InputError);
  CHECK_THROWS_AS(cosby_pedotransfer(-1, 60, 41), InputError);
}
