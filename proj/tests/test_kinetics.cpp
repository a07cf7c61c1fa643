#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "retort/error.hpp"
#include "retort/flow.hpp"
#include "retort/kinetics.hpp"

using namespace retort;

namespace {

Species solute(const std::string& name) {
  Species s;
  s.name = name;
  s.molar_mass = 0.1;
  return s;
}

Species biomass(const std::string& name, Phase phase, double f_L) {
  Species s;
  s.name = name;
  s.kind = SpeciesKind::BIO;
  s.phase = phase;
  s.unit = ConcentrationUnit::MgPerLitre;
  s.bio = BioProperties{};
  s.bio->f_L = f_L;
  s.bio->density = 1025.0;
  return s;
}

GridSpec box() {
  GridSpec g;
  g.elements.push_back({1.0, 1.0, -0.5, 1.0, 0, false});
  return g;
}

GridState filled(std::size_t ns, double S_L) {
  GridState s(1, ns);
  s.S_L[0] = S_L;
  s.S_G[0] = 1.0 - S_L;
  return s;
}

}  // namespace

TEST_CASE("reaction velocity terms") {
  CompiledReaction r;
  r.rate = 3.0;
  std::vector<double> X{2.0, 0.0, 5.0};
  SUBCASE("half saturation") {
    r.mmm = {{0, 2.0}};
    CHECK(reaction_velocity(r, X, 1.0) == doctest::Approx(1.5));
  }
  SUBCASE("absent inhibitor leaves the rate alone") {
    r.inhibition = {{1, 0.7}};
    CHECK(reaction_velocity(r, X, 1.0) == 3.0);
    r.inhibition_form = InhibitionForm::Literal;
    CHECK(reaction_velocity(r, X, 1.0) == 0.0);
  }
  SUBCASE("orders and gate multiply") {
    r.norder = {{0, 2.0}, {2, 0.5}};
    CHECK(reaction_velocity(r, X, 0.25) == doctest::Approx(3.0 * 0.25 * 4.0 * std::sqrt(5.0)));
  }
  SUBCASE("monotone in substrate, competitor and inhibitor") {
    r.mmm = {{0, 1.0}};
    r.competition = {{1, 0.5}};
    r.inhibition = {{2, 2.0}};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> a{u(rng), u(rng), u(rng)};
      const double R = reaction_velocity(r, a, 1.0);
      for (std::size_t k = 0; k < 3; ++k) {
        auto b = a;
        b[k] += 0.5;
        const double Rb = reaction_velocity(r, b, 1.0);
        if (k == 0) CHECK(Rb >= R);
        else CHECK(Rb <= R);
      }
    }
  }
}

TEST_CASE("competitive isotopologue term matches hand evaluation") {
  SpeciesRegistry reg;
  reg.entries = {solute("N14"), solute("N15"), biomass("B", Phase::L, 0.0)};
  ReactionSpec spec;
  spec.name = "reduce";
  spec.rate = 2.0 * 5.42e-4 * 1e-10;
  spec.norder = {{"B", 1.0}};
  spec.mmm = {{"N14", 2.723}};
  spec.competition = {{"N15", 2.309}};
  std::vector<double> X{2.0, 0.046, 1.073};
  const double hand = 2.0 * 1e-10 * 5.42e-4 * 1.073 * 2.0 / (2.0 + 2.723 * (1.0 + 0.046 / 2.309));
  CHECK(reaction_velocity(spec, reg, X, 1.0) == doctest::Approx(hand).epsilon(1e-12));
}

TEST_CASE("microbial response functions") {
  ResponseParams p;
  SUBCASE("temperature at the lower bound") {
    p.T_LB = 288.15;
    p.T_UB = 313.15;
    CHECK(response_temperature(288.15, p) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(response_temperature(1e4, p) == 0.0);
    CHECK(response_temperature(-1e4, p) == 0.0);
  }
  SUBCASE("liquid saturation at the lower bound") {
    p.SL_LB = 0.3;
    p.SL_UB = 0.8;
    CHECK(response_liquid(0.3, p) == doctest::Approx(0.5 * 0.8 / 1.1));
    const double peak = response_liquid_max(p);
    for (int i = 0; i <= 1000; ++i) CHECK(response_liquid(i / 1000.0, p) <= peak * (1 + 1e-15));
  }
  SUBCASE("no biomass, no constraint") {
    CHECK(response_biophase({0.5, 0.5, 0.0, 0.0}, p) == 1.0);
    CHECK(response_biophase({0.5, 0.0, 0.2, 0.1}, p) == 0.0);
    CHECK(response_biophase({0.5, 0.3, 0.2, 0.1}, p) == doctest::Approx(0.6666666666666667));
  }
  SUBCASE("gate stays in [0, 1] and is continuous") {
    p.T_LB = 288.15;
    p.T_UB = 313.15;
    p.SL_LB = 0.3;
    p.SL_UB = 0.8;
    double prev = microbial_gate({0.0, 1.0, 0.0, 0.0}, 293.15, p);
    for (int i = 1; i <= 20000; ++i) {
      const double S_L = i / 20000.0;
      const double f = microbial_gate({S_L, 1.0 - S_L, 0.0, 0.0}, 293.15, p);
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
      CHECK(std::abs(f - prev) < 1e-3);
      prev = f;
    }
    prev = microbial_gate({0.5, 0.5, 0.0, 0.0}, 250.0, p);
    for (int i = 1; i <= 20000; ++i) {
      const double f = microbial_gate({0.5, 0.5, 0.0, 0.0}, 250.0 + i * 0.005, p);
      CHECK(std::abs(f - prev) < 2e-3);
      prev = f;
    }
  }
}

TEST_CASE("first-order decay follows the exponential") {
  SpeciesRegistry reg;
  reg.entries = {solute("A"), solute("B")};
  ReactionSpec spec;
  spec.name = "decay";
  spec.stoichiometry = {{"A", -1.0}, {"B", 1.0}};
  spec.rate = 1e-5;
  spec.norder = {{"A", 1.0}};
  std::vector<CompiledReaction> rx{CompiledReaction::compile(spec, reg)};
  auto g = box();
  std::vector<MaterialRecord> mats{MaterialRecord{}};
  auto s = filled(2, 0.5);
  const double W = liquid_volume(s, g, mats, 0);
  s.amount_at(0, 0) = amount_from_concentration(1.0, W, ConcentrationUnit::MolPerLitre);
  for (int i = 1; i <= 10; ++i) {
    step_kinetics(s, g, mats, reg, rx, 3e4, {});
    const double A = concentration(s, g, mats, reg[0], 0, 0);
    CHECK(A == doctest::Approx(std::exp(-1e-5 * 3e4 * i)).epsilon(1e-6));
    CHECK(A + concentration(s, g, mats, reg[1], 0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("no reactions leave the state untouched") {
  SpeciesRegistry reg;
  reg.entries = {solute("A")};
  auto g = box();
  std::vector<MaterialRecord> mats{MaterialRecord{}};
  auto s = filled(1, 0.5);
  s.amount_at(0, 0) = 0.3;
  auto rep = step_kinetics(s, g, mats, reg, {}, 1e6, {});
  CHECK(s.amount_at(0, 0) == 0.3);
  CHECK(rep.delta_amount[0] == 0.0);
}

TEST_CASE("EPS production and lysis settle at the analytic equilibrium") {
  SpeciesRegistry reg;
  reg.entries = {biomass("B_EPS", Phase::L, 0.0), biomass("EPS", Phase::B, 0.8)};
  ReactionSpec prod, lysis;
  prod.name = "production";
  prod.stoichiometry = {{"EPS", 1.0}};
  prod.rate = 1e-8;
  prod.norder = {{"B_EPS", 1.0}};
  lysis.name = "lysis";
  lysis.stoichiometry = {{"EPS", -1.0}};
  lysis.rate = 1e-6;
  lysis.norder = {{"EPS", 1.0}};
  std::vector<CompiledReaction> rx{CompiledReaction::compile(prod, reg), CompiledReaction::compile(lysis, reg)};
  auto g = box();
  std::vector<MaterialRecord> mats{MaterialRecord{}};
  auto s = filled(2, 0.5);
  const double W = liquid_volume(s, g, mats, 0);
  s.amount_at(0, 0) = amount_from_concentration(100.0, W, ConcentrationUnit::MgPerLitre);
  auto rep = step_kinetics(s, g, mats, reg, rx, 3e7, {});
  CHECK(concentration(s, g, mats, reg[1], 0, 1) == doctest::Approx(1.0).epsilon(1e-8));
  REQUIRE(rep.biophase.size() == 1);
  // 1 mg/L in 0.2 m^3 of liquid is 2e-4 kg of biomass at 1025 kg/m^3 in 0.4 m^3 of pores.
  CHECK(rep.dS_B[0] == doctest::Approx(2e-4 / 1025.0 / 0.4).epsilon(1e-8));
}

TEST_CASE("biophase growth stops when the liquid it needs runs out") {
  SpeciesRegistry reg;
  reg.entries = {biomass("B_EPS", Phase::L, 0.0), biomass("EPS", Phase::B, 1.0)};
  ReactionSpec prod;
  prod.name = "production";
  prod.stoichiometry = {{"EPS", 1.0}};
  prod.rate = 1e-3;
  prod.norder = {{"B_EPS", 1.0}};
  prod.bio_actor = "B_EPS";
  std::vector<CompiledReaction> rx{CompiledReaction::compile(prod, reg)};
  auto g = box();
  std::vector<MaterialRecord> mats{MaterialRecord{}};
  auto s = filled(2, 0.5);
  const double W = liquid_volume(s, g, mats, 0);
  s.amount_at(0, 0) = amount_from_concentration(100.0, W, ConcentrationUnit::MgPerLitre);
  auto rep = step_kinetics(s, g, mats, reg, rx, 1e8, {});
  // With f_L = 1 the gate closes when f_L S_B reaches the remaining S_L = 0.5 - S_B.
  CHECK(rep.dS_B[0] == doctest::Approx(0.25).epsilon(1e-5));
  CHECK(rep.dS_B[0] - 0.25 < 1e-9);
}

TEST_CASE("dopri5 rejects negative excursions and clips") {
  std::vector<double> y{1.0};
  // Zero-order consumption that would overshoot zero.
  auto f = [](double, std::span<const double> x, std::span<double> d) { d[0] = x[0] > 0.0 ? -1.0 : 0.0; };
  integrate_dopri5(y, 10.0, {}, f);
  CHECK(y[0] >= 0.0);
  CHECK(y[0] < 1e-12);
}
