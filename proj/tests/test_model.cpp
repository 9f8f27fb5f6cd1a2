#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "didactic/model.hpp"

using namespace didactic;
using Catch::Approx;

namespace {

ModelParams four_params(double b = 0.0, double s = 0.0) {
  return ModelParams({0.5, 0.1, 0.05, 0.02}, {0.1, 0.05, 0.02, 0.01}, b, 1.0, s);
}

}  // namespace

TEST_CASE("derivatives_four matches hand-evaluated rates", "[model]") {
  SECTION("empty state with zero requirement is a fixed point") {
    const auto r = derivatives_four(KnowledgeState::zeros(4), four_params(), {true, 0.0});
    for (double v : r) CHECK(v == 0.0);
  }
  SECTION("break is pure forgetting") {
    const auto r = derivatives_four(KnowledgeState({1, 1, 1, 1}), four_params(), {false, 123.0});
    CHECK(r[0] == Approx(-0.1));
    CHECK(r[1] == Approx(-0.05));
    CHECK(r[2] == Approx(-0.02));
    CHECK(r[3] == Approx(-0.01));
  }
  SECTION("lesson at U = 10") {
    // 0.5*(10-4)*1 - 0.1 - 0.1 = 2.8; 0.1 - 0.05 - 0.05 = 0; 0.05 - 0.02 - 0.02; 0.02 - 0.01
    const auto r = derivatives_four(KnowledgeState({1, 1, 1, 1}), four_params(), {true, 10.0});
    CHECK(r[0] == Approx(2.8).margin(1e-15));
    CHECK(r[1] == Approx(0.0).margin(1e-15));
    CHECK(r[2] == Approx(0.01).margin(1e-15));
    CHECK(r[3] == Approx(0.01).margin(1e-15));
  }
  SECTION("Z^b at Z = 0") {
    // b > 0 and Z = 0: no acquisition at all.
    const auto r = derivatives_four(KnowledgeState::zeros(4), four_params(0.5), {true, 10.0});
    CHECK(r[0] == 0.0);
    // b = 0: Z^0 = 1 even at Z = 0.
    const auto r0 = derivatives_four(KnowledgeState::zeros(4), four_params(0.0), {true, 10.0});
    CHECK(r0[0] == Approx(5.0));
  }
  SECTION("dimension mismatch is a contract violation") {
    CHECK_THROWS_AS(derivatives_four(KnowledgeState({1, 1, 1}), four_params(), {true, 1.0}), ContractError);
    const ModelParams two({0.4, 0.1}, {0.1, 0.01});
    CHECK_THROWS_AS(derivatives_four(KnowledgeState({1, 1, 1, 1}), two, {true, 1.0}), ContractError);
  }
}

TEST_CASE("derivatives_two", "[model]") {
  const ModelParams p({0.4, 0.1}, {0.1, 0.01});
  SECTION("acquisition from an empty state") {
    const auto r = derivatives_two(KnowledgeState({0, 0}), p, {true, 5.0});
    CHECK(r[0] == Approx(2.0));
    CHECK(r[1] == 0.0);
  }
  SECTION("pure decay") {
    const auto r = derivatives_two(KnowledgeState({2, 3}), p, {false, 0.0});
    CHECK(r[0] == Approx(-0.2));
    CHECK(r[1] == Approx(-0.03));
  }
  SECTION("zero fixed point") {
    const auto r = derivatives_two(KnowledgeState({0, 0}), p, {true, 0.0});
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 0.0);
  }
  SECTION("no Z^b factor even when b > 0") {
    const ModelParams pb({0.4, 0.1}, {0.1, 0.01}, 2.0);
    CHECK(derivatives_two(KnowledgeState({0, 0}), pb, {true, 5.0})[0] == Approx(2.0));
  }
  CHECK_THROWS_AS(derivatives_two(KnowledgeState({0, 0, 0}), p, {true, 1.0}), ContractError);
}

TEST_CASE("derivatives_general", "[model]") {
  SECTION("r = 0 reduces to -gamma_i Z_i") {
    const ModelParams p({0.3, 0.2, 0.1, 0.05, 0.01}, {0.5, 0.4, 0.3, 0.2, 0.1}, 0.7, 1.0, 0.3);
    const KnowledgeState z({1.5, 2.0, 0.5, 3.0, 4.0});
    const auto r = derivatives_general(z, p, {false, 50.0});
    for (std::size_t i = 0; i < 5; ++i) CHECK(r[i] == -p.gammas()[i] * z[i]);
  }
  SECTION("S = 1 suppresses every teaching term") {
    const ModelParams p({0.5, 0.1, 0.05, 0.02}, {0.1, 0.05, 0.02, 0.01}, 0.0, 1.0, 1.0);
    const KnowledgeState z({1, 2, 3, 4});
    const auto r = derivatives_general(z, p, {true, 100.0});
    for (std::size_t i = 0; i < 4; ++i) CHECK(r[i] == Approx(-p.gammas()[i] * z[i]));
  }
  SECTION("n = 3 by hand") {
    // r(1-S) = 0.5; Z = 3; deficit 7
    const ModelParams p({0.4, 0.2, 0.1}, {0.3, 0.1, 0.02}, 0.0, 1.0, 0.5);
    const auto r = derivatives_general(KnowledgeState({1, 1, 1}), p, {true, 10.0});
    CHECK(r[0] == Approx(0.5 * (0.4 * 7 - 0.2) - 0.3));
    CHECK(r[1] == Approx(0.5 * (0.2 - 0.1) - 0.1));
    CHECK(r[2] == Approx(0.5 * 0.1 - 0.02));
  }
  CHECK_THROWS_AS(derivatives_general(KnowledgeState({1.0}), ModelParams({0.1, 0.1}, {0.2, 0.1}), {true, 1.0}),
                  ContractError);
}

TEST_CASE("general model with n = 4 and S = 0 equals the four-component model", "[model][property]") {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> g(4);
    g[3] = 0.01 + unit(rng);
    for (int i = 2; i >= 0; --i) g[i] = g[i + 1] + 0.01 + unit(rng);
    const ModelParams p({3 * unit(rng), unit(rng), unit(rng), unit(rng)}, g, trial % 3 == 0 ? 0.0 : 2 * unit(rng),
                        1.0, 0.0);
    const KnowledgeState z({5 * unit(rng), 5 * unit(rng), 5 * unit(rng), 5 * unit(rng)});
    const TeachingControl c{unit(rng) < 0.7, 20 * unit(rng)};
    const auto a = derivatives_four(z, p, c);
    const auto b = derivatives_general(z, p, c);
    for (std::size_t i = 0; i < 4; ++i) REQUIRE(std::abs(a[i] - b[i]) <= 1e-12);
  }
}

TEST_CASE("total_knowledge", "[model]") {
  CHECK(total_knowledge(KnowledgeState({0, 0, 0, 0})) == 0.0);
  CHECK(total_knowledge(KnowledgeState({1, 2, 3, 4})) == 10.0);
  CHECK(total_knowledge(KnowledgeState({0.5, 0.25})) == 0.75);
}

TEST_CASE("strength coefficients", "[model]") {
  SECTION("Pf boundary cases") {
    CHECK(strength_pf(KnowledgeState({3, 0, 0, 0})) == 0.0);
    CHECK(strength_pf(KnowledgeState({0, 0, 0, 3})) == 1.0);
    CHECK(strength_pf(KnowledgeState({1, 1, 1, 1})) == 0.25);
    CHECK(strength_pf(KnowledgeState({0, 0, 0, 0})) == 0.0);
    CHECK_THROWS_AS(strength_pf(KnowledgeState({1, 1, 1})), ContractError);
  }
  SECTION("Pr weights 1/2^(n-i) from category 2") {
    CHECK(strength_pr(KnowledgeState({7, 0, 0, 0})) == 0.0);
    CHECK(strength_pr(KnowledgeState({0, 0, 0, 7})) == 1.0);
    CHECK(strength_pr(KnowledgeState({0, 4, 2, 1})) == Approx(3.0 / 7.0));
    CHECK(strength_pr(KnowledgeState({0, 0, 0, 0})) == 0.0);
    // n = 2: Z_2 / Z
    CHECK(strength_pr(KnowledgeState({1, 3})) == Approx(0.75));
    // n = 3: (Z_2/2 + Z_3) / Z = (1 + 1) / 4
    CHECK(strength_pr(KnowledgeState({1, 2, 1})) == Approx(0.5));
    // n = 6: (Z_2/16 + Z_3/8 + Z_4/4 + Z_5/2 + Z_6) / Z, all ones: (1/16+1/8+1/4+1/2+1)/6
    CHECK(strength_pr(KnowledgeState({1, 1, 1, 1, 1, 1})) == Approx((1.0 / 16 + 1.0 / 8 + 0.25 + 0.5 + 1.0) / 6.0));
  }
  SECTION("scale invariance and range") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(0.0, 10.0);
    for (int k = 0; k < 500; ++k) {
      KnowledgeState z({unit(rng), unit(rng), unit(rng), unit(rng)});
      const double c = 0.001 + unit(rng);
      KnowledgeState scaled = z;
      for (auto& v : scaled.z) v *= c;
      CHECK(strength_pf(scaled) == Approx(strength_pf(z)).epsilon(1e-12));
      CHECK(strength_pr(scaled) == Approx(strength_pr(z)).epsilon(1e-12));
      CHECK(strength_pf(z) >= 0.0);
      CHECK(strength_pf(z) <= 1.0);
      CHECK(strength_pr(z) >= 0.0);
      CHECK(strength_pr(z) <= 1.0);
    }
  }
}

TEST_CASE("gamma_from_tau", "[model]") {
  CHECK(gamma_from_tau(1.0) == 1.0);
  CHECK(gamma_from_tau(2.0) == 0.5);
  CHECK_THROWS_AS(gamma_from_tau(0.0), DomainError);
  CHECK_THROWS_AS(gamma_from_tau(-1.0), DomainError);
}

TEST_CASE("ModelParams validation", "[model]") {
  CHECK_THROWS_AS(ModelParams({0.1, 0.1}, {0.1, 0.2}), DomainError);
  CHECK_THROWS_AS(ModelParams({0.1, 0.1}, {0.1, 0.1}), DomainError);
  CHECK_THROWS_AS(ModelParams({0.1, 0.1, 0.1}, {0.3, 0.2}), ContractError);
  CHECK_THROWS_AS(ModelParams({-0.1, 0.1}, {0.3, 0.2}), DomainError);
  CHECK_THROWS_AS(ModelParams({0.1, 0.1}, {0.3, 0.2}, -1.0), DomainError);
  CHECK_THROWS_AS(ModelParams({0.1, 0.1}, {0.3, 0.2}, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(ModelParams({0.1, 0.1}, {0.3, 0.2}, 0.0, 1.0, 1.5), DomainError);
  CHECK_NOTHROW(ModelParams({0.1, 0.1}, {0.3, 0.2}, 0.0, 1.0, 1.0));
  CHECK_THROWS_AS(Model(ModelKind::four, ModelParams({0.1, 0.1}, {0.3, 0.2})), ContractError);
}
