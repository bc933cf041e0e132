#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/deviation.hpp"
#include "core/error.hpp"
#include "support.hpp"

using namespace mrpe;
using test::random_mdp;

TEST_CASE("constant rewards give a zero deviation") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const int S = 2 + static_cast<int>(rng.below(5)), A = 1 + static_cast<int>(rng.below(3));
    const Mdp m = random_mdp(rng, S, A, 0.1 + 0.85 * rng.uniform());
    const DeterministicPolicy pi = test::random_policy(rng, S, A);
    const double alpha = trial == 0 ? 0.0 : (trial == 1 ? 1.0 : rng.uniform());
    const Vector r = Vector::Constant(S, alpha);
    const DeviationMatrix dev = rho_matrix(m, pi, r);
    CHECK(dev.max_norm <= 1e-12);
    CHECK(diag_rho(m, pi, r).cwiseAbs().maxCoeff() <= 1e-12);
    const AltConditions cond = alt_model_conditions(m, pi, r, 1e-6);
    CHECK_FALSE(cond.sufficient);
    CHECK_FALSE(cond.necessary);
  }
}

TEST_CASE("two-state cycle deviation by hand") {
  Vector r(2);
  r << 1.0, 0.0;
  const Mdp m = test::two_state_cycle(0.5);
  const DeviationMatrix dev = rho_matrix(m, test::constant_policy(2, 0), r);
  CHECK(dev.rho(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(dev.rho(0, 1)) < 1e-12);
  CHECK(dev.rho(1, 1) == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(dev.value_span == doctest::Approx(2.0 / 3.0));
  const Vector d = diag_rho(m, test::constant_policy(2, 0), r);
  CHECK(d[0] == doctest::Approx(dev.rho(0, 0)).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(dev.rho(1, 1)).epsilon(1e-12));
}

TEST_CASE("deviation bounds on random instances") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int S = 2 + static_cast<int>(rng.below(5)), A = 1 + static_cast<int>(rng.below(3));
    const Mdp m = random_mdp(rng, S, A, 0.05 + 0.9 * rng.uniform());
    const DeterministicPolicy pi = test::random_policy(rng, S, A);
    const Vector r = test::random_reward(rng, S);
    const DeviationMatrix dev = rho_matrix(m, pi, r);
    CHECK(dev.rho.diagonal().cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    CHECK(dev.rho.cwiseAbs().maxCoeff() <= dev.value_span + 1e-12);
    const Vector d = diag_rho(m, pi, r);
    CHECK((d - dev.rho.diagonal()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(d.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
    if (span_of(r) > 0.01) CHECK(dev.max_norm > 0.0);
  }
}

TEST_CASE("identity chain Gamma operator") {
  const GammaOperator g(test::self_loops(2, 1, 0.5), test::constant_policy(2, 0));
  Matrix expect(2, 2);
  expect << 0, 0, -2, 2;
  CHECK((g.at(0) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Gamma rows sum to zero and reproduce the deviation") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Mdp m = random_mdp(rng, 5, 3, 0.2 + 0.75 * rng.uniform());
    const DeterministicPolicy pi = test::random_policy(rng, 5, 3);
    const GammaOperator g(m, pi);
    for (int s = 0; s < 5; ++s) CHECK(g.at(s).rowwise().sum().cwiseAbs().maxCoeff() < 1e-9);
    for (int k = 0; k < 20; ++k) {
      const Vector r = test::random_reward(rng, 5);
      const Matrix rho = rho_matrix(m, pi, r).rho;
      for (int s = 0; s < 5; ++s) {
        const Vector via_gamma = g.at(s) * r;
        CHECK((via_gamma.transpose() - rho.row(s)).cwiseAbs().maxCoeff() < 1e-9);
        for (int sp = 0; sp < 5; ++sp) CHECK(std::abs(g.rho(s, sp, r) - rho(s, sp)) < 1e-9);
      }
    }
  }
}

TEST_CASE("alternative-model thresholds") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const Mdp m = random_mdp(rng, 4, 2, 0.9);
    const DeterministicPolicy pi = test::random_policy(rng, 4, 2);
    const Vector r = test::random_reward(rng, 4);
    const double bar = rho_matrix(m, pi, r).max_norm;
    if (bar <= 0.0) continue;
    const double edge = 0.9 * bar / 2.0;
    const AltConditions below = alt_model_conditions(m, pi, r, 0.99 * edge);
    CHECK(below.sufficient);
    CHECK(below.necessary);
    REQUIRE(below.witness_state.has_value());
    CHECK(rho_matrix(m, pi, r).row_norms[*below.witness_state] > 2.0 * 0.99 * edge / 0.9);
    CHECK_FALSE(alt_model_conditions(m, pi, r, 1.01 * edge).sufficient);
  }
  CHECK_THROWS_AS(alt_model_conditions(test::two_state_cycle(0.5), test::constant_policy(2, 0), Vector::Zero(2), 0.0),
                  Error);
}

TEST_CASE("two-state example admits confusing models at eps = 0.03") {
  const TwoStateExample ex;
  CHECK(alt_model_conditions(ex.mdp(), ex.policy(), ex.reward_vector(), 0.03).sufficient);
}

TEST_CASE("confusing model construction") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const Mdp m = random_mdp(rng, 4, 2, 0.8);
    const DeterministicPolicy pi = test::random_policy(rng, 4, 2);
    const int s0 = static_cast<int>(rng.below(4)), s1 = static_cast<int>(rng.below(4));
    const double delta = 0.05 + 0.9 * rng.uniform();
    const Mdp alt = construct_confusing_model(m, pi, s0, s1, delta);
    CHECK(alt.validate().ok());
    for (int s = 0; s < 4; ++s) {
      for (int a = 0; a < 2; ++a) {
        for (int j = 0; j < 4; ++j) {
          if (s == s0 && a == pi(s0)) {
            const double expect = (1.0 - delta) * m.p(s, a, j) + (j == s1 ? delta : 0.0);
            CHECK(alt.p(s, a, j) == doctest::Approx(expect).epsilon(1e-12));
          } else {
            CHECK(alt.p(s, a, j) == m.p(s, a, j));
          }
          if (m.p(s, a, j) > 0.0) CHECK(alt.p(s, a, j) > 0.0);
        }
      }
    }
    const Mdp tiny = construct_confusing_model(m, pi, s0, s1, 1e-6);
    CHECK((tiny.transitions() - m.transitions()).cwiseAbs().maxCoeff() <= 1e-6 + 1e-15);
  }
  const Mdp m = test::two_state_cycle(0.5);
  const DeterministicPolicy pi = test::constant_policy(2, 0);
  CHECK_THROWS_AS(construct_confusing_model(m, pi, 0, 1, 0.0), Error);
  CHECK_THROWS_AS(construct_confusing_model(m, pi, 0, 1, 1.0), Error);
  CHECK_THROWS_AS(construct_confusing_model(m, pi, 0, 2, 0.5), Error);
}

TEST_CASE("deltas inside the guaranteed range separate the values") {
  Rng rng(6);
  int exercised = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int S = 2 + static_cast<int>(rng.below(4));
    const Mdp m = random_mdp(rng, S, 2, 0.5 + 0.45 * rng.uniform());
    const DeterministicPolicy pi = test::random_policy(rng, S, 2);
    const Vector r = test::random_reward(rng, S);
    const double eps = 0.01 + 0.2 * rng.uniform();
    const DeviationMatrix dev = rho_matrix(m, pi, r);
    for (int s0 = 0; s0 < S; ++s0) {
      for (int s1 = 0; s1 < S; ++s1) {
        const auto range = confusing_delta_range(m, pi, r, s0, s1, eps);
        if (!range) continue;
        ++exercised;
        for (double t : {0.01, 0.5, 0.99}) {
          const double delta = range->first + t * (range->second - range->first);
          CHECK(value_gap(m, construct_confusing_model(m, pi, s0, s1, delta), pi, r) > 2.0 * eps);
        }
        const auto auto_alt = auto_confusing_model(m, pi, r, s0, s1, eps);
        REQUIRE(auto_alt.has_value());
        CHECK(value_gap(m, *auto_alt, pi, r) > 2.0 * eps);
      }
      // Two-thirds of the mass onto the arg-max probe.
      if (dev.row_norms[s0] > 3.0 * eps / m.discount()) {
        Eigen::Index s1 = 0;
        dev.rho.row(s0).cwiseAbs().maxCoeff(&s1);
        CHECK(value_gap(m, construct_confusing_model(m, pi, s0, static_cast<int>(s1), 2.0 / 3.0), pi, r) >
              2.0 * eps);
      }
    }
  }
  CHECK(exercised > 50);
}

TEST_CASE("value gap identities") {
  Rng rng(7);
  const Mdp m = random_mdp(rng, 3, 2, 0.9);
  const Mdp other = random_mdp(rng, 3, 2, 0.9);
  const DeterministicPolicy pi = test::random_policy(rng, 3, 2);
  const Vector r = test::random_reward(rng, 3);
  CHECK(value_gap(m, m, pi, r) == 0.0);
  CHECK(value_gap(m, other, pi, r) == doctest::Approx(value_gap(other, m, pi, r)).epsilon(1e-14));
  CHECK_THROWS_AS(value_gap(m, random_mdp(rng, 4, 2, 0.9), pi, r), Error);
}

TEST_CASE("two-state example gaps around the true p2") {
  const TwoStateExample ex;
  CHECK(example_value_gap(ex, 0.5) == 0.0);
  CHECK(example_value_gap(ex, 0.56) > 0.06);
  CHECK(example_value_gap(ex, 0.41) > 0.06);
  CHECK(example_value_gap(ex, 0.485) <= 0.06);

  std::vector<double> grid;
  for (int k = 1; k < 1000; ++k) grid.push_back(k * 1e-3);
  const auto curve = nonconvexity_curve(grid);
  REQUIRE(curve.size() == grid.size());
  for (std::size_t k = 1; k < curve.size(); ++k) CHECK(std::abs(curve[k].second - curve[k - 1].second) < 0.05);
}

TEST_CASE("KL conventions") {
  Eigen::RowVectorXd p(3), q(3);
  p << 0.0, 0.5, 0.5;
  q << 0.2, 0.4, 0.4;
  CHECK(kl_divergence(p, q) == doctest::Approx(std::log(0.5 / 0.4)).epsilon(1e-12));
  CHECK(kl_divergence(p, p) == 0.0);
  q << 0.5, 0.5, 0.0;
  CHECK(std::isinf(kl_divergence(p, q)));
}

TEST_CASE("confusing a transient state costs no information") {
  // State 2 is left under every behaviour action and never re-entered.
  Matrix t(6, 3);
  t << 0.5, 0.5, 0.0,  //
      0.2, 0.8, 0.0,   //
      0.7, 0.3, 0.0,   //
      0.4, 0.6, 0.0,   //
      0.5, 0.25, 0.25, //
      0.1, 0.6, 0.3;
  const Mdp m(3, 2, 0.9, t);
  StochasticPolicy behaviour{Matrix::Constant(3, 2, 0.5)};
  const Vector d = stationary_distribution(policy_chain(m, behaviour)).distribution;
  CHECK(d[2] == 0.0);
  Matrix weight(3, 2);
  for (int s = 0; s < 3; ++s) weight.row(s) = d[s] * behaviour.probs.row(s);

  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const DeterministicPolicy pi = test::random_policy(rng, 3, 2);
    const Mdp alt = construct_confusing_model(m, pi, 2, static_cast<int>(rng.below(3)), 0.1 + 0.8 * rng.uniform());
    CHECK(weighted_kl(m, alt, weight) == 0.0);
    CHECK(weighted_kl(m, alt, Matrix::Constant(3, 2, 1.0)) >= 0.0);
  }
}
