#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "core/mdp.hpp"

namespace mrpe {

// One-step value deviation rho(s, s') = V(s') - P(s, pi(s)) . V.
struct DeviationMatrix {
  Matrix rho;          // rows: anchor state s, columns: probe state s'
  Vector row_norms;    // ||rho(s)||_inf
  double max_norm = 0.0;
  Vector value;
  double value_span = 0.0;
};

DeviationMatrix rho_matrix(const Mdp& m, const DeterministicPolicy& pi, const Vector& r);

// diag(rho) = (I - P_pi)(I - gamma P_pi)^{-1} r, computed without forming rho.
Vector diag_rho(const Mdp& m, const DeterministicPolicy& pi, const Vector& r);

// Gamma(s) = K(s) G with K(s) = I - 1 P(s, pi(s))^T and G the discounted
// fundamental matrix, so that rho_r(s, s') = e_{s'}^T Gamma(s) r.
class GammaOperator {
 public:
  GammaOperator(const Mdp& m, const DeterministicPolicy& pi);

  int num_states() const { return static_cast<int>(fundamental_.rows()); }
  Matrix at(int anchor) const;
  Eigen::RowVectorXd row(int anchor, int probe) const;
  double rho(int anchor, int probe, const Vector& r) const { return row(anchor, probe).dot(r); }
  const Matrix& fundamental() const { return fundamental_; }

 private:
  Matrix fundamental_;
  Matrix next_visits_;  // row s: P(s, pi(s))^T G
};

struct AltConditions {
  bool sufficient = false;  // some ||rho(s)|| > 2 eps / gamma
  bool necessary = false;   // some ||rho(s)|| > eps (1 - gamma) / gamma
  std::optional<int> witness_state;
  double max_norm = 0.0;
};

AltConditions alt_model_conditions(const Mdp& m, const DeterministicPolicy& pi, const Vector& r, double eps);

// Moves delta of the mass of row (s0, pi(s0)) onto s1; every other row is kept.
Mdp construct_confusing_model(const Mdp& m, const DeterministicPolicy& pi, int s0, int s1, double delta);

// Open interval of delta for which the construction at (s0, s1) is guaranteed
// to separate values by more than 2 eps; empty when |rho(s0, s1)| is too small.
std::optional<std::pair<double, double>> confusing_delta_range(const Mdp& m, const DeterministicPolicy& pi,
                                                               const Vector& r, int s0, int s1, double eps);

// Construction with delta at the midpoint of confusing_delta_range.
std::optional<Mdp> auto_confusing_model(const Mdp& m, const DeterministicPolicy& pi, const Vector& r, int s0, int s1,
                                        double eps);

double value_gap(const Mdp& m, const Mdp& alt, const DeterministicPolicy& pi, const Vector& r);

// KL(p || q) with 0 log(0 / q) = 0; +inf when p > 0 = q.
double kl_divergence(const Eigen::Ref<const Eigen::RowVectorXd>& p, const Eigen::Ref<const Eigen::RowVectorXd>& q);

// sum_{s,a} weight(s, a) KL(P(s, a) || P'(s, a)).
double weighted_kl(const Mdp& m, const Mdp& alt, const Matrix& weight);

// Two-state instance whose confusing set is non-convex. Rewards sit on
// transitions: (s1, a1) pays r1 on its self-loop, (s1, a2) pays r2 on its
// self-loop, everything else pays 0. The target plays a2 in s1 and a1 in s2.
struct TwoStateExample {
  double gamma = 0.9;
  double p1 = 0.9;
  double r1 = 0.0;
  double r2 = 0.5;
  double p2 = 0.5;
  double p3 = 0.01;

  Mdp mdp() const;
  DeterministicPolicy policy() const { return DeterministicPolicy{{1, 0}}; }
  // Expected one-step reward along the target: (p2 r2, 0).
  Vector reward_vector() const;
  TwoStateExample with_p2(double alt_p2) const {
    TwoStateExample e = *this;
    e.p2 = alt_p2;
    return e;
  }
};

// ||V_truth - V_alt||_inf where the alternative only changes p2. The expected
// reward of (s1, a2) moves with p2 because the reward is paid on the self-loop.
double example_value_gap(const TwoStateExample& truth, double alt_p2);

std::vector<std::pair<double, double>> nonconvexity_curve(std::span<const double> p2_grid,
                                                          const TwoStateExample& truth = {});

}  // namespace mrpe
