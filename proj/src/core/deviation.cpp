#include "core/deviation.hpp"

#include <cmath>
#include <limits>

#include "core/error.hpp"

namespace mrpe {

DeviationMatrix rho_matrix(const Mdp& m, const DeterministicPolicy& pi, const Vector& r) {
  DeviationMatrix out;
  out.value = policy_value(m, pi, r);
  const int n = m.num_states();
  out.rho.resize(n, n);
  for (int s = 0; s < n; ++s) {
    const double expected_next = m.row(s, pi(s)).dot(out.value);
    out.rho.row(s) = out.value.transpose().array() - expected_next;
  }
  out.row_norms = out.rho.cwiseAbs().rowwise().maxCoeff();
  out.max_norm = out.row_norms.maxCoeff();
  out.value_span = span_of(out.value);
  return out;
}

Vector diag_rho(const Mdp& m, const DeterministicPolicy& pi, const Vector& r) {
  check_reward_vector(m, r);
  const PolicyMatrices pm = policy_matrices(m, pi);
  const Eigen::Index n = m.num_states();
  return (Matrix::Identity(n, n) - pm.transition) * (pm.fundamental * r);
}

GammaOperator::GammaOperator(const Mdp& m, const DeterministicPolicy& pi) {
  const PolicyMatrices pm = policy_matrices(m, pi);
  fundamental_ = pm.fundamental;
  next_visits_ = pm.transition * pm.fundamental;
}

Matrix GammaOperator::at(int anchor) const {
  return fundamental_ - Vector::Ones(fundamental_.rows()) * next_visits_.row(anchor);
}

Eigen::RowVectorXd GammaOperator::row(int anchor, int probe) const {
  return fundamental_.row(probe) - next_visits_.row(anchor);
}

AltConditions alt_model_conditions(const Mdp& m, const DeterministicPolicy& pi, const Vector& r, double eps) {
  if (!(eps > 0.0)) throw Error(Errc::kInvalidArgument, "eps must be positive");
  const DeviationMatrix dev = rho_matrix(m, pi, r);
  const double g = m.discount();
  const double sufficient_level = 2.0 * eps / g;
  const double necessary_level = eps * (1.0 - g) / g;
  AltConditions out;
  out.max_norm = dev.max_norm;
  for (int s = 0; s < m.num_states(); ++s) {
    if (dev.row_norms[s] > sufficient_level && !out.witness_state) out.witness_state = s;
    if (dev.row_norms[s] > necessary_level) out.necessary = true;
  }
  out.sufficient = out.witness_state.has_value();
  return out;
}

Mdp construct_confusing_model(const Mdp& m, const DeterministicPolicy& pi, int s0, int s1, double delta) {
  check_policy(m, pi);
  if (s0 < 0 || s0 >= m.num_states() || s1 < 0 || s1 >= m.num_states())
    throw Error(Errc::kIndexOutOfRange, "confusing-model states out of range");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::kInvalidDelta, "delta must lie in (0, 1)");
  Vector row = (1.0 - delta) * m.row(s0, pi(s0)).transpose();
  row[s1] += delta;
  // Exact renormalisation keeps the row within the stochastic tolerance.
  row /= row.sum();
  return m.with_row(s0, pi(s0), row);
}

std::optional<std::pair<double, double>> confusing_delta_range(const Mdp& m, const DeterministicPolicy& pi,
                                                               const Vector& r, int s0, int s1, double eps) {
  const DeviationMatrix dev = rho_matrix(m, pi, r);
  const double g = m.discount();
  const double dev01 = std::abs(dev.rho(s0, s1));
  const double stay = m.p(s0, pi(s0), s0);
  if (!(dev01 - 2.0 * eps * stay > 0.0) || !(g * dev01 > 2.0 * eps)) return std::nullopt;
  const double lo = 2.0 * eps * (1.0 - g * stay) / (g * (dev01 - 2.0 * eps * stay));
  if (!(lo < 1.0)) return std::nullopt;
  return std::make_pair(lo, 1.0);
}

std::optional<Mdp> auto_confusing_model(const Mdp& m, const DeterministicPolicy& pi, const Vector& r, int s0, int s1,
                                        double eps) {
  const auto range = confusing_delta_range(m, pi, r, s0, s1, eps);
  if (!range) return std::nullopt;
  return construct_confusing_model(m, pi, s0, s1, 0.5 * (range->first + range->second));
}

double value_gap(const Mdp& m, const Mdp& alt, const DeterministicPolicy& pi, const Vector& r) {
  if (m.num_states() != alt.num_states() || m.num_actions() != alt.num_actions())
    throw Error(Errc::kShapeMismatch, "models have different shapes");
  return (policy_value(m, pi, r) - policy_value(alt, pi, r)).lpNorm<Eigen::Infinity>();
}

double kl_divergence(const Eigen::Ref<const Eigen::RowVectorXd>& p, const Eigen::Ref<const Eigen::RowVectorXd>& q) {
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double weighted_kl(const Mdp& m, const Mdp& alt, const Matrix& weight) {
  if (weight.rows() != m.num_states() || weight.cols() != m.num_actions())
    throw Error(Errc::kShapeMismatch, "weight must be S x A");
  double total = 0.0;
  for (int s = 0; s < m.num_states(); ++s) {
    for (int a = 0; a < m.num_actions(); ++a) {
      if (weight(s, a) == 0.0) continue;
      total += weight(s, a) * kl_divergence(m.row(s, a), alt.row(s, a));
    }
  }
  return total;
}

Mdp TwoStateExample::mdp() const {
  Matrix t(4, 2);
  t << p1, 1.0 - p1,  // (s1, a1)
      p2, 1.0 - p2,   // (s1, a2)
      p3, 1.0 - p3,   // (s2, a1)
      0.0, 1.0;       // (s2, a2)
  return Mdp(2, 2, gamma, std::move(t));
}

Vector TwoStateExample::reward_vector() const {
  Vector r(2);
  r << p2 * r2, 0.0;
  return r;
}

double example_value_gap(const TwoStateExample& truth, double alt_p2) {
  if (!(alt_p2 > 0.0 && alt_p2 < 1.0)) throw Error(Errc::kInvalidArgument, "p2 must lie in (0, 1)");
  const TwoStateExample alt = truth.with_p2(alt_p2);
  const Vector v = policy_value(truth.mdp(), truth.policy(), truth.reward_vector());
  const Vector v_alt = policy_value(alt.mdp(), alt.policy(), alt.reward_vector());
  return (v - v_alt).lpNorm<Eigen::Infinity>();
}

std::vector<std::pair<double, double>> nonconvexity_curve(std::span<const double> p2_grid,
                                                          const TwoStateExample& truth) {
  std::vector<std::pair<double, double>> curve;
  curve.reserve(p2_grid.size());
  for (double p2 : p2_grid) curve.emplace_back(p2, example_value_gap(truth, p2));
  return curve;
}

}  // namespace mrpe
