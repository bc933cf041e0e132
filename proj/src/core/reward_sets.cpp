#include "core/reward_sets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>

#include "core/error.hpp"
#include "core/lp.hpp"

namespace mrpe {

namespace {

constexpr double kSignNoise = 1e-12;

LpResult polytope_extreme(const Matrix& lhs, const Vector& rhs, const Eigen::Ref<const Eigen::RowVectorXd>& direction) {
  LpProblem lp;
  lp.objective = direction.transpose();
  lp.maximize = true;
  lp.le_lhs = lhs;
  lp.le_rhs = rhs;
  lp.lower = Vector::Zero(direction.size());
  lp.upper = Vector::Ones(direction.size());
  return lp_solve(lp);
}

}  // namespace

RewardSet RewardSet::finite(std::vector<Vector> rewards) {
  if (rewards.empty()) throw Error(Errc::kInvalidArgument, "finite reward set is empty");
  const Eigen::Index n = rewards.front().size();
  if (n < 1) throw Error(Errc::kInvalidArgument, "reward vectors must be non-empty");
  for (const Vector& r : rewards) {
    if (r.size() != n) throw Error(Errc::kShapeMismatch, "reward vectors differ in length");
    if (!r.allFinite() || r.minCoeff() < 0.0 || r.maxCoeff() > 1.0)
      throw Error(Errc::kRewardOutOfBox, "reward entry outside [0, 1]");
  }
  RewardSet set(Kind::kFinite, static_cast<int>(n));
  set.rewards_ = std::move(rewards);
  return set;
}

RewardSet RewardSet::box(int num_states) {
  if (num_states < 1) throw Error(Errc::kInvalidArgument, "box needs at least one state");
  return RewardSet(Kind::kBox, num_states);
}

RewardSet RewardSet::polytope(Matrix lhs, Vector rhs) {
  if (lhs.cols() < 1 || lhs.rows() != rhs.size()) throw Error(Errc::kShapeMismatch, "polytope A and b disagree");
  const LpResult feasible = polytope_extreme(lhs, rhs, Eigen::RowVectorXd::Zero(lhs.cols()));
  if (feasible.status != LpStatus::kOptimal)
    throw Error(Errc::kInfeasible, "polytope has no point inside [0, 1]^S");
  RewardSet set(Kind::kPolytope, static_cast<int>(lhs.cols()));
  set.lhs_ = std::move(lhs);
  set.rhs_ = std::move(rhs);
  return set;
}

std::vector<Vector> RewardSet::evaluation_rewards() const {
  if (kind_ == Kind::kFinite) return rewards_;
  return canonical_basis(dimension_).rewards();
}

std::string RewardSet::label() const {
  switch (kind_) {
    case Kind::kFinite:
      return "finite";
    case Kind::kBox:
      return "box";
    case Kind::kPolytope:
      return "polytope";
  }
  return "unknown";
}

double box_sup_abs(const Eigen::Ref<const Eigen::RowVectorXd>& gamma_row) {
  double plus = 0.0, minus = 0.0;
  for (Eigen::Index j = 0; j < gamma_row.size(); ++j) {
    const double v = gamma_row[j];
    if (std::abs(v) < kSignNoise) continue;
    if (v > 0.0)
      plus += v;
    else
      minus -= v;
  }
  return std::max(plus, minus);
}

double sup_abs_rho(const GammaOperator& gamma, int s, int s_prime, const RewardSet& set) {
  if (s < 0 || s >= gamma.num_states() || s_prime < 0 || s_prime >= gamma.num_states())
    throw Error(Errc::kIndexOutOfRange, "state index out of range");
  if (set.dimension() != gamma.num_states()) throw Error(Errc::kShapeMismatch, "reward set dimension mismatch");
  const Eigen::RowVectorXd row = gamma.row(s, s_prime);
  switch (set.kind()) {
    case RewardSet::Kind::kFinite: {
      double best = 0.0;
      for (const Vector& r : set.rewards()) best = std::max(best, std::abs(row.dot(r)));
      return best;
    }
    case RewardSet::Kind::kBox:
      return box_sup_abs(row);
    case RewardSet::Kind::kPolytope: {
      const LpResult up = polytope_extreme(set.lhs(), set.rhs(), row);
      const LpResult down = polytope_extreme(set.lhs(), set.rhs(), -row);
      if (up.status != LpStatus::kOptimal || down.status != LpStatus::kOptimal)
        throw Error(Errc::kInfeasible, std::string("polytope LP failed: ") + to_string(up.status));
      return std::max({up.optimum, down.optimum, 0.0});
    }
  }
  return 0.0;
}

double sup_abs_rho(const Mdp& m, const DeterministicPolicy& pi, int s, int s_prime, const RewardSet& set) {
  return sup_abs_rho(GammaOperator(m, pi), s, s_prime, set);
}

ComplexityMatrix complexity_matrix(const Mdp& m, std::span<const DeterministicPolicy> policies,
                                   std::span<const RewardSet> sets, bool use_square) {
  if (policies.size() != sets.size()) throw Error(Errc::kShapeMismatch, "need one reward set per policy");
  const int n = m.num_states();
  ComplexityMatrix out{Matrix::Zero(static_cast<Eigen::Index>(policies.size()), n)};
  for (std::size_t i = 0; i < policies.size(); ++i) {
    const GammaOperator gamma(m, policies[i]);
    for (int s = 0; s < n; ++s) {
      double best = 0.0;
      for (int sp = 0; sp < n; ++sp) best = std::max(best, sup_abs_rho(gamma, s, sp, sets[i]));
      // Constant rewards leave round-off here; it must not count as a requirement.
      if (best < kSignNoise) best = 0.0;
      out.entries(static_cast<Eigen::Index>(i), s) = use_square ? best * best : best;
    }
  }
  return out;
}

RewardSet canonical_basis(int num_states) {
  if (num_states < 1) throw Error(Errc::kInvalidArgument, "canonical basis needs S >= 1");
  std::vector<Vector> basis;
  basis.reserve(static_cast<std::size_t>(num_states));
  for (int i = 0; i < num_states; ++i) basis.push_back(Vector::Unit(num_states, i));
  return RewardSet::finite(std::move(basis));
}

RewardSet sample_finite_rewards(Rng& rng, int num_states, int k) {
  if (k < 1) throw Error(Errc::kInvalidArgument, "k must be positive");
  if (k > num_states) throw Error(Errc::kKTooLarge, "cannot draw more basis vectors than states");
  std::vector<int> idx(static_cast<std::size_t>(num_states));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<Vector> picked;
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(num_states - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    picked.push_back(Vector::Unit(num_states, idx[static_cast<std::size_t>(i)]));
  }
  return RewardSet::finite(std::move(picked));
}

RewardSet read_polytope(std::istream& in) {
  int rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows < 1 || cols < 1) throw Error(Errc::kParse, "expected polytope header 'm S'");
  Matrix lhs(rows, cols);
  Vector rhs(rows);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j)
      if (!(in >> lhs(i, j))) throw Error(Errc::kParse, "truncated polytope row");
    if (!(in >> rhs[i])) throw Error(Errc::kParse, "truncated polytope row");
  }
  return RewardSet::polytope(std::move(lhs), std::move(rhs));
}

RewardSet load_polytope(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  return read_polytope(in);
}

}  // namespace mrpe
