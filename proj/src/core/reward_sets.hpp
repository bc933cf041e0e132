#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "core/deviation.hpp"
#include "core/mdp.hpp"
#include "core/rng.hpp"

namespace mrpe {

// Per-policy reward set over [0, 1]^S: a finite list, the whole box
// (reward-free), or a polytope {r in [0, 1]^S : A r <= b}.
class RewardSet {
 public:
  enum class Kind { kFinite, kBox, kPolytope };

  static RewardSet finite(std::vector<Vector> rewards);
  static RewardSet box(int num_states);
  // Throws Errc::kInfeasible when the polytope has no point in the box.
  static RewardSet polytope(Matrix lhs, Vector rhs);

  Kind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  const std::vector<Vector>& rewards() const { return rewards_; }
  const Matrix& lhs() const { return lhs_; }
  const Vector& rhs() const { return rhs_; }

  // Rewards used when reporting errors: the list itself for finite sets and
  // the canonical basis otherwise.
  std::vector<Vector> evaluation_rewards() const;

  std::string label() const;

 private:
  RewardSet(Kind kind, int dimension) : kind_(kind), dimension_(dimension) {}

  Kind kind_;
  int dimension_;
  std::vector<Vector> rewards_;
  Matrix lhs_;
  Vector rhs_;
};

// Gamma_+ / Gamma_- closed form: max over r in [0,1]^S of |row . r|.
double box_sup_abs(const Eigen::Ref<const Eigen::RowVectorXd>& gamma_row);

// sup over the set of |rho_r(s, s')|.
double sup_abs_rho(const GammaOperator& gamma, int s, int s_prime, const RewardSet& set);
double sup_abs_rho(const Mdp& m, const DeterministicPolicy& pi, int s, int s_prime, const RewardSet& set);

// A_i(s) = max_{s'} (sup |rho|)^2 (or without the square), one row per policy.
struct ComplexityMatrix {
  Matrix entries;

  int num_policies() const { return static_cast<int>(entries.rows()); }
  int num_states() const { return static_cast<int>(entries.cols()); }
  double operator()(int i, int s) const { return entries(i, s); }
};

ComplexityMatrix complexity_matrix(const Mdp& m, std::span<const DeterministicPolicy> policies,
                                   std::span<const RewardSet> sets, bool use_square = true);

RewardSet canonical_basis(int num_states);

// k distinct one-hot vectors, uniform over subsets (partial Fisher-Yates).
RewardSet sample_finite_rewards(Rng& rng, int num_states, int k);

// "m S" header, then m lines holding a row of A followed by its b entry.
RewardSet read_polytope(std::istream& in);
RewardSet load_polytope(const std::string& path);

}  // namespace mrpe
