#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mrpe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Absolute tolerance on transition row sums.
inline constexpr double kStochasticTol = 1e-12;

struct ValidationIssue {
  enum class Kind { kRowNotStochastic, kDiscountOutOfRange, kNotCommunicatingUnderUniform };
  Kind kind;
  int state = -1;
  int action = -1;
  std::string message;
  bool fatal() const { return kind != Kind::kNotCommunicatingUnderUniform; }
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool communicating = false;
  bool aperiodic = false;

  bool ok() const;
  std::string summary() const;
};

// Checks the raw ingredients of an MDP. Transition rows are laid out
// s-major: row (s * A + a) holds P(. | s, a).
ValidationReport validate_mdp(int num_states, int num_actions, double discount,
                              const Matrix& transitions);

// Finite discounted MDP. Construction validates the invariants and throws
// mrpe::Error on a non-stochastic row or a discount outside (0, 1).
class Mdp {
 public:
  Mdp(int num_states, int num_actions, double discount, Matrix transitions);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double discount() const { return discount_; }

  double p(int s, int a, int next) const { return transitions_(index(s, a), next); }
  auto row(int s, int a) const { return transitions_.row(index(s, a)); }
  const Matrix& transitions() const { return transitions_; }

  // Copy of this model with row (s, a) replaced.
  Mdp with_row(int s, int a, const Vector& next_state_probs) const;

  ValidationReport validate() const;

 private:
  Eigen::Index index(int s, int a) const { return static_cast<Eigen::Index>(s) * num_actions_ + a; }

  int num_states_;
  int num_actions_;
  double discount_;
  Matrix transitions_;
};

struct DeterministicPolicy {
  std::vector<int> action;

  int operator()(int s) const { return action[static_cast<std::size_t>(s)]; }
  int num_states() const { return static_cast<int>(action.size()); }
  bool operator==(const DeterministicPolicy&) const = default;
};

// Row-stochastic S x A matrix of action probabilities.
struct StochasticPolicy {
  Matrix probs;
};

void check_policy(const Mdp& m, const DeterministicPolicy& pi);
void check_reward_vector(const Mdp& m, const Vector& r);

struct PolicyMatrices {
  Matrix transition;   // P_pi
  Matrix fundamental;  // (I - gamma P_pi)^{-1}
};

Matrix policy_transition(const Mdp& m, const DeterministicPolicy& pi);
PolicyMatrices policy_matrices(const Mdp& m, const DeterministicPolicy& pi);

// V = (I - gamma P_pi)^{-1} r with r_s = r(s, pi(s)) in [0, 1].
Vector policy_value(const Mdp& m, const DeterministicPolicy& pi, const Vector& r);

// Q(s, a) = r(s, a) + gamma * P(s, a) . V_pi, where V_pi is evaluated with the
// reward restricted to pi. reward_sa is S x A.
Matrix action_value(const Mdp& m, const DeterministicPolicy& pi, const Matrix& reward_sa);

struct OptimalSolution {
  Vector value;
  DeterministicPolicy policy;
  int iterations = 0;
};

// Iterates the Bellman optimality operator until ||V - TV|| <= tol (1-g) / (2g),
// so the returned value is within tol of V*. Greedy ties go to the lowest action.
OptimalSolution value_iteration(const Mdp& m, const Matrix& reward_sa, double tol);

DeterministicPolicy policy_iteration(const Mdp& m, const Matrix& reward_sa, int* iterations = nullptr);

struct StationaryResult {
  Vector distribution;
  bool unique = true;  // false when the chain has more than one closed class
};

StationaryResult stationary_distribution(const Matrix& chain);

// Support-graph connectivity helpers used by validation and tests.
bool is_strongly_connected(const Matrix& chain);
int chain_period(const Matrix& chain);

Matrix uniform_chain(const Mdp& m);
Matrix policy_chain(const Mdp& m, const StochasticPolicy& pi);

// Chain induced by a state-action occupancy: pi(a|s) = w(s,a) / sum_b w(s,b).
// States with no mass act uniformly.
Matrix occupancy_chain(const Mdp& m, const Matrix& omega);

// Transition counts with a lazily derived estimate. Unvisited (s, a) rows
// estimate as uniform over next states. Single writer.
class EmpiricalModel {
 public:
  EmpiricalModel(int num_states, int num_actions, double discount);

  void update(int s, int a, int next);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double discount() const { return discount_; }

  std::uint64_t count(int s, int a, int next) const;
  std::uint64_t visits(int s, int a) const { return sa_visits_[index(s, a)]; }
  std::uint64_t visits(int s) const { return s_visits_[static_cast<std::size_t>(s)]; }
  std::uint64_t total() const { return total_; }

  // S x A matrix of N(s, a).
  Matrix visit_matrix() const;

  const Mdp& estimate() const;

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(num_actions_) + static_cast<std::size_t>(a);
  }

  int num_states_;
  int num_actions_;
  double discount_;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint64_t> sa_visits_;
  std::vector<std::uint64_t> s_visits_;
  std::uint64_t total_ = 0;
  mutable std::optional<Mdp> estimate_;
};

// Plain-text model format: header "S A gamma", then S*A lines of S
// probabilities, row (s, a) in s-major order.
Mdp read_mdp(std::istream& in);
void write_mdp(std::ostream& out, const Mdp& m);
Mdp load_mdp(const std::string& path);
void save_mdp(const std::string& path, const Mdp& m);

inline double span_of(const Vector& v) { return v.maxCoeff() - v.minCoeff(); }

}  // namespace mrpe
