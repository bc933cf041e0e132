#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/allocation.hpp"
#include "core/mdp.hpp"
#include "core/reward_sets.hpp"
#include "core/rng.hpp"

namespace mrpe {

// What every agent is asked to evaluate: target policies, each with its own
// reward set, in an MDP with known discount.
struct Task {
  int num_states = 0;
  int num_actions = 0;
  double gamma = 0.9;
  std::vector<DeterministicPolicy> policies;
  std::vector<RewardSet> reward_sets;
};

void check_task(const Task& task);

class Agent {
 public:
  explicit Agent(const Task& task);
  virtual ~Agent() = default;

  virtual std::string name() const = 0;

  // Action distribution the agent would sample from at s right now.
  virtual Eigen::RowVectorXd behavior(int s) = 0;

  int act(int s, Rng& rng);

  // Records the transition; subclasses extend the bookkeeping.
  virtual void observe(int s, int a, int next);

  const EmpiricalModel& model() const { return model_; }
  const Task& task() const { return task_; }

 protected:
  Task task_;
  EmpiricalModel model_;
};

// log(1/delta) + (S-1) sum_{s,a} log(e (1 + N(s,a)/(S-1))).
double stopping_threshold(const Matrix& visits, double delta, int num_states);

// t >= U_{eps/2}(N_t / t; M_t) * threshold, with the complexity matrix
// supplied by the caller. False while some required entry is unvisited.
bool should_stop(const EmpiricalModel& model, const ComplexityMatrix& cmatrix,
                 std::span<const DeterministicPolicy> policies, double eps, double delta);

struct MrNasConfig {
  double eps = 0.1;
  double delta = 0.1;
  int recompute_period = 500;
  double alpha = 0.99;
  double beta = 0.01;
  AllocationOptions allocation{1e-6, 1e-9, false, nullptr};
};

// pi_f(.|s) = softmax(-beta_t(s) N(s, .)).
Eigen::RowVectorXd forcing_policy(const EmpiricalModel& model, int s, double beta);

class MrNasAgent : public Agent {
 public:
  MrNasAgent(const Task& task, const MrNasConfig& config);

  std::string name() const override { return "mrnas"; }
  Eigen::RowVectorXd behavior(int s) override;

  // Stopping rule at the current step count.
  bool should_stop();

  const AllocationResult& allocation();
  const MrNasConfig& config() const { return config_; }

 private:
  void recompute();
  ComplexityMatrix exact_complexity() const;

  MrNasConfig config_;
  std::optional<AllocationResult> allocation_;
  ComplexityMatrix cached_complexity_;
  std::uint64_t computed_at_ = 0;
};

class NoisyPolicyAgent : public Agent {
 public:
  enum class Mode { kUniform, kVisitation };
  NoisyPolicyAgent(const Task& task, Mode mode, double eps = 0.3);

  std::string name() const override { return mode_ == Mode::kUniform ? "noisy_uniform" : "noisy_visitation"; }
  Eigen::RowVectorXd behavior(int s) override;

 private:
  Mode mode_;
  double eps_;
  Matrix mixture_;  // fraction of targets playing a in s
};

struct SfNrConfig {
  double temperature = 2.0;
  double psi_discount = 0.99;
};

class SfNrAgent : public Agent {
 public:
  SfNrAgent(const Task& task, const SfNrConfig& config);

  std::string name() const override { return "sfnr"; }
  Eigen::RowVectorXd behavior(int s) override;
  void observe(int s, int a, int next) override;

  const Matrix& psi(std::size_t policy) const { return psi_[policy]; }
  const Matrix& behavior_values() const { return beta_values_; }
  double last_psi_change() const { return last_change_; }

 private:
  SfNrConfig config_;
  std::vector<Matrix> psi_;
  Matrix beta_values_;
  double last_change_ = 0.0;
};

// Lambda(s, a): variance of the discounted return from (s, a) following pi,
// for a deterministic state reward r.
Matrix return_variance(const Mdp& m, const DeterministicPolicy& pi, const Vector& r);

struct GvfConfig {
  double eps = 0.3;
  int recompute_period = 500;
};

class GvfExplorerAgent : public Agent {
 public:
  GvfExplorerAgent(const Task& task, const GvfConfig& config);

  std::string name() const override { return "gvf"; }
  Eigen::RowVectorXd behavior(int s) override;

  // sqrt-variance weighted policy before mixing; uniform where all weights vanish.
  Eigen::RowVectorXd weighted_policy(int s) const;
  const std::vector<Matrix>& variances() const { return variances_; }

 private:
  void recompute();

  GvfConfig config_;
  std::vector<Matrix> variances_;  // per policy, summed over its rewards
  std::uint64_t computed_at_ = 0;
};

// Agent name plus numeric hyperparameters, e.g. "mrnas:alpha=0.99,beta=0.01".
struct AgentSpec {
  std::string name;
  std::map<std::string, double> params;
};

AgentSpec parse_agent_spec(const std::string& text);
std::string describe(const AgentSpec& spec);

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const Task& task, double eps, double delta);

}  // namespace mrpe
