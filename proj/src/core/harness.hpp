#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "core/agents.hpp"
#include "core/config.hpp"
#include "core/environments.hpp"
#include "core/mdp.hpp"
#include "core/rng.hpp"

namespace mrpe {

// One evaluation snapshot. reward is the index inside the policy's
// evaluation rewards, or -1 for the average over the canonical basis in
// reward-free modes.
struct EvalRecord {
  std::uint64_t seed = 0;
  std::string agent;
  std::uint64_t step = 0;
  int policy = 0;
  int reward = 0;
  double linf_error = 0.0;

  bool operator==(const EvalRecord&) const = default;
};

// Stream ids for derive_seed.
inline constexpr std::uint64_t kEnvStream = 1;
inline constexpr std::uint64_t kTargetStream = 2;
inline constexpr std::uint64_t kRewardStream = 3;
inline constexpr std::uint64_t kBootstrapStream = 4;

// Draws s' ~ P(. | s, a).
int sample_next(const Mdp& m, int s, int a, Rng& rng);

// k policies, each optimal for a one-hot reward at a distinct (s, a) drawn
// uniformly without replacement.
std::vector<DeterministicPolicy> generate_target_policies(Rng& rng, const Mdp& m, int k);

DeterministicPolicy default_target_policy(const Mdp& m, const EnvSpec& spec);

// Targets and reward sets for one seed.
Task make_task(const ExperimentConfig& cfg, const Mdp& m, std::uint64_t seed);

// V^pi on the true model, computed once per (policy, reward).
class GroundTruth {
 public:
  explicit GroundTruth(const Mdp& m) : mdp_(m) {}

  Vector value(const DeterministicPolicy& pi, const Vector& r);
  std::size_t size() const;

 private:
  Mdp mdp_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::vector<int>, std::vector<double>>, Vector> cache_;
};

// Errors of the agent's current estimate against the truth for every
// (policy, reward) of the task.
std::vector<EvalRecord> evaluate_snapshot(const Agent& agent, GroundTruth& truth, std::uint64_t seed,
                                          std::uint64_t step);

// Simulates one agent for cfg.horizon steps from state 0.
std::vector<EvalRecord> run_single(const ExperimentConfig& cfg, const Mdp& m, const AgentSpec& spec,
                                   std::uint64_t seed, GroundTruth& truth);

// Every (seed, agent) pair; sorted by (seed, agent, step, policy, reward).
std::vector<EvalRecord> run_experiment(const ExperimentConfig& cfg);

void sort_records(std::vector<EvalRecord>& records);

void write_csv(std::ostream& out, const std::vector<EvalRecord>& records);
void write_csv(const std::string& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_csv(std::istream& in);
std::vector<EvalRecord> read_csv(const std::string& path);

struct BootstrapCi {
  double low = 0.0;
  double mean = 0.0;
  double high = 0.0;
};

// Percentile bootstrap interval for the mean.
BootstrapCi bootstrap_ci(std::span<const double> values, Rng& rng, double level = 0.95, int resamples = 1000);

double median(std::vector<double> values);

// Mean error over a snapshot's records; reward-free runs use the -1 rows.
double snapshot_error(std::span<const EvalRecord> records);

struct SummaryRow {
  std::string agent;
  std::uint64_t step = 0;
  int seeds = 0;
  double median = 0.0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Per (agent, step) statistics of snapshot_error across seeds.
std::vector<SummaryRow> summarize(const std::vector<EvalRecord>& records, std::uint64_t bootstrap_seed = 0,
                                  double level = 0.95, int resamples = 1000);
void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);

struct StoppingRun {
  std::uint64_t seed = 0;
  bool stopped = false;
  std::uint64_t stop_step = 0;
  double max_error = 0.0;
  bool violated = false;
};

struct StoppingReport {
  std::vector<StoppingRun> runs;
  double violation_rate = 0.0;
  bool all_stopped = false;
  std::uint64_t max_stop_step = 0;
};

// Runs MR-NaS with its stopping rule once per seed (cfg.max_steps cap) and
// checks the estimates at the stopping time against the truth.
StoppingRun stopping_run(const ExperimentConfig& cfg, const Mdp& m, std::uint64_t seed, GroundTruth& truth);
StoppingReport stopping_check(const ExperimentConfig& cfg);

struct ComplexityRow {
  std::string param;
  double value = 0.0;
  std::string set_label;
  double u_star = 0.0;
  double u_generative = 0.0;
  double certified_gap = 0.0;
  Matrix omega;
};

// U* (and the generative optimum) for the configured environment, or for
// each entry of sweep_n / sweep_p. Targets come from the first seed.
std::vector<ComplexityRow> complexity_sweep(const ExperimentConfig& cfg);
void write_complexity_csv(std::ostream& out, const std::vector<ComplexityRow>& rows);

}  // namespace mrpe
