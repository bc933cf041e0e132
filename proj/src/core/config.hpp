#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "core/agents.hpp"
#include "core/environments.hpp"

namespace mrpe {

enum class RewardMode { kFinite, kRewardFree, kSinglePolicyRewardFree };
enum class TargetMode { kRandom, kDefault };

const char* to_string(RewardMode mode);

// Flat key=value file. Lines starting with '#' are comments; agent= may
// repeat. Example:
//   env=riverswim n=5 p=0.7
//   agent=mrnas
//   agent=noisy_uniform:eps=0.3
//   seeds=0-9
struct ExperimentConfig {
  EnvSpec env;
  int n_policies = 3;
  RewardMode reward_mode = RewardMode::kFinite;
  int reward_k = 3;
  TargetMode targets = TargetMode::kRandom;
  std::vector<AgentSpec> agents;
  std::uint64_t horizon = 50000;
  std::uint64_t eval_period = 500;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  double eps = 0.1;
  double delta = 0.1;
  std::string output = "results";
  int threads = 1;
  std::uint64_t max_steps = 5000000;
  std::vector<int> sweep_n;
  std::vector<double> sweep_p;
  std::string polytope;  // optional reward polytope file for complexity runs

  // Throws Errc::kConfig on violated invariants.
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

// "0-9", "1,4,7" or a mix such as "0-2,10".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace mrpe
