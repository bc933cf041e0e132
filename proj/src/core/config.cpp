#include "core/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "core/error.hpp"

namespace mrpe {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T out{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || ptr != end) throw Error(Errc::kConfig, "bad value for " + key + ": '" + text + "'");
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<T>(key, item));
  }
  return out;
}

}  // namespace

const char* to_string(RewardMode mode) {
  switch (mode) {
    case RewardMode::kFinite:
      return "finite";
    case RewardMode::kRewardFree:
      return "reward_free";
    case RewardMode::kSinglePolicyRewardFree:
      return "single_policy_reward_free";
  }
  return "unknown";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_number<std::uint64_t>("seeds", item));
      continue;
    }
    const auto lo = parse_number<std::uint64_t>("seeds", trim(item.substr(0, dash)));
    const auto hi = parse_number<std::uint64_t>("seeds", trim(item.substr(dash + 1)));
    if (hi < lo) throw Error(Errc::kConfig, "empty seed range: " + item);
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  return out;
}

void ExperimentConfig::validate() const {
  if (!(env.gamma > 0.0 && env.gamma < 1.0)) throw Error(Errc::kConfig, "gamma must lie in (0, 1)");
  if (!(eps > 0.0 && eps < 1.0 / (2.0 * (1.0 - env.gamma))))
    throw Error(Errc::kConfig, "eps must lie in (0, 1 / (2 (1 - gamma)))");
  if (!(delta > 0.0 && delta < 0.5)) throw Error(Errc::kConfig, "delta must lie in (0, 1/2)");
  if (eval_period < 1 || horizon < eval_period) throw Error(Errc::kConfig, "need horizon >= eval_period >= 1");
  if (seeds.empty()) throw Error(Errc::kConfig, "no seeds");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw Error(Errc::kConfig, "seeds must be distinct");
  if (n_policies < 1) throw Error(Errc::kConfig, "n_policies must be positive");
  if (reward_k < 1) throw Error(Errc::kConfig, "reward_k must be positive");
  if (threads < 1) throw Error(Errc::kConfig, "threads must be positive");
  if (max_steps < 1) throw Error(Errc::kConfig, "max_steps must be positive");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::optional<double> gamma;
  bool env_seen = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::kConfig, "line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "env") {
      cfg.env = parse_env(value);
      env_seen = true;
    } else if (key == "agent") {
      cfg.agents.push_back(parse_agent_spec(value));
    } else if (key == "gamma") {
      gamma = parse_number<double>(key, value);
    } else if (key == "eps") {
      cfg.eps = parse_number<double>(key, value);
    } else if (key == "delta") {
      cfg.delta = parse_number<double>(key, value);
    } else if (key == "horizon") {
      cfg.horizon = parse_number<std::uint64_t>(key, value);
    } else if (key == "eval_period") {
      cfg.eval_period = parse_number<std::uint64_t>(key, value);
    } else if (key == "seeds") {
      cfg.seeds = parse_seed_list(value);
    } else if (key == "n_policies") {
      cfg.n_policies = parse_number<int>(key, value);
    } else if (key == "reward_mode") {
      if (value == "finite")
        cfg.reward_mode = RewardMode::kFinite;
      else if (value == "reward_free")
        cfg.reward_mode = RewardMode::kRewardFree;
      else if (value == "single_policy_reward_free")
        cfg.reward_mode = RewardMode::kSinglePolicyRewardFree;
      else
        throw Error(Errc::kConfig, "unknown reward_mode: " + value);
    } else if (key == "reward_k") {
      cfg.reward_k = parse_number<int>(key, value);
    } else if (key == "targets") {
      if (value == "random")
        cfg.targets = TargetMode::kRandom;
      else if (value == "default")
        cfg.targets = TargetMode::kDefault;
      else
        throw Error(Errc::kConfig, "targets must be random or default");
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "threads") {
      cfg.threads = parse_number<int>(key, value);
    } else if (key == "max_steps") {
      cfg.max_steps = parse_number<std::uint64_t>(key, value);
    } else if (key == "sweep_n") {
      cfg.sweep_n = parse_list<int>(key, value);
    } else if (key == "sweep_p") {
      cfg.sweep_p = parse_list<double>(key, value);
    } else if (key == "polytope") {
      cfg.polytope = value;
    } else {
      throw Error(Errc::kConfig, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!env_seen) throw Error(Errc::kConfig, "config has no env= line");
  if (gamma) cfg.env.gamma = *gamma;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  ExperimentConfig cfg = parse_config(in);
  // Polytope files are looked up next to the config.
  if (!cfg.polytope.empty() && std::filesystem::path(cfg.polytope).is_relative())
    cfg.polytope = (std::filesystem::path(path).parent_path() / cfg.polytope).string();
  return cfg;
}

}  // namespace mrpe
