#include "core/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "core/allocation.hpp"
#include "core/error.hpp"

namespace mrpe {

namespace {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string agent_label(const AgentSpec& spec) {
  std::string label = describe(spec);
  std::replace(label.begin(), label.end(), ',', ';');
  return label;
}

Matrix one_hot(int S, int A, int s, int a) {
  Matrix r = Matrix::Zero(S, A);
  r(s, a) = 1.0;
  return r;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

AgentSpec mrnas_spec(const ExperimentConfig& cfg) {
  for (const AgentSpec& spec : cfg.agents)
    if (spec.name == "mrnas") return spec;
  return AgentSpec{"mrnas", {}};
}

}  // namespace

int sample_next(const Mdp& m, int s, int a, Rng& rng) {
  // Copy first: a row of the column-major transition matrix is strided.
  const Eigen::RowVectorXd row = m.row(s, a);
  return rng.categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
}

std::vector<DeterministicPolicy> generate_target_policies(Rng& rng, const Mdp& m, int k) {
  const int S = m.num_states(), A = m.num_actions();
  if (k < 1 || k > S * A) throw Error(Errc::kInvalidArgument, "need 1 <= k <= S * A target policies");
  std::vector<int> pairs(static_cast<std::size_t>(S * A));
  std::iota(pairs.begin(), pairs.end(), 0);
  std::vector<DeterministicPolicy> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(S * A - i));
    std::swap(pairs[static_cast<std::size_t>(i)], pairs[j]);
    const int pick = pairs[static_cast<std::size_t>(i)];
    out.push_back(policy_iteration(m, one_hot(S, A, pick / A, pick % A)));
  }
  return out;
}

DeterministicPolicy default_target_policy(const Mdp& m, const EnvSpec& spec) {
  const auto [s, a] = default_target(spec);
  return policy_iteration(m, one_hot(m.num_states(), m.num_actions(), s, a));
}

Task make_task(const ExperimentConfig& cfg, const Mdp& m, std::uint64_t seed) {
  Task task;
  task.num_states = m.num_states();
  task.num_actions = m.num_actions();
  task.gamma = m.discount();
  if (cfg.reward_mode == RewardMode::kSinglePolicyRewardFree || cfg.targets == TargetMode::kDefault) {
    task.policies.push_back(default_target_policy(m, cfg.env));
  } else {
    Rng rng(derive_seed(seed, kTargetStream));
    task.policies = generate_target_policies(rng, m, cfg.n_policies);
  }
  Rng reward_rng(derive_seed(seed, kRewardStream));
  for (std::size_t i = 0; i < task.policies.size(); ++i) {
    if (cfg.reward_mode == RewardMode::kFinite)
      task.reward_sets.push_back(sample_finite_rewards(reward_rng, m.num_states(), cfg.reward_k));
    else
      task.reward_sets.push_back(RewardSet::box(m.num_states()));
  }
  return task;
}

Vector GroundTruth::value(const DeterministicPolicy& pi, const Vector& r) {
  auto key = std::make_pair(pi.action, std::vector<double>(r.data(), r.data() + r.size()));
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  Vector v = policy_value(mdp_, pi, r);
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.emplace(std::move(key), std::move(v)).first->second;
}

std::size_t GroundTruth::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

std::vector<EvalRecord> evaluate_snapshot(const Agent& agent, GroundTruth& truth, std::uint64_t seed,
                                          std::uint64_t step) {
  const Task& task = agent.task();
  const Mdp& estimate = agent.model().estimate();
  const int S = task.num_states;
  std::vector<EvalRecord> out;
  for (std::size_t i = 0; i < task.policies.size(); ++i) {
    const DeterministicPolicy& pi = task.policies[i];
    const Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(S, S) - task.gamma * policy_transition(estimate, pi));
    const std::vector<Vector> rewards = task.reward_sets[i].evaluation_rewards();
    double total = 0.0;
    for (std::size_t j = 0; j < rewards.size(); ++j) {
      const Vector estimate_v = lu.solve(rewards[j]);
      const double err = (estimate_v - truth.value(pi, rewards[j])).lpNorm<Eigen::Infinity>();
      total += err;
      out.push_back({seed, agent.name(), step, static_cast<int>(i), static_cast<int>(j), err});
    }
    if (task.reward_sets[i].kind() != RewardSet::Kind::kFinite)
      out.push_back({seed, agent.name(), step, static_cast<int>(i), -1, total / static_cast<double>(rewards.size())});
  }
  return out;
}

std::vector<EvalRecord> run_single(const ExperimentConfig& cfg, const Mdp& m, const AgentSpec& spec,
                                   std::uint64_t seed, GroundTruth& truth) {
  const Task task = make_task(cfg, m, seed);
  const std::unique_ptr<Agent> agent = make_agent(spec, task, cfg.eps, cfg.delta);
  const std::string label = agent_label(spec);
  Rng env_rng(derive_seed(seed, kEnvStream));
  Rng agent_rng(derive_seed(seed, fnv1a(label)));
  std::vector<EvalRecord> records;
  int s = 0;
  for (std::uint64_t t = 1; t <= cfg.horizon; ++t) {
    const int a = agent->act(s, agent_rng);
    const int next = sample_next(m, s, a, env_rng);
    agent->observe(s, a, next);
    s = next;
    if (t % cfg.eval_period == 0) {
      for (EvalRecord& rec : evaluate_snapshot(*agent, truth, seed, t)) {
        rec.agent = label;
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

std::vector<EvalRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.agents.empty()) throw Error(Errc::kConfig, "config lists no agents");
  const Mdp m = make_env(cfg.env);
  GroundTruth truth(m);
  std::vector<std::pair<std::uint64_t, const AgentSpec*>> jobs;
  for (std::uint64_t seed : cfg.seeds)
    for (const AgentSpec& spec : cfg.agents) jobs.emplace_back(seed, &spec);
  // Fail fast on bad agent parameters before spawning work.
  for (const AgentSpec& spec : cfg.agents) make_agent(spec, make_task(cfg, m, cfg.seeds.front()), cfg.eps, cfg.delta);

  std::vector<std::vector<EvalRecord>> results(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        results[k] = run_single(cfg, m, *jobs[k].second, jobs[k].first, truth);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<EvalRecord> all;
  for (auto& part : results) all.insert(all.end(), part.begin(), part.end());
  sort_records(all);
  return all;
}

void sort_records(std::vector<EvalRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const EvalRecord& x, const EvalRecord& y) {
    return std::tie(x.seed, x.agent, x.step, x.policy, x.reward) < std::tie(y.seed, y.agent, y.step, y.policy, y.reward);
  });
}

void write_csv(std::ostream& out, const std::vector<EvalRecord>& records) {
  out << "seed,agent,step,policy,reward,linf_error\n";
  for (const EvalRecord& r : records) {
    if (r.agent.find_first_of(",\"\n") != std::string::npos)
      throw Error(Errc::kInvalidArgument, "agent label not CSV-safe: " + r.agent);
    out << r.seed << ',' << r.agent << ',' << r.step << ',' << r.policy << ',' << r.reward << ','
        << format_double(r.linf_error) << '\n';
  }
}

void write_csv(const std::string& path, const std::vector<EvalRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIo, "cannot write " + path);
  write_csv(out, records);
  if (!out) throw Error(Errc::kIo, "write failed for " + path);
}

std::vector<EvalRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "seed,agent,step,policy,reward,linf_error")
    throw Error(Errc::kParse, "missing or unexpected CSV header");
  std::vector<EvalRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw Error(Errc::kParse, "bad CSV row: " + line);
    try {
      EvalRecord rec;
      rec.seed = std::stoull(cells[0]);
      rec.agent = cells[1];
      rec.step = std::stoull(cells[2]);
      rec.policy = std::stoi(cells[3]);
      rec.reward = std::stoi(cells[4]);
      rec.linf_error = std::stod(cells[5]);
      out.push_back(std::move(rec));
    } catch (const std::logic_error&) {
      throw Error(Errc::kParse, "bad CSV row: " + line);
    }
  }
  return out;
}

std::vector<EvalRecord> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  return read_csv(in);
}

BootstrapCi bootstrap_ci(std::span<const double> values, Rng& rng, double level, int resamples) {
  if (values.empty()) throw Error(Errc::kEmptySample, "bootstrap needs a non-empty sample");
  if (!(level > 0.0 && level < 1.0) || resamples < 1) throw Error(Errc::kInvalidArgument, "bad bootstrap settings");
  const std::size_t n = values.size();
  BootstrapCi ci;
  ci.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (double& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += values[rng.below(n)];
    m = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  const double tail = 0.5 * (1.0 - level);
  ci.low = std::min(quantile(tail), ci.mean);
  ci.high = std::max(quantile(1.0 - tail), ci.mean);
  return ci;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(Errc::kEmptySample, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double snapshot_error(std::span<const EvalRecord> records) {
  if (records.empty()) throw Error(Errc::kEmptySample, "empty snapshot");
  const bool averaged =
      std::any_of(records.begin(), records.end(), [](const EvalRecord& r) { return r.reward == -1; });
  double sum = 0.0;
  int count = 0;
  for (const EvalRecord& r : records) {
    if (averaged && r.reward != -1) continue;
    sum += r.linf_error;
    ++count;
  }
  return sum / count;
}

std::vector<SummaryRow> summarize(const std::vector<EvalRecord>& records, std::uint64_t bootstrap_seed, double level,
                                  int resamples) {
  std::map<std::tuple<std::string, std::uint64_t, std::uint64_t>, std::vector<EvalRecord>> snapshots;
  for (const EvalRecord& r : records) snapshots[{r.agent, r.step, r.seed}].push_back(r);
  std::map<std::pair<std::string, std::uint64_t>, std::vector<double>> per_step;
  for (const auto& [key, recs] : snapshots)
    per_step[{std::get<0>(key), std::get<1>(key)}].push_back(snapshot_error(recs));
  std::vector<SummaryRow> out;
  std::uint64_t group = 0;
  for (const auto& [key, errors] : per_step) {
    Rng rng(derive_seed(bootstrap_seed, kBootstrapStream + 1000 * ++group));
    const BootstrapCi ci = bootstrap_ci(errors, rng, level, resamples);
    out.push_back({key.first, key.second, static_cast<int>(errors.size()), median(errors), ci.mean, ci.low, ci.high});
  }
  return out;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIo, "cannot write " + path);
  out << "agent,step,seeds,median,mean,ci_low,ci_high\n";
  for (const SummaryRow& r : rows)
    out << r.agent << ',' << r.step << ',' << r.seeds << ',' << format_double(r.median) << ','
        << format_double(r.mean) << ',' << format_double(r.ci_low) << ',' << format_double(r.ci_high) << '\n';
  if (!out) throw Error(Errc::kIo, "write failed for " + path);
}

StoppingRun stopping_run(const ExperimentConfig& cfg, const Mdp& m, std::uint64_t seed, GroundTruth& truth) {
  const Task task = make_task(cfg, m, seed);
  const AgentSpec spec = mrnas_spec(cfg);
  std::unique_ptr<Agent> base = make_agent(spec, task, cfg.eps, cfg.delta);
  auto& agent = dynamic_cast<MrNasAgent&>(*base);
  Rng env_rng(derive_seed(seed, kEnvStream));
  Rng agent_rng(derive_seed(seed, fnv1a(agent_label(spec))));
  StoppingRun run;
  run.seed = seed;
  int s = 0;
  while (true) {
    if (agent.should_stop()) {
      run.stopped = true;
      break;
    }
    if (agent.model().total() >= cfg.max_steps) break;
    const int a = agent.act(s, agent_rng);
    const int next = sample_next(m, s, a, env_rng);
    agent.observe(s, a, next);
    s = next;
  }
  run.stop_step = agent.model().total();
  for (const EvalRecord& rec : evaluate_snapshot(agent, truth, seed, run.stop_step))
    if (rec.reward >= 0) run.max_error = std::max(run.max_error, rec.linf_error);
  run.violated = run.max_error > agent.config().eps;
  return run;
}

StoppingReport stopping_check(const ExperimentConfig& cfg) {
  cfg.validate();
  const Mdp m = make_env(cfg.env);
  GroundTruth truth(m);
  StoppingReport report;
  report.runs.resize(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < cfg.seeds.size(); k = next++) {
      try {
        report.runs[k] = stopping_run(cfg, m, cfg.seeds[k], truth);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(cfg.seeds.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  int violations = 0;
  report.all_stopped = true;
  for (const StoppingRun& run : report.runs) {
    violations += run.violated ? 1 : 0;
    report.all_stopped = report.all_stopped && run.stopped;
    report.max_stop_step = std::max(report.max_stop_step, run.stop_step);
  }
  report.violation_rate = static_cast<double>(violations) / static_cast<double>(report.runs.size());
  return report;
}

std::vector<ComplexityRow> complexity_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, EnvSpec>> points;
  if (cfg.sweep_n.empty() && cfg.sweep_p.empty()) points.emplace_back("base", cfg.env);
  for (int n : cfg.sweep_n) {
    EnvSpec spec = cfg.env;
    spec.n = n;
    points.emplace_back("n", spec);
  }
  for (double p : cfg.sweep_p) {
    EnvSpec spec = cfg.env;
    (spec.kind == EnvKind::kNArms ? spec.p0 : spec.p) = p;
    points.emplace_back(spec.kind == EnvKind::kNArms ? "p0" : "p", spec);
  }
  std::vector<ComplexityRow> rows;
  for (const auto& [param, spec] : points) {
    const Mdp m = make_env(spec);
    ExperimentConfig point = cfg;
    point.env = spec;  // default targets depend on the swept size
    Task task = make_task(point, m, cfg.seeds.front());
    std::vector<std::pair<std::string, std::vector<RewardSet>>> variants;
    variants.emplace_back(task.reward_sets.front().label(), task.reward_sets);
    if (!cfg.polytope.empty()) {
      const RewardSet poly = load_polytope(cfg.polytope);
      if (poly.dimension() != m.num_states())
        throw Error(Errc::kShapeMismatch, "polytope dimension does not match the environment");
      variants.emplace_back("polytope", std::vector<RewardSet>(task.policies.size(), poly));
    }
    for (const auto& [label, sets] : variants) {
      const ComplexityMatrix cm = complexity_matrix(m, task.policies, sets);
      AllocationOptions opts;
      const AllocationResult best = solve_allocation(m, cm, task.policies, cfg.eps, opts);
      ComplexityRow row;
      row.param = param;
      row.value = param == "n" ? spec.n : param == "p" ? spec.p : param == "p0" ? spec.p0 : 0.0;
      row.set_label = label;
      row.u_star = best.u_value;
      row.certified_gap = best.certified_gap;
      row.omega = best.omega.omega;
      row.u_generative =
          cm.entries.maxCoeff() > 0.0
              ? generative_allocation(cm, task.policies, m.num_actions(), m.discount(), cfg.eps).u_value
              : 0.0;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_complexity_csv(std::ostream& out, const std::vector<ComplexityRow>& rows) {
  out << "param,value,set_label,u_star,u_generative,certified_gap\n";
  for (const ComplexityRow& r : rows)
    out << r.param << ',' << format_double(r.value) << ',' << r.set_label << ',' << format_double(r.u_star) << ','
        << format_double(r.u_generative) << ',' << format_double(r.certified_gap) << '\n';
}

}  // namespace mrpe
