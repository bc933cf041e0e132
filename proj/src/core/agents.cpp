#include "core/agents.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <limits>
#include <sstream>

#include "core/error.hpp"

namespace mrpe {

namespace {

Eigen::RowVectorXd normalized(Eigen::RowVectorXd row) {
  const double total = row.sum();
  if (!(total > 0.0) || !std::isfinite(total)) return Eigen::RowVectorXd::Constant(row.size(), 1.0 / row.size());
  return row / total;
}

Eigen::RowVectorXd softmax(const Eigen::RowVectorXd& x) {
  const double top = x.maxCoeff();
  return normalized((x.array() - top).exp().matrix());
}

Eigen::RowVectorXd uniform_row(int n) { return Eigen::RowVectorXd::Constant(n, 1.0 / n); }

double param(const AgentSpec& spec, const std::string& key, double fallback) {
  const auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

}  // namespace

void check_task(const Task& task) {
  if (task.num_states < 1 || task.num_actions < 1) throw Error(Errc::kInvalidArgument, "task needs states and actions");
  if (!(task.gamma > 0.0 && task.gamma < 1.0)) throw Error(Errc::kDiscountOutOfRange, "discount must lie in (0, 1)");
  if (task.policies.empty()) throw Error(Errc::kInvalidArgument, "task needs at least one target policy");
  if (task.policies.size() != task.reward_sets.size())
    throw Error(Errc::kShapeMismatch, "need one reward set per target policy");
  for (const DeterministicPolicy& pi : task.policies) {
    if (pi.num_states() != task.num_states) throw Error(Errc::kShapeMismatch, "policy has wrong length");
    for (int a : pi.action)
      if (a < 0 || a >= task.num_actions) throw Error(Errc::kIndexOutOfRange, "policy action out of range");
  }
  for (const RewardSet& set : task.reward_sets)
    if (set.dimension() != task.num_states) throw Error(Errc::kShapeMismatch, "reward set has wrong dimension");
}

Agent::Agent(const Task& task) : task_(task), model_(task.num_states, task.num_actions, task.gamma) {
  check_task(task_);
}

int Agent::act(int s, Rng& rng) {
  const Eigen::RowVectorXd row = behavior(s);
  return rng.categorical(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
}

void Agent::observe(int s, int a, int next) { model_.update(s, a, next); }

double stopping_threshold(const Matrix& visits, double delta, int num_states) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::kInvalidArgument, "delta must lie in (0, 1)");
  double total = std::log(1.0 / delta);
  if (num_states <= 1) return total;
  const double k = num_states - 1.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < visits.size(); ++i) sum += 1.0 + std::log1p(visits.data()[i] / k);
  return total + k * sum;
}

bool should_stop(const EmpiricalModel& model, const ComplexityMatrix& cmatrix,
                 std::span<const DeterministicPolicy> policies, double eps, double delta) {
  const double t = static_cast<double>(model.total());
  if (t < 1.0) return false;
  const Matrix visits = model.visit_matrix();
  const double u = evaluate_u(visits / t, cmatrix, policies, model.discount(), 0.5 * eps);
  if (!std::isfinite(u)) return false;
  return t >= u * stopping_threshold(visits, delta, model.num_states());
}

Eigen::RowVectorXd forcing_policy(const EmpiricalModel& model, int s, double beta) {
  const int A = model.num_actions();
  const double n_s = static_cast<double>(model.visits(s));
  if (n_s <= 0.0 || beta == 0.0) return uniform_row(A);
  Eigen::RowVectorXd counts(A);
  for (int a = 0; a < A; ++a) counts[a] = static_cast<double>(model.visits(s, a));
  const double spread = counts.maxCoeff() - counts.minCoeff();
  const double beta_t = beta * std::log(n_s) / std::max(1.0, spread);
  return softmax(-beta_t * counts);
}

MrNasAgent::MrNasAgent(const Task& task, const MrNasConfig& config) : Agent(task), config_(config) {
  if (!(config_.eps > 0.0 && config_.eps < 1.0 / (2.0 * (1.0 - task.gamma))))
    throw Error(Errc::kInvalidArgument, "eps must lie in (0, 1 / (2 (1 - gamma)))");
  if (!(config_.delta > 0.0 && config_.delta < 0.5)) throw Error(Errc::kInvalidArgument, "delta must lie in (0, 1/2)");
  if (config_.recompute_period < 1) throw Error(Errc::kInvalidArgument, "recompute period must be positive");
  if (!(config_.alpha >= 0.0) || !(config_.beta >= 0.0)) throw Error(Errc::kInvalidArgument, "alpha, beta must be >= 0");
}

ComplexityMatrix MrNasAgent::exact_complexity() const {
  return complexity_matrix(model_.estimate(), task_.policies, task_.reward_sets);
}

void MrNasAgent::recompute() {
  cached_complexity_ = exact_complexity();
  allocation_ = solve_allocation(model_.estimate(), cached_complexity_, task_.policies, 0.5 * config_.eps,
                                 config_.allocation);
  computed_at_ = model_.total();
}

const AllocationResult& MrNasAgent::allocation() {
  if (!allocation_ || model_.total() >= computed_at_ + static_cast<std::uint64_t>(config_.recompute_period))
    recompute();
  return *allocation_;
}

Eigen::RowVectorXd MrNasAgent::behavior(int s) {
  const Matrix& omega = allocation().omega.omega;
  const Eigen::RowVectorXd target = normalized(omega.row(s));
  const double n_s = static_cast<double>(model_.visits(s));
  const double mix = 1.0 / std::pow(std::max(1.0, n_s), config_.alpha);
  return normalized((1.0 - mix) * target + mix * forcing_policy(model_, s, config_.beta));
}

bool MrNasAgent::should_stop() {
  if (!allocation_) recompute();
  if (!mrpe::should_stop(model_, cached_complexity_, task_.policies, config_.eps, config_.delta)) return false;
  // The cached coefficients come from an older estimate; confirm on M_t.
  cached_complexity_ = exact_complexity();
  return mrpe::should_stop(model_, cached_complexity_, task_.policies, config_.eps, config_.delta);
}

NoisyPolicyAgent::NoisyPolicyAgent(const Task& task, Mode mode, double eps) : Agent(task), mode_(mode), eps_(eps) {
  if (!(eps_ >= 0.0 && eps_ <= 1.0)) throw Error(Errc::kInvalidArgument, "mixing factor must lie in [0, 1]");
  mixture_ = Matrix::Zero(task.num_states, task.num_actions);
  for (const DeterministicPolicy& pi : task.policies)
    for (int s = 0; s < task.num_states; ++s) mixture_(s, pi(s)) += 1.0;
  mixture_ /= static_cast<double>(task.policies.size());
}

Eigen::RowVectorXd NoisyPolicyAgent::behavior(int s) {
  double mix = eps_;
  if (mode_ == Mode::kVisitation) mix = 1.0 / std::max<double>(1.0, static_cast<double>(model_.visits(s)));
  return normalized((1.0 - mix) * mixture_.row(s) + mix * uniform_row(task_.num_actions));
}

SfNrAgent::SfNrAgent(const Task& task, const SfNrConfig& config)
    : Agent(task),
      config_(config),
      psi_(task.policies.size(), Matrix::Ones(task.num_states, task.num_actions)),
      beta_values_(Matrix::Constant(task.num_states, task.num_actions, 1.0 / task.num_actions)) {
  if (!(config_.temperature > 0.0)) throw Error(Errc::kInvalidArgument, "temperature must be positive");
  if (!(config_.psi_discount >= 0.0 && config_.psi_discount < 1.0))
    throw Error(Errc::kInvalidArgument, "successor discount must lie in [0, 1)");
}

Eigen::RowVectorXd SfNrAgent::behavior(int s) {
  const double mix = 1.0 / std::max<double>(1.0, static_cast<double>(model_.visits(s)));
  const Eigen::RowVectorXd soft = softmax(beta_values_.row(s) / config_.temperature);
  return normalized((1.0 - mix) * soft + mix * uniform_row(task_.num_actions));
}

void SfNrAgent::observe(int s, int a, int next) {
  Agent::observe(s, a, next);
  const double step = 1.0 / static_cast<double>(model_.visits(s, a));
  double change = 0.0;
  for (std::size_t i = 0; i < psi_.size(); ++i) {
    Matrix& psi = psi_[i];
    const double td = 1.0 + config_.psi_discount * psi(next, task_.policies[i](next)) - psi(s, a);
    psi(s, a) += step * td;
    change += std::abs(step * td);
  }
  last_change_ = change / static_cast<double>(psi_.size());
  const double target = last_change_ + task_.gamma * beta_values_.row(next).maxCoeff();
  beta_values_(s, a) += step * (target - beta_values_(s, a));
}

Matrix return_variance(const Mdp& m, const DeterministicPolicy& pi, const Vector& r) {
  const int S = m.num_states(), A = m.num_actions();
  const double g2 = m.discount() * m.discount();
  const Vector v = policy_value(m, pi, r);
  const Vector v_sq = v.array().square();
  auto spread = [&](int s, int a) {
    const double mean = m.row(s, a).dot(v);
    return std::max(0.0, m.row(s, a).dot(v_sq) - mean * mean);
  };
  const Matrix p_pi = policy_transition(m, pi);
  Vector local(S);
  for (int s = 0; s < S; ++s) local[s] = g2 * spread(s, pi(s));
  const Vector on_policy = (Matrix::Identity(S, S) - g2 * p_pi).partialPivLu().solve(local);
  Matrix out(S, A);
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) out(s, a) = std::max(0.0, g2 * spread(s, a) + g2 * m.row(s, a).dot(on_policy));
  return out;
}

GvfExplorerAgent::GvfExplorerAgent(const Task& task, const GvfConfig& config)
    : Agent(task), config_(config), variances_(task.policies.size(), Matrix::Ones(task.num_states, task.num_actions)) {
  if (!(config_.eps >= 0.0 && config_.eps <= 1.0)) throw Error(Errc::kInvalidArgument, "mixing factor must lie in [0, 1]");
  if (config_.recompute_period < 1) throw Error(Errc::kInvalidArgument, "recompute period must be positive");
}

void GvfExplorerAgent::recompute() {
  const Mdp& m = model_.estimate();
  for (std::size_t i = 0; i < task_.policies.size(); ++i) {
    Matrix total = Matrix::Zero(task_.num_states, task_.num_actions);
    for (const Vector& r : task_.reward_sets[i].evaluation_rewards()) total += return_variance(m, task_.policies[i], r);
    variances_[i] = total;
  }
  computed_at_ = model_.total();
}

Eigen::RowVectorXd GvfExplorerAgent::weighted_policy(int s) const {
  Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(task_.num_actions);
  for (std::size_t i = 0; i < task_.policies.size(); ++i) {
    const int a = task_.policies[i](s);
    w[a] += variances_[i](s, a);
  }
  return normalized(w.cwiseSqrt());
}

Eigen::RowVectorXd GvfExplorerAgent::behavior(int s) {
  // Variances start at one and are re-estimated on M_t every period.
  if (model_.total() >= computed_at_ + static_cast<std::uint64_t>(config_.recompute_period)) recompute();
  return normalized((1.0 - config_.eps) * weighted_policy(s) + config_.eps * uniform_row(task_.num_actions));
}

AgentSpec parse_agent_spec(const std::string& text) {
  AgentSpec spec;
  const auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (spec.name.empty()) throw Error(Errc::kConfig, "agent name missing");
  if (colon == std::string::npos) return spec;
  std::istringstream in(text.substr(colon + 1));
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(Errc::kConfig, "agent parameter needs key=value: " + item);
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    double v = 0.0;
    const char* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end) throw Error(Errc::kConfig, "bad agent parameter value: " + item);
    spec.params[key] = v;
  }
  return spec;
}

std::string describe(const AgentSpec& spec) {
  std::ostringstream out;
  out << spec.name;
  char sep = ':';
  for (const auto& [k, v] : spec.params) {
    out << sep << k << '=' << v;
    sep = ',';
  }
  return out.str();
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const Task& task, double eps, double delta) {
  auto known = [&](std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : spec.params) {
      bool ok = false;
      for (const char* key : keys) ok = ok || k == key;
      if (!ok) throw Error(Errc::kConfig, "unknown parameter '" + k + "' for agent " + spec.name);
    }
  };
  if (spec.name == "mrnas") {
    known({"alpha", "beta", "period", "eps", "delta"});
    MrNasConfig cfg;
    cfg.eps = param(spec, "eps", eps);
    cfg.delta = param(spec, "delta", delta);
    cfg.alpha = param(spec, "alpha", cfg.alpha);
    cfg.beta = param(spec, "beta", cfg.beta);
    cfg.recompute_period = static_cast<int>(param(spec, "period", cfg.recompute_period));
    return std::make_unique<MrNasAgent>(task, cfg);
  }
  if (spec.name == "noisy_uniform") {
    known({"eps"});
    return std::make_unique<NoisyPolicyAgent>(task, NoisyPolicyAgent::Mode::kUniform, param(spec, "eps", 0.3));
  }
  if (spec.name == "noisy_visitation") {
    known({});
    return std::make_unique<NoisyPolicyAgent>(task, NoisyPolicyAgent::Mode::kVisitation);
  }
  if (spec.name == "sfnr") {
    known({"temperature", "psi_discount"});
    SfNrConfig cfg;
    cfg.temperature = param(spec, "temperature", cfg.temperature);
    cfg.psi_discount = param(spec, "psi_discount", cfg.psi_discount);
    return std::make_unique<SfNrAgent>(task, cfg);
  }
  if (spec.name == "gvf") {
    known({"eps", "period"});
    GvfConfig cfg;
    cfg.eps = param(spec, "eps", cfg.eps);
    cfg.recompute_period = static_cast<int>(param(spec, "period", cfg.recompute_period));
    return std::make_unique<GvfExplorerAgent>(task, cfg);
  }
  throw Error(Errc::kConfig, "unknown agent: " + spec.name);
}

}  // namespace mrpe
