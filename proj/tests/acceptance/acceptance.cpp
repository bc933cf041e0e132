// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "core/allocation.hpp"
#include "core/deviation.hpp"
#include "core/harness.hpp"
#include "core/reward_sets.hpp"
#include "support.hpp"

using namespace mrpe;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Mdp random_communicating(Rng& rng, int S, int A, double gamma, double zero_prob) {
  while (true) {
    Mdp m = test::random_mdp(rng, S, A, gamma, zero_prob);
    if (m.validate().communicating) return m;
  }
}

RewardSet random_set(Rng& rng, int S) {
  switch (rng.below(3)) {
    case 0:
      return RewardSet::box(S);
    case 1:
      return canonical_basis(S);
    default:
      return RewardSet::finite({test::random_reward(rng, S), test::random_reward(rng, S)});
  }
}

// 1. Two-state example at eps = 0.03.
Outcome nonconvexity() {
  const TwoStateExample ex;
  const double hi = example_value_gap(ex, 0.56), lo = example_value_gap(ex, 0.41), mid = example_value_gap(ex, 0.485);
  const bool ok = hi > 0.06 && lo > 0.06 && mid <= 0.06;
  return {ok, fmt("gap(0.56)=%.5f gap(0.41)=%.5f gap(0.485)=%.5f threshold 0.06", hi, lo, mid)};
}

// 2. Sufficient condition yields confusing models; below the necessary level no
// construction exceeds 2 eps.
Outcome alternative_conditions() {
  Rng rng(2024);
  int violations = 0, sufficient_cases = 0, necessary_sweeps = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int S = 2 + static_cast<int>(rng.below(5)), A = 1 + static_cast<int>(rng.below(3));
    const double gamma = 0.3 + 0.65 * rng.uniform();
    const Mdp m = test::random_mdp(rng, S, A, gamma);
    const DeterministicPolicy pi = test::random_policy(rng, S, A);
    const Vector r = test::random_reward(rng, S);
    const DeviationMatrix dev = rho_matrix(m, pi, r);
    if (dev.max_norm <= 0.0) continue;
    const double eps_suff = (0.2 + 0.75 * rng.uniform()) * gamma * dev.max_norm / 2.0;
    const double eps_none = (1.0 + rng.uniform()) * gamma * dev.max_norm / (1.0 - gamma);
    const double eps_rand = 0.01 + 0.5 * rng.uniform();

    for (double eps : {eps_suff, eps_none, eps_rand}) {
      const AltConditions cond = alt_model_conditions(m, pi, r, eps);
      if (cond.sufficient) {
        ++sufficient_cases;
        const int s0 = *cond.witness_state;
        Eigen::Index s1 = 0;
        dev.rho.row(s0).cwiseAbs().maxCoeff(&s1);
        const auto range = confusing_delta_range(m, pi, r, s0, static_cast<int>(s1), eps);
        if (!range) {
          ++violations;
          continue;
        }
        for (double t : {0.001, 0.25, 0.5, 0.75, 0.999}) {
          const double delta = range->first + t * (range->second - range->first);
          if (!(value_gap(m, construct_confusing_model(m, pi, s0, static_cast<int>(s1), delta), pi, r) > 2.0 * eps))
            ++violations;
        }
      }
      if (dev.max_norm <= eps * (1.0 - gamma) / gamma) {
        ++necessary_sweeps;
        for (int s0 = 0; s0 < S; ++s0)
          for (int s1 = 0; s1 < S; ++s1)
            for (int k = 1; k <= 20; ++k) {
              const double delta = k == 20 ? 0.999 : k / 20.0;
              if (value_gap(m, construct_confusing_model(m, pi, s0, s1, delta), pi, r) > 2.0 * eps) ++violations;
            }
      }
    }
  }
  const bool ok = violations == 0 && sufficient_cases >= 200 && necessary_sweeps >= 200;
  return {ok, fmt("violations=%d sufficient_cases=%d necessary_sweeps=%d", violations, sufficient_cases,
                  necessary_sweeps)};
}

// 3. Constant rewards give zero deviation; non-constant ones do not; bounds.
Outcome deviation_bounds() {
  Rng rng(3033);
  int violations = 0;
  double worst_constant = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const int S = 2 + static_cast<int>(rng.below(5)), A = 1 + static_cast<int>(rng.below(3));
    const Mdp m = test::random_mdp(rng, S, A, 0.05 + 0.9 * rng.uniform());
    const DeterministicPolicy pi = test::random_policy(rng, S, A);

    const double alpha = inst == 0 ? 0.0 : inst == 1 ? 1.0 : rng.uniform();
    const double c = rho_matrix(m, pi, Vector::Constant(S, alpha)).max_norm;
    worst_constant = std::max(worst_constant, c);
    if (c > 1e-12) ++violations;

    Vector r = test::random_reward(rng, S);
    while (span_of(r) <= 0.01) r = test::random_reward(rng, S);
    const DeviationMatrix dev = rho_matrix(m, pi, r);
    if (!(dev.max_norm > 0.0)) ++violations;
    if (dev.rho.diagonal().cwiseAbs().maxCoeff() > 1.0 + 1e-12) ++violations;
    if (dev.rho.cwiseAbs().maxCoeff() > dev.value_span + 1e-12) ++violations;
  }
  return {violations == 0, fmt("violations=%d max|rho| for constant rewards=%.3g", violations, worst_constant)};
}

double grid_minimum(const Mdp& m, const ComplexityMatrix& cm, std::span<const DeterministicPolicy> pols, double eps) {
  const int S = m.num_states(), ticks = 50;
  std::vector<int> idx(S, 0);
  StochasticPolicy beh{Matrix(S, 2)};
  Matrix omega(S, 2);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (int s = 0; s < S; ++s) {
      beh.probs(s, 0) = idx[s] * 0.02;
      beh.probs(s, 1) = 1.0 - beh.probs(s, 0);
    }
    const Vector d = stationary_distribution(policy_chain(m, beh)).distribution;
    for (int s = 0; s < S; ++s) omega.row(s) = d[s] * beh.probs.row(s);
    best = std::min(best, evaluate_u(omega, cm, pols, m.discount(), eps));
    int s = 0;
    while (s < S && ++idx[s] > ticks) idx[s++] = 0;
    if (s == S) break;
  }
  return best;
}

struct SolverStats {
  int instances = 0;
  int generative_violations = 0;
};

// 4. Allocation solver against a grid of behaviour policies.
Outcome solver_oracle(SolverStats& stats) {
  Rng rng(4044);
  int violations = 0;
  double worst_ratio = 0.0, worst_flow = 0.0;
  for (int inst = 0; inst < 70; ++inst) {
    const int S = inst < 50 ? 2 : 3;
    const Mdp m = random_communicating(rng, S, 2, 0.5 + 0.45 * rng.uniform(), 0.3);
    std::vector<DeterministicPolicy> pols{test::random_policy(rng, S, 2)};
    if (rng.uniform() < 0.5) pols.push_back(test::random_policy(rng, S, 2));
    std::vector<RewardSet> sets;
    for (std::size_t i = 0; i < pols.size(); ++i) sets.push_back(random_set(rng, S));
    const ComplexityMatrix cm = complexity_matrix(m, pols, sets);
    if (cm.entries.maxCoeff() <= 0.0) continue;
    const double eps = 0.05 + 0.2 * rng.uniform();
    const AllocationResult res = solve_allocation(m, cm, pols, eps);
    const double grid = grid_minimum(m, cm, pols, eps);
    const double flow = flow_residual(m, res.omega.omega);
    worst_ratio = std::max(worst_ratio, res.u_value / grid);
    worst_flow = std::max(worst_flow, flow);
    if (!(res.u_value <= 1.05 * grid) || !(flow <= 1e-8)) ++violations;

    ++stats.instances;
    const double gen = generative_allocation(cm, pols, 2, m.discount(), eps).u_value;
    if (!(gen <= res.u_value * (1.0 + 1e-12))) ++stats.generative_violations;
  }
  return {violations == 0, fmt("violations=%d worst u/grid=%.6f worst flow residual=%.2e", violations, worst_ratio,
                               worst_flow)};
}

// 5. Box closed form against the polytope LP with the box written as Ar <= b.
Outcome box_vs_polytope(SolverStats& stats) {
  Rng rng(5055);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const int S = 2 + static_cast<int>(rng.below(6)), A = 1 + static_cast<int>(rng.below(3));
    const Mdp m = test::random_mdp(rng, S, A, 0.3 + 0.65 * rng.uniform());
    const DeterministicPolicy pi = test::random_policy(rng, S, A);
    Matrix lhs(2 * S, S);
    lhs << Matrix::Identity(S, S), -Matrix::Identity(S, S);
    Vector rhs(2 * S);
    rhs << Vector::Ones(S), Vector::Zero(S);
    const RewardSet poly = RewardSet::polytope(lhs, rhs), box = RewardSet::box(S);
    const GammaOperator g(m, pi);
    for (int s = 0; s < S; ++s)
      for (int sp = 0; sp < S; ++sp)
        worst = std::max(worst, std::abs(sup_abs_rho(g, s, sp, poly) - sup_abs_rho(g, s, sp, box)));

    // These instances also feed the generative comparison.
    const std::vector<DeterministicPolicy> pols{pi};
    const ComplexityMatrix cm = complexity_matrix(m, pols, std::vector<RewardSet>{box});
    if (cm.entries.maxCoeff() > 0.0) {
      ++stats.instances;
      const double gen = generative_allocation(cm, pols, A, m.discount(), 0.1).u_value;
      if (!(gen <= solve_allocation(m, cm, pols, 0.1).u_value * (1.0 + 1e-12))) ++stats.generative_violations;
    }
  }
  return {worst <= 1e-8, fmt("max |closed form - LP|=%.3e over 50 instances", worst)};
}

// 6. Generative optimum never above the constrained one; toy c = (1, 3).
Outcome generative(const SolverStats& stats) {
  ComplexityMatrix cm;
  cm.entries = Matrix(1, 2);
  cm.entries << 0.5, 1.5;  // scale factor 2 at gamma = 0.5, eps = 0.5
  const std::vector<DeterministicPolicy> pols{test::constant_policy(2, 0)};
  const AllocationResult toy = generative_allocation(cm, pols, 2, 0.5, 0.5);
  const bool ok = stats.generative_violations == 0 && stats.instances > 0 && toy.u_value == 4.0 &&
                  toy.omega.omega(0, 0) == 0.25 && toy.omega.omega(1, 0) == 0.75;
  return {ok, fmt("violations=%d/%d toy value=%.17g omega=(%.17g, %.17g)", stats.generative_violations,
                  stats.instances, toy.u_value, toy.omega.omega(0, 0), toy.omega.omega(1, 0))};
}

// 7. PAC Monte Carlo of the stopping rule.
Outcome pac_stopping() {
  ExperimentConfig cfg;
  cfg.env = EnvSpec{};
  cfg.env.kind = EnvKind::kRiverswim;
  cfg.env.n = 4;
  cfg.env.gamma = 0.7;
  cfg.reward_mode = RewardMode::kFinite;
  cfg.reward_k = 2;
  cfg.targets = TargetMode::kDefault;
  cfg.eps = 0.2;
  cfg.delta = 0.1;
  cfg.max_steps = 5000000;
  cfg.seeds.clear();
  for (std::uint64_t s = 0; s < 50; ++s) cfg.seeds.push_back(s);
  const StoppingReport rep = stopping_check(cfg);
  double worst_error = 0.0;
  for (const StoppingRun& run : rep.runs) worst_error = std::max(worst_error, run.max_error);
  const bool ok = rep.violation_rate <= 0.1 && rep.all_stopped && rep.max_stop_step <= 5000000;
  return {ok, fmt("gamma=0.7 runs=%zu violation_rate=%.3f all_stopped=%s max_stop_step=%llu worst_error=%.4f",
                  rep.runs.size(), rep.violation_rate, rep.all_stopped ? "yes" : "no",
                  static_cast<unsigned long long>(rep.max_stop_step), worst_error)};
}

// 8. Error curves fall over time and MR-NaS keeps up with the baselines.
Outcome error_trends() {
  bool ok = true;
  std::string detail;
  for (const char* env : {"riverswim n=5", "narms n=6"}) {
    ExperimentConfig cfg;
    cfg.env = parse_env(env);
    cfg.horizon = 50000;
    cfg.eval_period = 500;
    cfg.agents = {parse_agent_spec("mrnas"), parse_agent_spec("noisy_uniform"), parse_agent_spec("noisy_visitation")};
    const auto rows = summarize(run_experiment(cfg));
    std::map<std::string, std::pair<double, double>> curve;  // median at T/10 and at T
    for (const SummaryRow& row : rows) {
      if (row.step == cfg.horizon / 10) curve[row.agent].first = row.median;
      if (row.step == cfg.horizon) curve[row.agent].second = row.median;
    }
    double best_baseline = std::numeric_limits<double>::infinity();
    for (const auto& [agent, pt] : curve) {
      ok = ok && pt.second < pt.first;
      if (agent != "mrnas") best_baseline = std::min(best_baseline, pt.second);
      detail += fmt(" %s/%s %.4f->%.4f", cfg.env.kind == EnvKind::kNArms ? "narms" : "riverswim", agent.c_str(),
                    pt.first, pt.second);
    }
    ok = ok && curve.size() == 3 && curve["mrnas"].second <= 1.5 * best_baseline;
  }
  return {ok, detail.substr(1)};
}

// 9. Threshold arithmetic and the eps/2 scaling of U.
Outcome threshold_arithmetic() {
  const double beta = stopping_threshold(Matrix::Zero(2, 2), 0.1, 2);
  const double beta_err = std::abs(beta - (std::log(10.0) + 4.0));
  Rng rng(9099);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int S = 2 + static_cast<int>(rng.below(5)), A = 1 + static_cast<int>(rng.below(3));
    std::vector<DeterministicPolicy> pols{test::random_policy(rng, S, A)};
    ComplexityMatrix cm;
    cm.entries = Matrix(1, S);
    for (int s = 0; s < S; ++s) cm.entries(0, s) = rng.uniform();
    Matrix omega(S, A);
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) omega(s, a) = 0.01 + rng.uniform();
    omega /= omega.sum();
    const double gamma = 0.1 + 0.85 * rng.uniform(), eps = 0.05 + 0.9 * rng.uniform();
    const double u = evaluate_u(omega, cm, pols, gamma, eps);
    worst = std::max(worst, std::abs(evaluate_u(omega, cm, pols, gamma, eps / 2.0) - 4.0 * u) / u);
  }
  return {beta_err <= 1e-12 && worst <= 1e-9,
          fmt("|beta - (ln 10 + 4)|=%.2e max relative |U(eps/2) - 4U(eps)|=%.2e", beta_err, worst)};
}

}  // namespace

int main() {
  SolverStats stats;
  struct Criterion {
    int id;
    double time_limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, 1.0, nonconvexity},
      {2, 60.0, alternative_conditions},
      {3, 60.0, deviation_bounds},
      {4, 300.0, [&] { return solver_oracle(stats); }},
      {5, 60.0, [&] { return box_vs_polytope(stats); }},
      {6, 60.0, [&] { return generative(stats); }},
      {7, 900.0, pac_stopping},
      {8, 1200.0, error_trends},
      {9, 60.0, threshold_arithmetic},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = out.pass && secs <= c.time_limit_s;
    failures += pass ? 0 : 1;
    std::printf("criterion %d: %s  %s; %.2fs (limit %.0fs)\n", c.id, pass ? "PASS" : "FAIL", out.detail.c_str(), secs,
                c.time_limit_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
