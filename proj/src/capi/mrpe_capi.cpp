#include "mrpe/mrpe.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "core/allocation.hpp"
#include "core/config.hpp"
#include "core/deviation.hpp"
#include "core/environments.hpp"
#include "core/error.hpp"
#include "core/harness.hpp"
#include "core/mdp.hpp"
#include "core/reward_sets.hpp"

struct mrpe_mdp {
  mrpe::Mdp mdp;
};

struct mrpe_reward_set {
  mrpe::RewardSet set;
};

struct mrpe_experiment {
  mrpe::ExperimentConfig cfg;
};

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

thread_local std::string g_last_error;

template <typename F>
mrpe_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MRPE_OK;
  } catch (const mrpe::Error& e) {
    g_last_error = e.what();
    return static_cast<mrpe_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MRPE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MRPE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return MRPE_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw mrpe::Error(mrpe::Errc::kInvalidArgument, what);
}

char* duplicate(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

mrpe::DeterministicPolicy read_policy(const mrpe::Mdp& m, const int* policy) {
  require(policy != nullptr, "policy is null");
  mrpe::DeterministicPolicy pi{std::vector<int>(policy, policy + m.num_states())};
  mrpe::check_policy(m, pi);
  return pi;
}

mrpe::Vector read_vector(const double* data, int n) {
  require(data != nullptr, "vector is null");
  return Eigen::Map<const mrpe::Vector>(data, n);
}

void write_matrix(const mrpe::Matrix& m, double* out) { Eigen::Map<RowMajor>(out, m.rows(), m.cols()) = m; }

struct AllocationInputs {
  std::vector<mrpe::DeterministicPolicy> policies;
  std::vector<mrpe::RewardSet> sets;
};

AllocationInputs read_allocation_inputs(const mrpe::Mdp& m, int n_policies, const int* policies,
                                        const mrpe_reward_set* const* sets) {
  require(n_policies >= 1, "need at least one policy");
  require(policies != nullptr && sets != nullptr, "policies or sets are null");
  AllocationInputs in;
  for (int i = 0; i < n_policies; ++i) {
    in.policies.push_back(read_policy(m, policies + static_cast<std::ptrdiff_t>(i) * m.num_states()));
    require(sets[i] != nullptr, "reward set is null");
    in.sets.push_back(sets[i]->set);
  }
  return in;
}

void fill_allocation(const mrpe::AllocationResult& res, mrpe_allocation* out, double* omega_out) {
  out->u_value = res.u_value;
  out->certified_gap = res.certified_gap;
  out->iterations = res.iterations;
  if (omega_out) write_matrix(res.omega.omega, omega_out);
}

}  // namespace

extern "C" {

const char* mrpe_version(void) { return "0.1.0"; }

const char* mrpe_status_string(mrpe_status status) {
  switch (status) {
    case MRPE_OK: return "ok";
    case MRPE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MRPE_ERR_ROW_NOT_STOCHASTIC: return "row not stochastic";
    case MRPE_ERR_DISCOUNT_OUT_OF_RANGE: return "discount out of range";
    case MRPE_ERR_REWARD_OUT_OF_BOX: return "reward out of [0, 1]";
    case MRPE_ERR_SINGULAR_SYSTEM: return "singular system";
    case MRPE_ERR_INDEX_OUT_OF_RANGE: return "index out of range";
    case MRPE_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case MRPE_ERR_INFEASIBLE: return "infeasible";
    case MRPE_ERR_UNBOUNDED: return "unbounded";
    case MRPE_ERR_ITERATION_LIMIT: return "iteration limit";
    case MRPE_ERR_INVALID_DELTA: return "invalid delta";
    case MRPE_ERR_K_TOO_LARGE: return "k too large";
    case MRPE_ERR_EMPTY_SAMPLE: return "empty sample";
    case MRPE_ERR_ALL_ZERO_COMPLEXITY: return "all-zero complexity";
    case MRPE_ERR_IO: return "i/o error";
    case MRPE_ERR_PARSE: return "parse error";
    case MRPE_ERR_CONFIG: return "config error";
    case MRPE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mrpe_last_error(void) { return g_last_error.c_str(); }

void mrpe_free(void* ptr) { std::free(ptr); }

mrpe_status mrpe_mdp_create(int num_states, int num_actions, double gamma, const double* transitions,
                            mrpe_mdp** out) {
  return guard([&] {
    require(out != nullptr && transitions != nullptr, "null argument");
    require(num_states >= 1 && num_actions >= 1, "need at least one state and action");
    const RowMajor t = Eigen::Map<const RowMajor>(transitions, static_cast<Eigen::Index>(num_states) * num_actions,
                                                  num_states);
    *out = new mrpe_mdp{mrpe::Mdp(num_states, num_actions, gamma, mrpe::Matrix(t))};
  });
}

mrpe_status mrpe_env_create(const char* spec, mrpe_mdp** out) {
  return guard([&] {
    require(out != nullptr && spec != nullptr, "null argument");
    *out = new mrpe_mdp{mrpe::make_env(mrpe::parse_env(spec))};
  });
}

mrpe_status mrpe_mdp_load(const char* path, mrpe_mdp** out) {
  return guard([&] {
    require(out != nullptr && path != nullptr, "null argument");
    *out = new mrpe_mdp{mrpe::load_mdp(path)};
  });
}

mrpe_status mrpe_mdp_save(const mrpe_mdp* mdp, const char* path) {
  return guard([&] {
    require(mdp != nullptr && path != nullptr, "null argument");
    mrpe::save_mdp(path, mdp->mdp);
  });
}

void mrpe_mdp_destroy(mrpe_mdp* mdp) { delete mdp; }

mrpe_status mrpe_mdp_shape(const mrpe_mdp* mdp, int* num_states, int* num_actions, double* gamma) {
  return guard([&] {
    require(mdp != nullptr, "null model");
    if (num_states) *num_states = mdp->mdp.num_states();
    if (num_actions) *num_actions = mdp->mdp.num_actions();
    if (gamma) *gamma = mdp->mdp.discount();
  });
}

mrpe_status mrpe_mdp_transitions(const mrpe_mdp* mdp, double* out) {
  return guard([&] {
    require(mdp != nullptr && out != nullptr, "null argument");
    write_matrix(mdp->mdp.transitions(), out);
  });
}

mrpe_status mrpe_mdp_validate(const mrpe_mdp* mdp, mrpe_validation* out, char** report) {
  return guard([&] {
    require(mdp != nullptr && out != nullptr, "null argument");
    const mrpe::ValidationReport rep = mdp->mdp.validate();
    out->ok = rep.ok() ? 1 : 0;
    out->communicating = rep.communicating ? 1 : 0;
    out->aperiodic = rep.aperiodic ? 1 : 0;
    if (report) *report = duplicate(rep.summary());
  });
}

mrpe_status mrpe_policy_value(const mrpe_mdp* mdp, const int* policy, const double* reward, double* value_out) {
  return guard([&] {
    require(mdp != nullptr && value_out != nullptr, "null argument");
    const mrpe::Vector v =
        mrpe::policy_value(mdp->mdp, read_policy(mdp->mdp, policy), read_vector(reward, mdp->mdp.num_states()));
    Eigen::Map<mrpe::Vector>(value_out, v.size()) = v;
  });
}

mrpe_status mrpe_policy_iteration(const mrpe_mdp* mdp, const double* reward_sa, int* policy_out) {
  return guard([&] {
    require(mdp != nullptr && reward_sa != nullptr && policy_out != nullptr, "null argument");
    const mrpe::Matrix r = Eigen::Map<const RowMajor>(reward_sa, mdp->mdp.num_states(), mdp->mdp.num_actions());
    const mrpe::DeterministicPolicy pi = mrpe::policy_iteration(mdp->mdp, r);
    std::copy(pi.action.begin(), pi.action.end(), policy_out);
  });
}

mrpe_status mrpe_rho_matrix(const mrpe_mdp* mdp, const int* policy, const double* reward, double* rho_out) {
  return guard([&] {
    require(mdp != nullptr && rho_out != nullptr, "null argument");
    const mrpe::DeviationMatrix dev =
        mrpe::rho_matrix(mdp->mdp, read_policy(mdp->mdp, policy), read_vector(reward, mdp->mdp.num_states()));
    write_matrix(dev.rho, rho_out);
  });
}

mrpe_status mrpe_reward_set_finite(int num_states, int count, const double* rewards, mrpe_reward_set** out) {
  return guard([&] {
    require(out != nullptr && rewards != nullptr, "null argument");
    require(num_states >= 1 && count >= 1, "need a positive dimension and count");
    std::vector<mrpe::Vector> list;
    for (int i = 0; i < count; ++i)
      list.push_back(read_vector(rewards + static_cast<std::ptrdiff_t>(i) * num_states, num_states));
    *out = new mrpe_reward_set{mrpe::RewardSet::finite(std::move(list))};
  });
}

mrpe_status mrpe_reward_set_box(int num_states, mrpe_reward_set** out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    *out = new mrpe_reward_set{mrpe::RewardSet::box(num_states)};
  });
}

mrpe_status mrpe_reward_set_polytope(int num_states, int rows, const double* lhs, const double* rhs,
                                     mrpe_reward_set** out) {
  return guard([&] {
    require(out != nullptr && lhs != nullptr && rhs != nullptr, "null argument");
    require(num_states >= 1 && rows >= 1, "need a positive dimension and row count");
    const RowMajor a = Eigen::Map<const RowMajor>(lhs, rows, num_states);
    *out = new mrpe_reward_set{mrpe::RewardSet::polytope(mrpe::Matrix(a), read_vector(rhs, rows))};
  });
}

mrpe_status mrpe_reward_set_load_polytope(const char* path, mrpe_reward_set** out) {
  return guard([&] {
    require(out != nullptr && path != nullptr, "null argument");
    *out = new mrpe_reward_set{mrpe::load_polytope(path)};
  });
}

void mrpe_reward_set_destroy(mrpe_reward_set* set) { delete set; }

mrpe_status mrpe_sup_abs_rho(const mrpe_mdp* mdp, const int* policy, int s, int s_prime, const mrpe_reward_set* set,
                             double* out) {
  return guard([&] {
    require(mdp != nullptr && set != nullptr && out != nullptr, "null argument");
    *out = mrpe::sup_abs_rho(mdp->mdp, read_policy(mdp->mdp, policy), s, s_prime, set->set);
  });
}

mrpe_status mrpe_solve_allocation(const mrpe_mdp* mdp, int n_policies, const int* policies,
                                  const mrpe_reward_set* const* sets, double eps, mrpe_allocation* out,
                                  double* omega_out) {
  return guard([&] {
    require(mdp != nullptr && out != nullptr, "null argument");
    const AllocationInputs in = read_allocation_inputs(mdp->mdp, n_policies, policies, sets);
    const mrpe::ComplexityMatrix cm = mrpe::complexity_matrix(mdp->mdp, in.policies, in.sets);
    fill_allocation(mrpe::solve_allocation(mdp->mdp, cm, in.policies, eps), out, omega_out);
  });
}

mrpe_status mrpe_generative_allocation(const mrpe_mdp* mdp, int n_policies, const int* policies,
                                       const mrpe_reward_set* const* sets, double eps, mrpe_allocation* out,
                                       double* omega_out) {
  return guard([&] {
    require(mdp != nullptr && out != nullptr, "null argument");
    const AllocationInputs in = read_allocation_inputs(mdp->mdp, n_policies, policies, sets);
    const mrpe::ComplexityMatrix cm = mrpe::complexity_matrix(mdp->mdp, in.policies, in.sets);
    fill_allocation(
        mrpe::generative_allocation(cm, in.policies, mdp->mdp.num_actions(), mdp->mdp.discount(), eps), out,
        omega_out);
  });
}

mrpe_status mrpe_nonconvexity_curve(const double* grid, size_t count, double* gaps_out) {
  return guard([&] {
    require(grid != nullptr && gaps_out != nullptr, "null argument");
    const auto curve = mrpe::nonconvexity_curve(std::span<const double>(grid, count));
    for (size_t i = 0; i < count; ++i) gaps_out[i] = curve[i].second;
  });
}

mrpe_status mrpe_nonconvexity_csv(double lo, double hi, double step, char** csv_out) {
  return guard([&] {
    require(csv_out != nullptr, "null argument");
    require(lo > 0.0 && hi < 1.0 && lo <= hi && step > 0.0, "need 0 < lo <= hi < 1 and step > 0");
    std::vector<double> grid;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) grid.push_back(lo + static_cast<double>(i) * step);
    std::ostringstream out;
    out << "p2,gap\n";
    char buf[64];
    for (const auto& [p2, gap] : mrpe::nonconvexity_curve(grid)) {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", p2, gap);
      out << buf;
    }
    *csv_out = duplicate(out.str());
  });
}

mrpe_status mrpe_experiment_load(const char* path, mrpe_experiment** out) {
  return guard([&] {
    require(out != nullptr && path != nullptr, "null argument");
    *out = new mrpe_experiment{mrpe::load_config(path)};
  });
}

mrpe_status mrpe_experiment_parse(const char* text, mrpe_experiment** out) {
  return guard([&] {
    require(out != nullptr && text != nullptr, "null argument");
    std::istringstream in(text);
    *out = new mrpe_experiment{mrpe::parse_config(in)};
  });
}

void mrpe_experiment_destroy(mrpe_experiment* exp) { delete exp; }

mrpe_status mrpe_experiment_set_threads(mrpe_experiment* exp, int threads) {
  return guard([&] {
    require(exp != nullptr, "null experiment");
    require(threads >= 1, "threads must be positive");
    exp->cfg.threads = threads;
  });
}

mrpe_status mrpe_experiment_set_output(mrpe_experiment* exp, const char* directory) {
  return guard([&] {
    require(exp != nullptr && directory != nullptr && *directory, "null or empty argument");
    exp->cfg.output = directory;
  });
}

mrpe_status mrpe_experiment_describe(const mrpe_experiment* exp, char** text_out) {
  return guard([&] {
    require(exp != nullptr && text_out != nullptr, "null argument");
    const mrpe::ExperimentConfig& c = exp->cfg;
    std::ostringstream out;
    out << "env: " << mrpe::describe(c.env) << "\nreward_mode: " << mrpe::to_string(c.reward_mode)
        << "\nhorizon: " << c.horizon << " eval_period: " << c.eval_period << " seeds: " << c.seeds.size()
        << "\neps: " << c.eps << " delta: " << c.delta << "\nagents:";
    for (const mrpe::AgentSpec& a : c.agents) out << ' ' << mrpe::describe(a);
    out << '\n';
    *text_out = duplicate(out.str());
  });
}

mrpe_status mrpe_experiment_run(const mrpe_experiment* exp, size_t* n_records) {
  return guard([&] {
    require(exp != nullptr, "null experiment");
    const std::vector<mrpe::EvalRecord> records = mrpe::run_experiment(exp->cfg);
    std::error_code ec;
    std::filesystem::create_directories(exp->cfg.output, ec);
    if (ec) throw mrpe::Error(mrpe::Errc::kIo, "cannot create " + exp->cfg.output + ": " + ec.message());
    const std::filesystem::path dir(exp->cfg.output);
    mrpe::write_csv((dir / "records.csv").string(), records);
    mrpe::write_summary_csv((dir / "summary.csv").string(), mrpe::summarize(records));
    if (n_records) *n_records = records.size();
  });
}

mrpe_status mrpe_experiment_complexity(const mrpe_experiment* exp, char** csv_out, char** omega_out) {
  return guard([&] {
    require(exp != nullptr && csv_out != nullptr, "null argument");
    const std::vector<mrpe::ComplexityRow> rows = mrpe::complexity_sweep(exp->cfg);
    std::ostringstream csv;
    mrpe::write_complexity_csv(csv, rows);
    if (omega_out) {
      std::ostringstream om;
      om.precision(10);
      const mrpe::Matrix& w = rows.front().omega;
      for (Eigen::Index s = 0; s < w.rows(); ++s) {
        for (Eigen::Index a = 0; a < w.cols(); ++a) om << (a ? " " : "") << w(s, a);
        om << '\n';
      }
      *omega_out = duplicate(om.str());
    }
    *csv_out = duplicate(csv.str());
  });
}

mrpe_status mrpe_experiment_stopping_check(const mrpe_experiment* exp, mrpe_stopping_summary* out,
                                           char** runs_csv_out) {
  return guard([&] {
    require(exp != nullptr && out != nullptr, "null argument");
    const mrpe::StoppingReport rep = mrpe::stopping_check(exp->cfg);
    out->runs = rep.runs.size();
    out->stopped = 0;
    out->violations = 0;
    for (const mrpe::StoppingRun& r : rep.runs) {
      out->stopped += r.stopped ? 1 : 0;
      out->violations += r.violated ? 1 : 0;
    }
    out->violation_rate = rep.violation_rate;
    out->max_stop_step = rep.max_stop_step;
    if (runs_csv_out) {
      std::ostringstream csv;
      csv << "seed,stopped,stop_step,max_error,violated\n";
      char buf[64];
      for (const mrpe::StoppingRun& r : rep.runs) {
        std::snprintf(buf, sizeof buf, "%.10g", r.max_error);
        csv << r.seed << ',' << r.stopped << ',' << r.stop_step << ',' << buf << ',' << r.violated << '\n';
      }
      *runs_csv_out = duplicate(csv.str());
    }
  });
}

}  // extern "C"
