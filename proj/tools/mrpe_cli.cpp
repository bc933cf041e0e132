// Command-line front end. Talks to the library only through mrpe.h.
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "mrpe/mrpe.h"

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct CString {
  char* ptr = nullptr;
  ~CString() { mrpe_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

int fail(mrpe_status status) {
  std::cerr << "mrpe: " << mrpe_status_string(status) << ": " << mrpe_last_error() << '\n';
  return status == MRPE_ERR_CONFIG ? kUsageError : kRuntimeError;
}

using ExperimentPtr = std::unique_ptr<mrpe_experiment, decltype(&mrpe_experiment_destroy)>;

int load(const std::string& path, int threads, ExperimentPtr& out) {
  mrpe_experiment* exp = nullptr;
  if (mrpe_status st = mrpe_experiment_load(path.c_str(), &exp); st != MRPE_OK) return fail(st);
  out.reset(exp);
  if (threads > 0)
    if (mrpe_status st = mrpe_experiment_set_threads(exp, threads); st != MRPE_OK) return fail(st);
  return 0;
}

int cmd_run(const std::string& config, const std::string& output, int threads) {
  ExperimentPtr exp(nullptr, mrpe_experiment_destroy);
  if (int rc = load(config, threads, exp)) return rc;
  if (!output.empty())
    if (mrpe_status st = mrpe_experiment_set_output(exp.get(), output.c_str()); st != MRPE_OK) return fail(st);
  CString text;
  if (mrpe_experiment_describe(exp.get(), &text.ptr) == MRPE_OK) std::cerr << text.str();
  size_t n = 0;
  if (mrpe_status st = mrpe_experiment_run(exp.get(), &n); st != MRPE_OK) return fail(st);
  std::cerr << "wrote " << n << " records\n";
  return 0;
}

int cmd_complexity(const std::string& config, bool show_omega) {
  ExperimentPtr exp(nullptr, mrpe_experiment_destroy);
  if (int rc = load(config, 0, exp)) return rc;
  CString csv, omega;
  if (mrpe_status st = mrpe_experiment_complexity(exp.get(), &csv.ptr, show_omega ? &omega.ptr : nullptr);
      st != MRPE_OK)
    return fail(st);
  std::cout << csv.str();
  if (show_omega) std::cerr << "omega (state rows, action columns):\n" << omega.str();
  return 0;
}

int cmd_demo(double lo, double hi, double step) {
  CString csv;
  if (mrpe_status st = mrpe_nonconvexity_csv(lo, hi, step, &csv.ptr); st != MRPE_OK) return fail(st);
  std::cout << csv.str();
  return 0;
}

int cmd_validate(const std::vector<std::string>& tokens) {
  std::string spec;
  for (const std::string& t : tokens) spec += (spec.empty() ? "" : " ") + t;
  mrpe_mdp* mdp = nullptr;
  if (mrpe_status st = mrpe_env_create(spec.c_str(), &mdp); st != MRPE_OK) return fail(st);
  std::unique_ptr<mrpe_mdp, decltype(&mrpe_mdp_destroy)> guard(mdp, mrpe_mdp_destroy);
  mrpe_validation v{};
  CString report;
  if (mrpe_status st = mrpe_mdp_validate(mdp, &v, &report.ptr); st != MRPE_OK) return fail(st);
  int S = 0, A = 0;
  double gamma = 0.0;
  mrpe_mdp_shape(mdp, &S, &A, &gamma);
  std::cout << "states=" << S << " actions=" << A << " gamma=" << gamma << '\n' << report.str() << '\n';
  return v.ok && v.communicating ? 0 : kRuntimeError;
}

int cmd_stopping(const std::string& config, int threads) {
  ExperimentPtr exp(nullptr, mrpe_experiment_destroy);
  if (int rc = load(config, threads, exp)) return rc;
  mrpe_stopping_summary sum{};
  CString csv;
  if (mrpe_status st = mrpe_experiment_stopping_check(exp.get(), &sum, &csv.ptr); st != MRPE_OK) return fail(st);
  std::cout << csv.str();
  std::cerr << "runs=" << sum.runs << " stopped=" << sum.stopped << " violations=" << sum.violations
            << " violation_rate=" << sum.violation_rate << " max_stop_step=" << sum.max_stop_step << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-reward multi-policy evaluation experiments"};
  app.require_subcommand(1);

  std::string config, output;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config, "Config file")->required();
  run->add_option("-o,--output", output, "Output directory (overrides the config)");
  run->add_option("-j,--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  bool show_omega = false;
  auto* complexity = app.add_subcommand("complexity", "Print U* (and optionally omega*) as CSV");
  complexity->add_option("config", config, "Config file")->required();
  complexity->add_flag("--omega", show_omega, "Also print the optimal allocation to stderr");

  double lo = 0.3, hi = 0.7, step = 0.001;
  auto* demo = app.add_subcommand("demo-nonconvexity", "Value-gap curve of the two-state example as CSV");
  demo->add_option("--lo", lo, "Smallest alternative p2");
  demo->add_option("--hi", hi, "Largest alternative p2");
  demo->add_option("--step", step, "Grid step");

  std::vector<std::string> env_tokens;
  auto* validate = app.add_subcommand("validate", "Check an environment, e.g. validate riverswim n=5");
  validate->add_option("env", env_tokens, "Environment name and key=value parameters")->required();

  auto* stopping = app.add_subcommand("stopping-check", "Monte-Carlo check of the stopping rule");
  stopping->add_option("config", config, "Config file")->required();
  stopping->add_option("-j,--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (*run) return cmd_run(config, output, threads);
  if (*complexity) return cmd_complexity(config, show_omega);
  if (*demo) return cmd_demo(lo, hi, step);
  if (*validate) return cmd_validate(env_tokens);
  if (*stopping) return cmd_stopping(config, threads);
  return kUsageError;
}
