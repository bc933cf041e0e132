#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <mrpe/mrpe.h>

namespace {

struct Owned {
  char* ptr = nullptr;
  ~Owned() { mrpe_free(ptr); }
};

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::strlen(mrpe_version()) > 0);
  CHECK(std::string(mrpe_status_string(MRPE_OK)) == "ok");
  CHECK(std::strlen(mrpe_status_string(MRPE_ERR_CONFIG)) > 0);
  CHECK(std::strlen(mrpe_status_string(static_cast<mrpe_status>(1234))) > 0);
}

TEST_CASE("model handles") {
  const double t[] = {0.0, 1.0, 1.0, 0.0};
  mrpe_mdp* m = nullptr;
  REQUIRE(mrpe_mdp_create(2, 1, 0.5, t, &m) == MRPE_OK);
  int S = 0, A = 0;
  double g = 0.0;
  CHECK(mrpe_mdp_shape(m, &S, &A, &g) == MRPE_OK);
  CHECK(S == 2);
  CHECK(A == 1);
  CHECK(g == 0.5);
  double back[4];
  CHECK(mrpe_mdp_transitions(m, back) == MRPE_OK);
  CHECK(std::memcmp(back, t, sizeof t) == 0);

  const int pi[] = {0, 0};
  const double r[] = {1.0, 0.0};
  double v[2];
  REQUIRE(mrpe_policy_value(m, pi, r, v) == MRPE_OK);
  CHECK(v[0] == doctest::Approx(4.0 / 3.0));
  CHECK(v[1] == doctest::Approx(2.0 / 3.0));
  double rho[4];
  REQUIRE(mrpe_rho_matrix(m, pi, r, rho) == MRPE_OK);
  CHECK(rho[0] == doctest::Approx(2.0 / 3.0));
  CHECK(std::abs(rho[1]) < 1e-12);

  mrpe_validation val{};
  Owned report;
  CHECK(mrpe_mdp_validate(m, &val, &report.ptr) == MRPE_OK);
  CHECK(val.ok == 1);
  CHECK(val.communicating == 1);
  CHECK(val.aperiodic == 0);
  CHECK(report.ptr != nullptr);

  const auto path = (std::filesystem::temp_directory_path() / "mrpe_capi_model.txt").string();
  CHECK(mrpe_mdp_save(m, path.c_str()) == MRPE_OK);
  mrpe_mdp* loaded = nullptr;
  CHECK(mrpe_mdp_load(path.c_str(), &loaded) == MRPE_OK);
  double again[4];
  CHECK(mrpe_mdp_transitions(loaded, again) == MRPE_OK);
  CHECK(std::memcmp(again, t, sizeof t) == 0);
  mrpe_mdp_destroy(loaded);
  std::filesystem::remove(path);
  mrpe_mdp_destroy(m);
  mrpe_mdp_destroy(nullptr);
}

TEST_CASE("errors map to status codes") {
  const double bad[] = {0.5, 0.4, 0.5, 0.5};
  mrpe_mdp* m = nullptr;
  CHECK(mrpe_mdp_create(2, 1, 0.5, bad, &m) == MRPE_ERR_ROW_NOT_STOCHASTIC);
  CHECK(m == nullptr);
  CHECK(std::strlen(mrpe_last_error()) > 0);
  const double ok[] = {1.0};
  CHECK(mrpe_mdp_create(1, 1, 1.0, ok, &m) == MRPE_ERR_DISCOUNT_OUT_OF_RANGE);
  CHECK(mrpe_mdp_create(1, 1, 0.5, nullptr, &m) == MRPE_ERR_INVALID_ARGUMENT);
  CHECK(mrpe_env_create("lake n=3", &m) == MRPE_ERR_CONFIG);
  CHECK(mrpe_mdp_load("/nonexistent/model.txt", &m) == MRPE_ERR_IO);

  REQUIRE(mrpe_env_create("riverswim n=3", &m) == MRPE_OK);
  const int pi[] = {1, 1, 1};
  const double r[] = {1.5, 0.0, 0.0};
  double v[3];
  CHECK(mrpe_policy_value(m, pi, r, v) == MRPE_ERR_REWARD_OUT_OF_BOX);
  const int bad_pi[] = {1, 2, 1};
  const double r_ok[] = {0.0, 0.0, 1.0};
  CHECK(mrpe_policy_value(m, bad_pi, r_ok, v) == MRPE_ERR_INDEX_OUT_OF_RANGE);
  mrpe_reward_set* set = nullptr;
  const double lhs[] = {1.0, 1.0, 1.0};
  const double rhs[] = {-1.0};
  CHECK(mrpe_reward_set_polytope(3, 1, lhs, rhs, &set) == MRPE_ERR_INFEASIBLE);
  const double k3[] = {0.0, 0.0, 0.0};
  CHECK(mrpe_reward_set_finite(3, 0, k3, &set) == MRPE_ERR_INVALID_ARGUMENT);
  mrpe_mdp_destroy(m);

  // Success clears nothing but leaves a usable message slot.
  CHECK(mrpe_env_create("riverswim n=3", &m) == MRPE_OK);
  mrpe_mdp_destroy(m);
}

TEST_CASE("reward sets and allocation through the C interface") {
  mrpe_mdp* m = nullptr;
  REQUIRE(mrpe_env_create("riverswim n=4 gamma=0.9", &m) == MRPE_OK);
  int pi[4];
  double reward_sa[8] = {0};
  reward_sa[3 * 2 + 1] = 1.0;
  REQUIRE(mrpe_policy_iteration(m, reward_sa, pi) == MRPE_OK);
  for (int a : pi) CHECK(a == 1);

  mrpe_reward_set* box = nullptr;
  REQUIRE(mrpe_reward_set_box(4, &box) == MRPE_OK);
  double sup = 0.0;
  CHECK(mrpe_sup_abs_rho(m, pi, 0, 3, box, &sup) == MRPE_OK);
  CHECK(sup > 0.0);

  const mrpe_reward_set* sets[] = {box};
  mrpe_allocation alloc{};
  double omega[8];
  REQUIRE(mrpe_solve_allocation(m, 1, pi, sets, 0.1, &alloc, omega) == MRPE_OK);
  double total = 0.0;
  for (double w : omega) total += w;
  CHECK(total == doctest::Approx(1.0));
  CHECK(std::isfinite(alloc.u_value));
  mrpe_allocation gen{};
  REQUIRE(mrpe_generative_allocation(m, 1, pi, sets, 0.1, &gen, nullptr) == MRPE_OK);
  CHECK(gen.u_value <= alloc.u_value * (1.0 + 1e-9));
  CHECK(mrpe_solve_allocation(m, 1, pi, sets, -1.0, &alloc, nullptr) == MRPE_ERR_INVALID_ARGUMENT);
  mrpe_reward_set_destroy(box);
  mrpe_mdp_destroy(m);
}

TEST_CASE("non-convexity demo") {
  const double grid[] = {0.41, 0.485, 0.5, 0.56};
  double gaps[4];
  REQUIRE(mrpe_nonconvexity_curve(grid, 4, gaps) == MRPE_OK);
  CHECK(gaps[0] > 0.06);
  CHECK(gaps[1] <= 0.06);
  CHECK(gaps[2] == 0.0);
  CHECK(gaps[3] > 0.06);
  Owned csv;
  REQUIRE(mrpe_nonconvexity_csv(0.4, 0.6, 0.1, &csv.ptr) == MRPE_OK);
  CHECK(std::string(csv.ptr).rfind("p2,gap\n", 0) == 0);
  CHECK(mrpe_nonconvexity_csv(0.6, 0.4, 0.1, &csv.ptr) != MRPE_OK);
}

TEST_CASE("experiments through the C interface") {
  mrpe_experiment* exp = nullptr;
  CHECK(mrpe_experiment_parse("agent=mrnas\n", &exp) == MRPE_ERR_CONFIG);
  REQUIRE(mrpe_experiment_parse("env=riverswim n=3\nagent=noisy_uniform\nseeds=0-1\nhorizon=1000\n", &exp) ==
          MRPE_OK);
  Owned text;
  CHECK(mrpe_experiment_describe(exp, &text.ptr) == MRPE_OK);
  CHECK(std::string(text.ptr).find("riverswim") != std::string::npos);
  CHECK(mrpe_experiment_set_threads(exp, 0) != MRPE_OK);
  CHECK(mrpe_experiment_set_threads(exp, 2) == MRPE_OK);

  const auto dir = std::filesystem::temp_directory_path() / "mrpe_capi_run";
  std::filesystem::remove_all(dir);
  CHECK(mrpe_experiment_set_output(exp, dir.string().c_str()) == MRPE_OK);
  std::size_t n = 0;
  REQUIRE(mrpe_experiment_run(exp, &n) == MRPE_OK);
  // 2 seeds x 2 snapshots x 3 policies x 3 rewards.
  CHECK(n == 36);
  std::ifstream records(dir / "records.csv");
  std::string header;
  std::getline(records, header);
  CHECK(header == "seed,agent,step,policy,reward,linf_error");
  CHECK(std::filesystem::exists(dir / "summary.csv"));
  std::filesystem::remove_all(dir);

  Owned csv, omega;
  REQUIRE(mrpe_experiment_complexity(exp, &csv.ptr, &omega.ptr) == MRPE_OK);
  CHECK(std::string(csv.ptr).rfind("param,value,set_label,u_star,u_generative,certified_gap\n", 0) == 0);
  CHECK(std::strlen(omega.ptr) > 0);
  mrpe_experiment_destroy(exp);

  REQUIRE(mrpe_experiment_parse(
              "env=riverswim n=3 gamma=0.5\nreward_k=1\ntargets=default\neps=0.3\nseeds=0-1\n", &exp) == MRPE_OK);
  mrpe_stopping_summary summary{};
  Owned runs;
  REQUIRE(mrpe_experiment_stopping_check(exp, &summary, &runs.ptr) == MRPE_OK);
  CHECK(summary.runs == 2);
  CHECK(summary.stopped == 2);
  CHECK(summary.violations == 0);
  CHECK(std::string(runs.ptr).rfind("seed,stopped,stop_step,max_error,violated\n", 0) == 0);
  mrpe_experiment_destroy(exp);
}
