#include "core/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include "core/error.hpp"

namespace mrpe {

namespace {

constexpr double kTieTol = 1e-12;

std::string row_label(int s, int a) {
  std::ostringstream os;
  os << "(s=" << s << ", a=" << a << ")";
  return os.str();
}

// Tarjan's SCC over the support graph (edge i -> j iff chain(i, j) > 0).
std::vector<int> strongly_connected_components(const Matrix& chain, int* num_components) {
  const int n = static_cast<int>(chain.rows());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  int counter = 0, ncomp = 0;

  // Iterative DFS to stay safe on long chains.
  struct Frame {
    int v;
    int next;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> frames{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      Frame& f = frames.back();
      if (f.next < n) {
        const int w = f.next++;
        if (chain(f.v, w) <= 0.0) continue;
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const int v = f.v;
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = ncomp;
        } while (w != v);
        ++ncomp;
      }
      frames.pop_back();
      if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
    }
  }
  *num_components = ncomp;
  return comp;
}

}  // namespace

bool ValidationReport::ok() const {
  return std::none_of(issues.begin(), issues.end(), [](const ValidationIssue& i) { return i.fatal(); });
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << (ok() ? "ok" : "invalid") << "; communicating=" << (communicating ? "yes" : "no")
     << "; aperiodic=" << (aperiodic ? "yes" : "no");
  for (const auto& issue : issues) os << "\n  " << (issue.fatal() ? "error: " : "warning: ") << issue.message;
  return os.str();
}

ValidationReport validate_mdp(int num_states, int num_actions, double discount, const Matrix& transitions) {
  if (num_states < 1 || num_actions < 1)
    throw Error(Errc::kInvalidArgument, "MDP needs at least one state and one action");
  if (transitions.rows() != static_cast<Eigen::Index>(num_states) * num_actions || transitions.cols() != num_states)
    throw Error(Errc::kShapeMismatch, "transition matrix must be (S*A) x S");

  ValidationReport report;
  if (!(discount > 0.0 && discount < 1.0)) {
    std::ostringstream os;
    os << "discount " << discount << " outside (0, 1)";
    report.issues.push_back({ValidationIssue::Kind::kDiscountOutOfRange, -1, -1, os.str()});
  }
  bool rows_ok = true;
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      const auto row = transitions.row(static_cast<Eigen::Index>(s) * num_actions + a);
      const bool finite = row.allFinite();
      const bool nonneg = finite && (row.array() >= 0.0).all();
      const double sum = finite ? row.sum() : std::numeric_limits<double>::quiet_NaN();
      if (!nonneg || !(std::abs(sum - 1.0) <= kStochasticTol)) {
        std::ostringstream os;
        os << "row " << row_label(s, a) << " is not a distribution (sum " << std::setprecision(15) << sum << ")";
        report.issues.push_back({ValidationIssue::Kind::kRowNotStochastic, s, a, os.str()});
        rows_ok = false;
      }
    }
  }
  if (rows_ok) {
    Matrix chain = Matrix::Zero(num_states, num_states);
    for (int s = 0; s < num_states; ++s)
      for (int a = 0; a < num_actions; ++a)
        chain.row(s) += transitions.row(static_cast<Eigen::Index>(s) * num_actions + a) / num_actions;
    report.communicating = is_strongly_connected(chain);
    report.aperiodic = report.communicating && chain_period(chain) == 1;
    if (!report.communicating)
      report.issues.push_back({ValidationIssue::Kind::kNotCommunicatingUnderUniform, -1, -1,
                               "chain under the uniform policy is not communicating"});
  }
  return report;
}

Mdp::Mdp(int num_states, int num_actions, double discount, Matrix transitions)
    : num_states_(num_states), num_actions_(num_actions), discount_(discount), transitions_(std::move(transitions)) {
  const ValidationReport report = validate_mdp(num_states_, num_actions_, discount_, transitions_);
  for (const auto& issue : report.issues) {
    if (issue.kind == ValidationIssue::Kind::kRowNotStochastic) throw Error(Errc::kRowNotStochastic, issue.message);
    if (issue.kind == ValidationIssue::Kind::kDiscountOutOfRange) throw Error(Errc::kDiscountOutOfRange, issue.message);
  }
}

Mdp Mdp::with_row(int s, int a, const Vector& next_state_probs) const {
  Matrix t = transitions_;
  t.row(index(s, a)) = next_state_probs.transpose();
  return Mdp(num_states_, num_actions_, discount_, std::move(t));
}

ValidationReport Mdp::validate() const { return validate_mdp(num_states_, num_actions_, discount_, transitions_); }

void check_policy(const Mdp& m, const DeterministicPolicy& pi) {
  if (pi.num_states() != m.num_states()) throw Error(Errc::kShapeMismatch, "policy size does not match state count");
  for (int a : pi.action)
    if (a < 0 || a >= m.num_actions()) throw Error(Errc::kIndexOutOfRange, "policy action index out of range");
}

void check_reward_vector(const Mdp& m, const Vector& r) {
  if (r.size() != m.num_states()) throw Error(Errc::kShapeMismatch, "reward vector size does not match state count");
  for (Eigen::Index i = 0; i < r.size(); ++i)
    if (!(r[i] >= 0.0 && r[i] <= 1.0)) throw Error(Errc::kRewardOutOfBox, "reward entry outside [0, 1]");
}

Matrix policy_transition(const Mdp& m, const DeterministicPolicy& pi) {
  check_policy(m, pi);
  Matrix p(m.num_states(), m.num_states());
  for (int s = 0; s < m.num_states(); ++s) p.row(s) = m.row(s, pi(s));
  return p;
}

PolicyMatrices policy_matrices(const Mdp& m, const DeterministicPolicy& pi) {
  PolicyMatrices out;
  out.transition = policy_transition(m, pi);
  const Eigen::Index n = m.num_states();
  const Matrix system = Matrix::Identity(n, n) - m.discount() * out.transition;
  Eigen::PartialPivLU<Matrix> lu(system);
  out.fundamental = lu.inverse();
  if (!out.fundamental.allFinite()) throw Error(Errc::kSingularSystem, "I - gamma P_pi is numerically singular");
  return out;
}

Vector policy_value(const Mdp& m, const DeterministicPolicy& pi, const Vector& r) {
  check_reward_vector(m, r);
  const Matrix p = policy_transition(m, pi);
  const Eigen::Index n = m.num_states();
  Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(n, n) - m.discount() * p);
  Vector v = lu.solve(r);
  if (!v.allFinite()) throw Error(Errc::kSingularSystem, "policy evaluation failed");
  return v;
}

Matrix action_value(const Mdp& m, const DeterministicPolicy& pi, const Matrix& reward_sa) {
  if (reward_sa.rows() != m.num_states() || reward_sa.cols() != m.num_actions())
    throw Error(Errc::kShapeMismatch, "reward matrix must be S x A");
  if ((reward_sa.array() < 0.0).any() || (reward_sa.array() > 1.0).any())
    throw Error(Errc::kRewardOutOfBox, "reward entry outside [0, 1]");
  check_policy(m, pi);
  Vector r(m.num_states());
  for (int s = 0; s < m.num_states(); ++s) r[s] = reward_sa(s, pi(s));
  const Vector v = policy_value(m, pi, r);
  Matrix q(m.num_states(), m.num_actions());
  for (int s = 0; s < m.num_states(); ++s)
    for (int a = 0; a < m.num_actions(); ++a) q(s, a) = reward_sa(s, a) + m.discount() * m.row(s, a).dot(v);
  return q;
}

namespace {

Matrix bellman_q(const Mdp& m, const Matrix& reward_sa, const Vector& v) {
  Matrix q(m.num_states(), m.num_actions());
  for (int s = 0; s < m.num_states(); ++s)
    for (int a = 0; a < m.num_actions(); ++a) q(s, a) = reward_sa(s, a) + m.discount() * m.row(s, a).dot(v);
  return q;
}

int lowest_argmax(const Eigen::Ref<const Eigen::RowVectorXd>& q) {
  const double best = q.maxCoeff();
  for (Eigen::Index a = 0; a < q.size(); ++a)
    if (q[a] >= best - kTieTol) return static_cast<int>(a);
  return 0;
}

}  // namespace

OptimalSolution value_iteration(const Mdp& m, const Matrix& reward_sa, double tol) {
  if (!(tol > 0.0)) throw Error(Errc::kInvalidArgument, "value iteration tolerance must be positive");
  if (reward_sa.rows() != m.num_states() || reward_sa.cols() != m.num_actions())
    throw Error(Errc::kShapeMismatch, "reward matrix must be S x A");
  const double g = m.discount();
  const double threshold = tol * (1.0 - g) / (2.0 * g);
  OptimalSolution out;
  Vector v = Vector::Zero(m.num_states());
  for (;;) {
    const Matrix q = bellman_q(m, reward_sa, v);
    const Vector tv = q.rowwise().maxCoeff();
    ++out.iterations;
    if ((tv - v).lpNorm<Eigen::Infinity>() <= threshold) {
      out.policy.action.resize(static_cast<std::size_t>(m.num_states()));
      for (int s = 0; s < m.num_states(); ++s) out.policy.action[static_cast<std::size_t>(s)] = lowest_argmax(q.row(s));
      out.value = std::move(v);
      return out;
    }
    v = tv;
  }
}

DeterministicPolicy policy_iteration(const Mdp& m, const Matrix& reward_sa, int* iterations) {
  DeterministicPolicy pi{std::vector<int>(static_cast<std::size_t>(m.num_states()), 0)};
  int iter = 0;
  for (;;) {
    ++iter;
    const Matrix q = action_value(m, pi, reward_sa);
    bool changed = false;
    for (int s = 0; s < m.num_states(); ++s) {
      const double best = q.row(s).maxCoeff();
      if (q(s, pi(s)) >= best - kTieTol) continue;
      pi.action[static_cast<std::size_t>(s)] = lowest_argmax(q.row(s));
      changed = true;
    }
    if (!changed) break;
  }
  if (iterations) *iterations = iter;
  return pi;
}

bool is_strongly_connected(const Matrix& chain) {
  int ncomp = 0;
  strongly_connected_components(chain, &ncomp);
  return ncomp == 1;
}

int chain_period(const Matrix& chain) {
  const int n = static_cast<int>(chain.rows());
  std::vector<int> level(n, -1);
  std::queue<int> queue;
  level[0] = 0;
  queue.push(0);
  int period = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop();
    for (int w = 0; w < n; ++w) {
      if (chain(u, w) <= 0.0) continue;
      if (level[w] < 0) {
        level[w] = level[u] + 1;
        queue.push(w);
      } else {
        period = std::gcd(period, std::abs(level[u] + 1 - level[w]));
      }
    }
  }
  return period == 0 ? 1 : period;
}

StationaryResult stationary_distribution(const Matrix& chain) {
  const Eigen::Index n = chain.rows();
  if (n == 0 || chain.cols() != n) throw Error(Errc::kShapeMismatch, "chain must be square and non-empty");
  int ncomp = 0;
  const std::vector<int> comp = strongly_connected_components(chain, &ncomp);

  std::vector<bool> closed(static_cast<std::size_t>(ncomp), true);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (chain(i, j) > 0.0 && comp[i] != comp[j]) closed[static_cast<std::size_t>(comp[i])] = false;

  // First closed class in state order.
  int chosen = -1, closed_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!closed[static_cast<std::size_t>(comp[i])]) continue;
    if (chosen < 0) chosen = comp[i];
  }
  for (int c = 0; c < ncomp; ++c) closed_count += closed[static_cast<std::size_t>(c)] ? 1 : 0;

  std::vector<Eigen::Index> members;
  for (Eigen::Index i = 0; i < n; ++i)
    if (comp[i] == chosen) members.push_back(i);
  const auto k = static_cast<Eigen::Index>(members.size());

  Matrix system(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      system(j, i) = (i == j ? 1.0 : 0.0) - chain(members[i], members[j]);
  system.row(k - 1).setOnes();
  Vector rhs = Vector::Zero(k);
  rhs[k - 1] = 1.0;
  Vector local = Eigen::PartialPivLU<Matrix>(system).solve(rhs);
  local = local.cwiseMax(0.0);
  local /= local.sum();

  StationaryResult out;
  out.distribution = Vector::Zero(n);
  for (Eigen::Index i = 0; i < k; ++i) out.distribution[members[i]] = local[i];
  out.unique = closed_count == 1;
  return out;
}

Matrix uniform_chain(const Mdp& m) {
  StochasticPolicy pi{Matrix::Constant(m.num_states(), m.num_actions(), 1.0 / m.num_actions())};
  return policy_chain(m, pi);
}

Matrix policy_chain(const Mdp& m, const StochasticPolicy& pi) {
  if (pi.probs.rows() != m.num_states() || pi.probs.cols() != m.num_actions())
    throw Error(Errc::kShapeMismatch, "stochastic policy must be S x A");
  Matrix chain = Matrix::Zero(m.num_states(), m.num_states());
  for (int s = 0; s < m.num_states(); ++s)
    for (int a = 0; a < m.num_actions(); ++a)
      if (pi.probs(s, a) > 0.0) chain.row(s) += pi.probs(s, a) * m.row(s, a);
  return chain;
}

Matrix occupancy_chain(const Mdp& m, const Matrix& omega) {
  if (omega.rows() != m.num_states() || omega.cols() != m.num_actions())
    throw Error(Errc::kShapeMismatch, "occupancy must be S x A");
  StochasticPolicy pi{Matrix(m.num_states(), m.num_actions())};
  for (int s = 0; s < m.num_states(); ++s) {
    const double mass = omega.row(s).sum();
    if (mass > 0.0)
      pi.probs.row(s) = omega.row(s) / mass;
    else
      pi.probs.row(s).setConstant(1.0 / m.num_actions());
  }
  return policy_chain(m, pi);
}

EmpiricalModel::EmpiricalModel(int num_states, int num_actions, double discount)
    : num_states_(num_states),
      num_actions_(num_actions),
      discount_(discount),
      counts_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions) *
                  static_cast<std::size_t>(num_states),
              0),
      sa_visits_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions), 0),
      s_visits_(static_cast<std::size_t>(num_states), 0) {
  if (num_states < 1 || num_actions < 1) throw Error(Errc::kInvalidArgument, "empty empirical model");
  if (!(discount > 0.0 && discount < 1.0)) throw Error(Errc::kDiscountOutOfRange, "discount outside (0, 1)");
}

void EmpiricalModel::update(int s, int a, int next) {
  if (s < 0 || s >= num_states_ || next < 0 || next >= num_states_ || a < 0 || a >= num_actions_)
    throw Error(Errc::kIndexOutOfRange, "transition index out of range");
  ++counts_[index(s, a) * static_cast<std::size_t>(num_states_) + static_cast<std::size_t>(next)];
  ++sa_visits_[index(s, a)];
  ++s_visits_[static_cast<std::size_t>(s)];
  ++total_;
  estimate_.reset();
}

std::uint64_t EmpiricalModel::count(int s, int a, int next) const {
  return counts_[index(s, a) * static_cast<std::size_t>(num_states_) + static_cast<std::size_t>(next)];
}

Matrix EmpiricalModel::visit_matrix() const {
  Matrix n(num_states_, num_actions_);
  for (int s = 0; s < num_states_; ++s)
    for (int a = 0; a < num_actions_; ++a) n(s, a) = static_cast<double>(sa_visits_[index(s, a)]);
  return n;
}

const Mdp& EmpiricalModel::estimate() const {
  if (!estimate_) {
    Matrix t(static_cast<Eigen::Index>(num_states_) * num_actions_, num_states_);
    for (int s = 0; s < num_states_; ++s) {
      for (int a = 0; a < num_actions_; ++a) {
        const auto r = static_cast<Eigen::Index>(index(s, a));
        const std::uint64_t n = sa_visits_[index(s, a)];
        if (n == 0) {
          t.row(r).setConstant(1.0 / num_states_);
          continue;
        }
        for (int j = 0; j < num_states_; ++j)
          t(r, j) = static_cast<double>(counts_[index(s, a) * static_cast<std::size_t>(num_states_) +
                                                static_cast<std::size_t>(j)]) /
                    static_cast<double>(n);
      }
    }
    estimate_.emplace(num_states_, num_actions_, discount_, std::move(t));
  }
  return *estimate_;
}

Mdp read_mdp(std::istream& in) {
  int s = 0, a = 0;
  double g = 0.0;
  if (!(in >> s >> a >> g)) throw Error(Errc::kParse, "expected header 'S A gamma'");
  if (s < 1 || a < 1) throw Error(Errc::kParse, "S and A must be positive");
  Matrix t(static_cast<Eigen::Index>(s) * a, s);
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    for (int j = 0; j < s; ++j)
      if (!(in >> t(r, j))) throw Error(Errc::kParse, "truncated transition rows");
    // Rows written with ~12 significant digits can miss 1 by a few ulps of
    // the last digit; renormalise those before the strict check.
    const double sum = t.row(r).sum();
    if (std::abs(sum - 1.0) <= 1e-9 && (t.row(r).array() >= 0.0).all()) t.row(r) /= sum;
  }
  return Mdp(s, a, g, std::move(t));
}

void write_mdp(std::ostream& out, const Mdp& m) {
  const auto old_precision = out.precision();
  out << m.num_states() << ' ' << m.num_actions() << ' ' << std::setprecision(17) << m.discount() << '\n';
  for (Eigen::Index r = 0; r < m.transitions().rows(); ++r) {
    for (Eigen::Index j = 0; j < m.transitions().cols(); ++j) {
      if (j) out << ' ';
      out << m.transitions()(r, j);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

Mdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open " + path);
  return read_mdp(in);
}

void save_mdp(const std::string& path, const Mdp& m) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::kIo, "cannot write " + path);
  write_mdp(out, m);
  if (!out) throw Error(Errc::kIo, "write failed for " + path);
}

}  // namespace mrpe
