#include "core/lp.hpp"

#include <cmath>
#include <vector>

#include "core/error.hpp"

namespace mrpe {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
    case LpStatus::kIterationLimit:
      return "iteration limit";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kRatioTieTol = 1e-12;

// x_j = offset + sign * z[pos] - z[neg] (neg < 0 when absent).
struct ColumnMap {
  double offset = 0.0;
  double sign = 1.0;
  int pos = -1;
  int neg = -1;
};

class Tableau {
 public:
  Tableau(Matrix a, Vector b) : rows_(a.rows()), table_(a.rows() + 1, a.cols() + 1) {
    table_.topLeftCorner(a.rows(), a.cols()) = a;
    table_.topRightCorner(a.rows(), 1) = b;
    table_.bottomRows(1).setZero();
  }

  Matrix& table() { return table_; }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return table_.cols() - 1; }
  std::vector<int>& basis() { return basis_; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    table_.row(r) /= table_(r, c);
    for (Eigen::Index i = 0; i < table_.rows(); ++i) {
      if (i == r) continue;
      const double factor = table_(i, c);
      if (factor != 0.0) table_.row(i) -= factor * table_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = static_cast<int>(c);
  }

  // Minimises the objective row over columns [0, allowed). Bland's rule.
  LpStatus run(Eigen::Index allowed, const LpOptions& options, int* iterations) {
    const Eigen::Index rhs = table_.cols() - 1;
    for (;;) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        if (table_(rows_, j) < -options.optimality_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return LpStatus::kOptimal;
      if (*iterations >= options.max_iterations) return LpStatus::kIterationLimit;
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < rows_; ++i) {
        const double coeff = table_(i, enter);
        if (coeff <= kPivotTol) continue;
        const double ratio = table_(i, rhs) / coeff;
        if (leave < 0 || ratio < best - kRatioTieTol ||
            (std::abs(ratio - best) <= kRatioTieTol && basis_[static_cast<std::size_t>(i)] <
                                                             basis_[static_cast<std::size_t>(leave)])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return LpStatus::kUnbounded;
      pivot(leave, enter);
      ++*iterations;
    }
  }

 private:
  Eigen::Index rows_;
  Matrix table_;
  std::vector<int> basis_;
};

}  // namespace

LpResult lp_solve(const LpProblem& problem, const LpOptions& options) {
  const Eigen::Index n = problem.objective.size();
  if (n == 0) throw Error(Errc::kInvalidArgument, "LP has no variables");
  const Eigen::Index n_eq = problem.eq_lhs.rows();
  const Eigen::Index n_le = problem.le_lhs.rows();
  if ((n_eq > 0 && (problem.eq_lhs.cols() != n || problem.eq_rhs.size() != n_eq)) ||
      (n_le > 0 && (problem.le_lhs.cols() != n || problem.le_rhs.size() != n_le)))
    throw Error(Errc::kShapeMismatch, "LP constraint shapes do not match the objective");
  const Vector lower = problem.lower.size() ? problem.lower : Vector::Zero(n);
  const Vector upper =
      problem.upper.size() ? problem.upper : Vector::Constant(n, std::numeric_limits<double>::infinity());
  if (lower.size() != n || upper.size() != n) throw Error(Errc::kShapeMismatch, "LP bounds have the wrong size");
  if (!problem.objective.allFinite() || (n_eq && !problem.eq_lhs.allFinite()) || (n_le && !problem.le_lhs.allFinite()))
    throw Error(Errc::kInvalidArgument, "LP data must be finite");

  LpResult result;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (lower[j] > upper[j]) return result;  // infeasible bounds
  }

  // Variable substitution into z >= 0.
  std::vector<ColumnMap> map(static_cast<std::size_t>(n));
  int nz = 0;
  std::vector<Eigen::Index> upper_rows;  // variables needing an explicit upper-bound row
  for (Eigen::Index j = 0; j < n; ++j) {
    ColumnMap& cm = map[static_cast<std::size_t>(j)];
    if (std::isfinite(lower[j])) {
      cm.offset = lower[j];
      cm.pos = nz++;
      if (std::isfinite(upper[j])) upper_rows.push_back(j);
    } else if (std::isfinite(upper[j])) {
      cm.offset = upper[j];
      cm.sign = -1.0;
      cm.pos = nz++;
    } else {
      cm.pos = nz++;
      cm.neg = nz++;
    }
  }
  const Eigen::Index n_upper = static_cast<Eigen::Index>(upper_rows.size());
  const Eigen::Index n_slack = n_le + n_upper;
  const Eigen::Index n_struct = nz;
  const Eigen::Index n_cols = n_struct + n_slack;
  const Eigen::Index m = n_eq + n_le + n_upper;

  Matrix a = Matrix::Zero(m, n_cols);
  Vector b(m);
  Vector offsets(n);
  for (Eigen::Index j = 0; j < n; ++j) offsets[j] = map[static_cast<std::size_t>(j)].offset;
  auto put_row = [&](Eigen::Index r, const Eigen::Ref<const Eigen::RowVectorXd>& coeffs, double rhs) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const ColumnMap& cm = map[static_cast<std::size_t>(j)];
      a(r, cm.pos) += coeffs[j] * cm.sign;
      if (cm.neg >= 0) a(r, cm.neg) -= coeffs[j];
    }
    b[r] = rhs - coeffs.dot(offsets.transpose());
  };
  for (Eigen::Index i = 0; i < n_eq; ++i) put_row(i, problem.eq_lhs.row(i), problem.eq_rhs[i]);
  for (Eigen::Index i = 0; i < n_le; ++i) {
    put_row(n_eq + i, problem.le_lhs.row(i), problem.le_rhs[i]);
    a(n_eq + i, n_struct + i) = 1.0;
  }
  for (Eigen::Index k = 0; k < n_upper; ++k) {
    const Eigen::Index j = upper_rows[static_cast<std::size_t>(k)];
    const Eigen::Index r = n_eq + n_le + k;
    a(r, map[static_cast<std::size_t>(j)].pos) = 1.0;
    b[r] = upper[j] - lower[j];
    a(r, n_struct + n_le + k) = 1.0;
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    if (b[r] < 0.0) {
      a.row(r) *= -1.0;
      b[r] = -b[r];
    }
  }

  // Standard-form cost (minimisation).
  Vector cost = Vector::Zero(n_cols);
  const double sense = problem.maximize ? -1.0 : 1.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const ColumnMap& cm = map[static_cast<std::size_t>(j)];
    cost[cm.pos] += sense * problem.objective[j] * cm.sign;
    if (cm.neg >= 0) cost[cm.neg] -= sense * problem.objective[j];
  }

  // Phase 1: one artificial per row.
  Matrix a_art(m, n_cols + m);
  a_art << a, Matrix::Identity(m, m);
  Tableau tab(a_art, b);
  tab.basis().resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) tab.basis()[static_cast<std::size_t>(i)] = static_cast<int>(n_cols + i);
  Matrix& t = tab.table();
  for (Eigen::Index i = 0; i < m; ++i) t.row(m) -= t.row(i);
  for (Eigen::Index i = 0; i < m; ++i) t(m, n_cols + i) = 0.0;

  int iterations = 0;
  LpStatus status = tab.run(n_cols, options, &iterations);
  result.iterations = iterations;
  if (status == LpStatus::kIterationLimit) {
    result.status = status;
    return result;
  }
  const double scale = std::max(1.0, b.size() ? b.lpNorm<Eigen::Infinity>() : 0.0);
  if (-t(m, t.cols() - 1) > options.feasibility_tol * scale) {
    result.status = LpStatus::kInfeasible;
    return result;
  }

  // Drive artificials out of the basis; rows where that is impossible are redundant.
  std::vector<bool> keep(static_cast<std::size_t>(m), true);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis()[static_cast<std::size_t>(i)] < n_cols) continue;
    Eigen::Index col = -1;
    for (Eigen::Index j = 0; j < n_cols; ++j) {
      if (std::abs(t(i, j)) > 1e-9) {
        col = j;
        break;
      }
    }
    if (col >= 0)
      tab.pivot(i, col);
    else
      keep[static_cast<std::size_t>(i)] = false;
  }
  std::vector<Eigen::Index> kept_rows;
  for (Eigen::Index i = 0; i < m; ++i)
    if (keep[static_cast<std::size_t>(i)]) kept_rows.push_back(i);
  const auto m2 = static_cast<Eigen::Index>(kept_rows.size());

  Matrix a2(m2, n_cols);
  Vector b2(m2);
  for (Eigen::Index k = 0; k < m2; ++k) {
    a2.row(k) = t.row(kept_rows[static_cast<std::size_t>(k)]).head(n_cols);
    b2[k] = t(kept_rows[static_cast<std::size_t>(k)], t.cols() - 1);
  }
  Tableau tab2(a2, b2);
  tab2.basis().resize(static_cast<std::size_t>(m2));
  for (Eigen::Index k = 0; k < m2; ++k)
    tab2.basis()[static_cast<std::size_t>(k)] = tab.basis()[static_cast<std::size_t>(kept_rows[static_cast<std::size_t>(k)])];
  Matrix& t2 = tab2.table();
  t2.row(m2).head(n_cols) = cost.transpose();
  t2(m2, n_cols) = 0.0;
  for (Eigen::Index k = 0; k < m2; ++k) {
    const double cb = cost[tab2.basis()[static_cast<std::size_t>(k)]];
    if (cb != 0.0) t2.row(m2) -= cb * t2.row(k);
  }

  status = tab2.run(n_cols, options, &iterations);
  result.iterations = iterations;
  if (status != LpStatus::kOptimal) {
    result.status = status;
    return result;
  }

  Vector z = Vector::Zero(n_cols);
  for (Eigen::Index k = 0; k < m2; ++k) z[tab2.basis()[static_cast<std::size_t>(k)]] = t2(k, n_cols);

  // Re-solve A_B z_B = b against every original row (least squares; the
  // system is consistent, so the residual only carries rounding).
  if (m2 > 0 && m > 0) {
    Matrix basis_matrix(m, m2);
    for (Eigen::Index c = 0; c < m2; ++c) basis_matrix.col(c) = a.col(tab2.basis()[static_cast<std::size_t>(c)]);
    Eigen::ColPivHouseholderQR<Matrix> qr(basis_matrix);
    if (qr.rank() == m2) {
      const Vector zb = qr.solve(b);
      if (zb.allFinite() && zb.minCoeff() > -1e-7 && (basis_matrix * zb - b).lpNorm<Eigen::Infinity>() < 1e-7) {
        for (Eigen::Index k = 0; k < m2; ++k) z[tab2.basis()[static_cast<std::size_t>(k)]] = std::max(0.0, zb[k]);
      }
    }
  }

  result.point.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const ColumnMap& cm = map[static_cast<std::size_t>(j)];
    result.point[j] = cm.offset + cm.sign * z[cm.pos] - (cm.neg >= 0 ? z[cm.neg] : 0.0);
  }
  result.optimum = problem.objective.dot(result.point);
  result.status = LpStatus::kOptimal;
  return result;
}

}  // namespace mrpe
