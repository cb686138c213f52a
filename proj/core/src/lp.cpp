#include "relaxoc/lp.hpp"

#include <cmath>

namespace relaxoc {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
  }
  return "?";
}

namespace {

class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols) : T_(Mat::Zero(rows + 1, cols + 1)), basis_(rows) {}

  Mat& T() { return T_; }
  Eigen::Index rows() const { return T_.rows() - 1; }
  Eigen::Index cols() const { return T_.cols() - 1; }
  Eigen::Index rhs() const { return T_.cols() - 1; }
  std::vector<Eigen::Index>& basis() { return basis_; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    T_.row(r) /= T_(r, c);
    for (Eigen::Index i = 0; i < T_.rows(); ++i) {
      if (i == r) continue;
      const double f = T_(i, c);
      if (f != 0.0) T_.row(i) -= f * T_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  /// Minimizes the objective row over columns [0, allowed). Bland's rule
  /// for both entering and leaving choices.
  LpStatus run(Eigen::Index allowed, const LpOptions& o, int& iters, bool& degenerate) {
    const Eigen::Index R = rows(), b = rhs();
    while (true) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j)
        if (T_(R, j) < -o.pivot_tol * 10.0) {
          enter = j;
          break;
        }
      if (enter < 0) return LpStatus::Optimal;
      if (iters >= o.max_iterations) return LpStatus::IterationLimit;
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < R; ++i) {
        const double a = T_(i, enter);
        if (a <= o.pivot_tol) continue;
        const double ratio = T_(i, b) / a;
        if (leave < 0 || ratio < best - 1e-14 * (1.0 + std::fabs(best)) ||
            (std::fabs(ratio - best) <= 1e-14 * (1.0 + std::fabs(best)) &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      if (best <= o.pivot_tol) degenerate = true;
      pivot(leave, enter);
      ++iters;
    }
  }

 private:
  Mat T_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const LpOptions& opts) {
  const Eigen::Index nv = lp.c.size();
  const Eigen::Index me = lp.A_eq.rows(), ml = lp.A_le.rows();
  if ((me > 0 && lp.A_eq.cols() != nv) || (ml > 0 && lp.A_le.cols() != nv) ||
      lp.b_eq.size() != me || lp.b_le.size() != ml ||
      (!lp.free.empty() && static_cast<Eigen::Index>(lp.free.size()) != nv))
    throw ModelError("linear program: inconsistent dimensions");

  // Column layout: one column per variable, a second (negated) one per free
  // variable, then one slack per inequality row, then artificials.
  std::vector<Eigen::Index> neg_col(static_cast<std::size_t>(nv), -1);
  Eigen::Index ns = nv;
  for (Eigen::Index j = 0; j < nv; ++j)
    if (!lp.free.empty() && lp.free[static_cast<std::size_t>(j)]) neg_col[static_cast<std::size_t>(j)] = ns++;
  const Eigen::Index n_struct = ns + ml;
  const Eigen::Index R = me + ml;
  Tableau tab(R, n_struct + R);
  Mat& T = tab.T();
  const Eigen::Index b = tab.rhs();

  auto fill = [&](Eigen::Index row, const auto& a, double rhs) {
    for (Eigen::Index j = 0; j < nv; ++j) {
      T(row, j) = a(j);
      if (neg_col[static_cast<std::size_t>(j)] >= 0) T(row, neg_col[static_cast<std::size_t>(j)]) = -a(j);
    }
    T(row, b) = rhs;
  };
  for (Eigen::Index i = 0; i < me; ++i) fill(i, lp.A_eq.row(i), lp.b_eq[i]);
  for (Eigen::Index i = 0; i < ml; ++i) {
    fill(me + i, lp.A_le.row(i), lp.b_le[i]);
    T(me + i, ns + i) = 1.0;
  }
  for (Eigen::Index i = 0; i < R; ++i) {
    if (T(i, b) < 0.0) T.row(i) = -T.row(i);
    T(i, n_struct + i) = 1.0;
    tab.basis()[static_cast<std::size_t>(i)] = n_struct + i;
  }

  LpResult res;
  double bscale = 1.0;
  for (Eigen::Index i = 0; i < R; ++i) bscale = std::max(bscale, std::fabs(T(i, b)));

  // Phase 1: minimize the sum of artificials.
  T.row(R).setZero();
  for (Eigen::Index i = 0; i < R; ++i) T.row(R) -= T.row(i);
  for (Eigen::Index i = 0; i < R; ++i) T(R, n_struct + i) = 0.0;
  LpStatus st = tab.run(n_struct, opts, res.iterations, res.degenerate);
  if (st == LpStatus::IterationLimit) {
    res.status = st;
    return res;
  }
  if (-T(R, b) > opts.feasibility_tol * bscale) {
    res.status = LpStatus::Infeasible;
    return res;
  }
  // Pivot remaining artificials out where a structural column allows it;
  // rows where none does are redundant and stay inert.
  for (Eigen::Index i = 0; i < R; ++i) {
    if (tab.basis()[static_cast<std::size_t>(i)] < n_struct) continue;
    for (Eigen::Index j = 0; j < n_struct; ++j)
      if (std::fabs(T(i, j)) > 1e-9) {
        tab.pivot(i, j);
        break;
      }
  }

  // Phase 2 on the original objective (as a minimization of -c).
  T.row(R).setZero();
  for (Eigen::Index j = 0; j < nv; ++j) {
    T(R, j) = -lp.c[j];
    if (neg_col[static_cast<std::size_t>(j)] >= 0) T(R, neg_col[static_cast<std::size_t>(j)]) = lp.c[j];
  }
  for (Eigen::Index i = 0; i < R; ++i) {
    const Eigen::Index bc = tab.basis()[static_cast<std::size_t>(i)];
    const double cb = T(R, bc);
    if (cb != 0.0) T.row(R) -= cb * T.row(i);
  }
  st = tab.run(n_struct, opts, res.iterations, res.degenerate);
  res.status = st;
  if (st != LpStatus::Optimal) return res;

  Vec z = Vec::Zero(n_struct + R);
  for (Eigen::Index i = 0; i < R; ++i) {
    const Eigen::Index bc = tab.basis()[static_cast<std::size_t>(i)];
    z[bc] = T(i, b);
    if (bc < n_struct && std::fabs(T(i, b)) <= opts.feasibility_tol) res.degenerate = true;
  }
  res.x = z.head(nv);
  for (Eigen::Index j = 0; j < nv; ++j)
    if (neg_col[static_cast<std::size_t>(j)] >= 0) res.x[j] -= z[neg_col[static_cast<std::size_t>(j)]];
  res.objective = lp.c.dot(res.x);
  return res;
}

}  // namespace relaxoc
