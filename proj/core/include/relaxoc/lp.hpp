#pragma once

#include <vector>

#include "relaxoc/model.hpp"

namespace relaxoc {

/// maximize c'x  s.t.  A_eq x = b_eq,  A_le x <= b_le,  x_j >= 0 unless free[j].
struct LinearProgram {
  Vec c;
  Mat A_eq;
  Vec b_eq;
  Mat A_le;
  Vec b_le;
  std::vector<bool> free;  // empty means all variables nonnegative
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpOptions {
  double feasibility_tol = 1e-9;
  double pivot_tol = 1e-11;
  int max_iterations = 20000;
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vec x;
  double objective = 0.0;
  /// A pivot with zero step or a zero basic variable at the optimum.
  bool degenerate = false;
  int iterations = 0;
};

const char* to_string(LpStatus s);

/// Dense two-phase tableau simplex with Bland's rule.
LpResult solve_lp(const LinearProgram& lp, const LpOptions& opts = {});

}  // namespace relaxoc
