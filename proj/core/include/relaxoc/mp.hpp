#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "relaxoc/integrate.hpp"
#include "relaxoc/model.hpp"

namespace relaxoc {

/// (lambda0, lambda_f, lambda_g) with lambda0 >= 0 and lambda_f >= 0.
struct MultiplierTuple {
  double lambda0 = 0.0;
  Vec lambda_f;
  Vec lambda_g;
  bool normalized = false;

  double l1() const;
  bool is_zero() const { return l1() == 0.0; }
  /// (lambda0, lambda_f, lambda_g) stacked.
  Vec stacked() const;
  MultiplierTuple scaled(double c) const;
};

/// A relaxed trajectory together with the relaxed control that generates it.
struct Triple {
  Trajectory x;
  RelaxedControl rc;
};

/// Raised in strict mode when the Hamiltonian argmax sits on the artificial
/// window edge, i.e. the supremum over U may be unbounded.
class WindowBoundaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MpOptions {
  double window = 100.0;
  int seeds = 64;       // per clipped interval
  bool strict = false;  // WindowBoundaryError instead of boundary_flag
  double tol_adm = 1e-6;
  double tol = 1e-6;    // margin tolerance for accepting a tuple
  int max_cut_rounds = 400;
  int cuts_per_round = 24;
};

double hamiltonian(const ControlProblem& prob, const RowVec& p, double t, const Vec& x,
                   const Vec& u);

struct HamiltonianMax {
  Vec u_star;
  double value = 0.0;
  bool boundary_flag = false;
};

/// Finite U: exact argmax, lowest index wins ties. Scalar interval or box
/// sets: endpoints of the clipped pieces plus dense seeds refined by Newton
/// on dH/du; leftmost candidate wins ties.
HamiltonianMax maximize_hamiltonian(const ControlProblem& prob, const RowVec& p, double t,
                                    const Vec& x, const MpOptions& opts = {});

struct ConditionResiduals {
  double stationarity = 0.0;
  double transversality_t0 = 0.0;
  double transversality_t1 = 0.0;
  double slackness = 0.0;
  double maximum_condition = 0.0;         // sup_t (max_u H - <p, x'>)_+
  double maximum_condition_signed = 0.0;  // sup_t (max_u H - <p, x'>)
  bool boundary_flag = false;
  AdjointArc p;

  double worst() const;
};

/// Integrates the costate from the terminal transversality value and
/// evaluates stationarity, transversality, slackness and the maximum
/// condition on the grid of the triple. Throws ModelError
/// for a zero tuple or an inadmissible triple.
ConditionResiduals condition_residuals(const ControlProblem& prob, const Triple& triple,
                                       const MultiplierTuple& mult, const MpOptions& opts = {});

enum class Lambda0Mode { Free, Zero };

struct FoundMultiplier {
  MultiplierTuple tuple;
  ConditionResiduals residuals;
  double margin = 0.0;
};

struct MultiplierSearch {
  std::vector<FoundMultiplier> found;
  /// Best margin over all sign patterns (-inf if every LP was infeasible).
  double best_margin = -std::numeric_limits<double>::infinity();
  bool degenerate = false;
  int lp_solves = 0;
  std::size_t constraint_pool = 0;
};

/// Maximizes the margin tau of the maximum-condition inequalities over
/// l1-normalized tuples satisfying transversality at t0 and slackness.
/// lambda_g is searched one sign orthant at a time so that the
/// normalization cannot be met by a cancelling pair.
MultiplierSearch find_multipliers(const ControlProblem& prob, const Triple& triple,
                                  Lambda0Mode mode, const MpOptions& opts = {});

struct RegularityVerdict {
  bool regular = false;
  double margin = 0.0;
  std::optional<FoundMultiplier> witness;
  std::string certificate;
  std::string annotation;
};

/// Regular iff the zero-mode search finds nothing at tol_reg.
RegularityVerdict regularity_check(const ControlProblem& prob, const Triple& triple,
                                   double tol_reg = 1e-7, MpOptions opts = {});

}  // namespace relaxoc
