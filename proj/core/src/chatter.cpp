#include "relaxoc/chatter.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "relaxoc/io.hpp"

namespace relaxoc {

Mat average_weights(const RelaxedControl& rc, int s) {
  if (s < 1) throw ModelError("average_weights: s must be at least 1");
  const TimeGrid& g = rc.grid();
  const double t0 = g.t0(), L = g.t1() - g.t0();
  Mat alpha = Mat::Zero(s, rc.k());
  for (int j = 0; j < s; ++j) {
    const double a = t0 + L * j / s;
    const double b = j + 1 == s ? g.t1() : t0 + L * (j + 1) / s;
    double covered = 0.0;
    for (std::size_t q = g.interval_of(a); q + 1 < g.size() && g[q] < b; ++q) {
      const double len = std::min(b, g[q + 1]) - std::max(a, g[q]);
      if (len <= 0.0) continue;
      alpha.row(j) += len * rc.weights().row(static_cast<Eigen::Index>(q));
      covered += len;
    }
    alpha.row(j) /= covered;
  }
  return alpha;
}

Chattering build_chattering(const RelaxedControl& rc, int s) {
  const Mat alpha = average_weights(rc, s);
  const TimeGrid& g = rc.grid();
  const double t0 = g.t0(), t1 = g.t1(), L = t1 - t0;
  const double min_len = 1e-14 * L;

  Chattering out;
  auto& sch = out.schedule;
  sch.s = s;
  sch.N = rc.k();
  sch.t0 = t0;
  sch.t1 = t1;
  sch.alpha = alpha;

  std::vector<double> breaks{t0};
  std::vector<PiecewiseControl::Value> values;
  const int dim = rc.controls().front().dim();

  for (int j = 0; j < s; ++j) {
    const double a = t0 + L * j / s;
    const double b = j + 1 == s ? t1 : t0 + L * (j + 1) / s;
    double cum = 0.0;
    double left = a;
    for (int i = 0; i < rc.k(); ++i) {
      cum += alpha(j, i);
      // The last subinterval ends exactly at the coarse boundary.
      double right = i + 1 == rc.k() ? b : std::min(b, a + cum * (b - a));
      if (right - left <= min_len) continue;
      sch.subintervals.push_back({j, i, left, right});
      // Split further where the component control itself has breakpoints,
      // so every piece of u_s reads exactly one piece of a component.
      const auto& comp = rc.controls()[static_cast<std::size_t>(i)];
      auto piece_value = [&comp](double lo, double hi) {
        const std::size_t p = comp.piece_for_step(lo, hi);
        if (comp.is_constant_piece(p)) return PiecewiseControl::Value(comp.in_piece(p, lo));
        return PiecewiseControl::Value([comp, p](double t) { return comp.in_piece(p, t); });
      };
      double lo = left;
      for (double bp : comp.breakpoints()) {
        if (bp <= lo + min_len || bp >= right - min_len) continue;
        values.push_back(piece_value(lo, bp));
        breaks.push_back(bp);
        lo = bp;
      }
      values.push_back(piece_value(lo, right));
      breaks.push_back(right);
      left = right;
    }
  }
  sch.breakpoints = breaks;
  out.u = PiecewiseControl(std::move(breaks), std::move(values), dim);
  return out;
}

// --------------------------------------------------------------- study

bool ConvergenceTable::sup_error_decreasing() const {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].sup_error < rows[i - 1].sup_error)) return false;
  return true;
}

double ConvergenceTable::sup_error_rate() const {
  std::vector<double> lx, ly;
  for (const auto& r : rows)
    if (r.sup_error > 0.0) {
      lx.push_back(std::log(static_cast<double>(r.s)));
      ly.push_back(std::log(r.sup_error));
    }
  if (lx.size() < 2) return 0.0;
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string ConvergenceTable::csv() const {
  std::vector<std::vector<double>> body;
  for (const auto& r : rows) body.push_back({static_cast<double>(r.s), r.sup_error, r.endpoint_error});
  return io::csv({"s", "sup_error", "endpoint_error"}, body);
}

std::string ConvergenceTable::svg() const {
  io::Series sup{"sup error", {}, {}}, end{"endpoint error", {}, {}};
  for (const auto& r : rows) {
    sup.x.push_back(r.s);
    sup.y.push_back(r.sup_error);
    end.x.push_back(r.s);
    end.y.push_back(r.endpoint_error);
  }
  return io::svg_loglog("chattering convergence", "s", "error", {sup, end});
}

namespace {

TimeGrid subdivide(const TimeGrid& g, int factor) {
  if (factor <= 1) return g;
  std::vector<double> nodes;
  nodes.reserve((g.size() - 1) * static_cast<std::size_t>(factor) + 1);
  for (std::size_t i = 0; i + 1 < g.size(); ++i)
    for (int q = 0; q < factor; ++q) nodes.push_back(g[i] + (g[i + 1] - g[i]) * q / factor);
  nodes.push_back(g.t1());
  return TimeGrid::from_nodes(std::move(nodes));
}

}  // namespace

ConvergenceTable convergence_study(const ControlProblem& prob, const RelaxedControl& rc,
                                   const Vec& xi, const std::vector<int>& s_list,
                                   const TimeGrid& grid, int grid_refinement) {
  for (std::size_t i = 0; i < s_list.size(); ++i)
    if (s_list[i] < 1 || (i > 0 && s_list[i] <= s_list[i - 1]))
      throw ModelError("convergence study: s values must be positive and increasing");
  const Trajectory ref = integrate_relaxed(prob, rc, xi, grid);
  const TimeGrid base = subdivide(grid, grid_refinement);

  auto one = [&](int s) {
    const Chattering ch = build_chattering(rc, s);
    const TimeGrid fine = base.refined(ch.schedule.breakpoints);
    const Trajectory xs = integrate_state(prob, ch.u, xi, fine);
    ConvergenceRow row;
    row.s = s;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const std::size_t q = fine.nearest(grid[i]);
      row.sup_error = std::max(row.sup_error, (xs.at(q) - ref.at(i)).lpNorm<Eigen::Infinity>());
    }
    row.endpoint_error = (xs.terminal() - ref.terminal()).lpNorm<Eigen::Infinity>();
    return row;
  };

  std::vector<std::future<ConvergenceRow>> jobs;
  for (int s : s_list) jobs.push_back(std::async(std::launch::async, one, s));
  ConvergenceTable table;
  for (auto& j : jobs) table.rows.push_back(j.get());
  return table;
}

// --------------------------------------------------------- broken line

double BrokenLine::x1(double t) const {
  if (t <= vertices_t.front()) return vertices_x.front();
  if (t >= vertices_t.back()) return vertices_x.back();
  auto it = std::upper_bound(vertices_t.begin(), vertices_t.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - vertices_t.begin()) - 1;
  const double w = (t - vertices_t[i]) / (vertices_t[i + 1] - vertices_t[i]);
  return vertices_x[i] + w * (vertices_x[i + 1] - vertices_x[i]);
}

BrokenLine broken_line(const FSpec& f, int n) {
  if (n < 1) throw ModelError("broken_line: n must be at least 1");
  validate_fspec(*f);
  BrokenLine bl;
  bl.n = n;
  std::vector<double> slopes;
  const double dn = n;
  for (int s = 0; s < n; ++s) {
    const double lo = s / dn, hi = (s + 1) / dn;
    const double b = f->value(lo) - lo;
    const double c = f->value(hi) + hi;
    const double ts = 0.5 * (c - b);
    if (ts < lo - 1e-12 || ts > hi + 1e-12)
      throw std::logic_error("broken_line: switch point outside its knot interval");
    const double sw = std::clamp(ts, lo, hi);
    if (bl.vertices_t.empty()) {
      bl.vertices_t.push_back(lo);
      bl.vertices_x.push_back(f->value(lo));
    }
    if (sw - lo > 1e-15 && hi - sw > 1e-15) {
      bl.vertices_t.push_back(sw);
      bl.vertices_x.push_back(sw + b);
      slopes.push_back(1.0);
      slopes.push_back(-1.0);
    } else {
      slopes.push_back(sw - lo > 1e-15 ? 1.0 : -1.0);
    }
    bl.vertices_t.push_back(hi);
    bl.vertices_x.push_back(f->value(hi));
  }

  std::vector<PiecewiseControl::Value> vals;
  for (double sl : slopes) vals.emplace_back(Vec(Vec::Constant(1, sl)));
  bl.u = PiecewiseControl(bl.vertices_t, std::move(vals), 1);

  // Integrate piece by piece, also splitting at breaks of f; the integrand
  // is then a polynomial and 10-point Gauss-Legendre is exact for it up to
  // degree 19.
  using Gauss = boost::math::quadrature::gauss<double, 10>;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < bl.vertices_t.size(); ++i) {
    const double a = bl.vertices_t[i], b = bl.vertices_t[i + 1];
    const double xa = bl.vertices_x[i], sl = slopes[i];
    std::vector<double> cuts{a};
    for (double br : f->breaks())
      if (br > a && br < b) cuts.push_back(br);
    cuts.push_back(b);
    for (std::size_t q = 0; q + 1 < cuts.size(); ++q) {
      const double mid = 0.5 * (cuts[q] + cuts[q + 1]);
      // Evaluate f from the piece containing the sub-piece midpoint.
      std::size_t piece = 0;
      while (piece + 1 < f->pieces() && f->breaks()[piece + 1] <= mid) ++piece;
      const auto& coef = f->coeffs()[piece];
      auto fpiece = [&coef](double t) {
        double v = 0.0;
        for (auto it = coef.rbegin(); it != coef.rend(); ++it) v = v * t + *it;
        return v;
      };
      total += Gauss::integrate(
          [&](double t) {
            const double d = xa + sl * (t - a) - fpiece(t);
            return d * d + 1.0;
          },
          cuts[q], cuts[q + 1]);
    }
  }
  bl.x2_final = total;
  return bl;
}

}  // namespace relaxoc
