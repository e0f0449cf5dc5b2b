#include "fwq/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "fwq/error.hpp"
#include "fwq/rng.hpp"

namespace fwq {

double Landscape::wrap(double x) const {
  double P = period();
  double r = x - std::floor((x - xl) / P) * P;
  if (r >= xr) r -= P;
  if (r < xl) r = xl;
  return r;
}

double Landscape::circ_dist(double x, double y) const {
  double d = std::fabs(wrap(x) - wrap(y));
  return std::min(d, period() - d);
}

void check_periodic(const Landscape& L, double tol) {
  if (!L.U || !L.dU) fail(Err::ConfigInvalid, "landscape is missing U or dU");
  if (!(L.period() > 0)) fail(Err::ConfigInvalid, "landscape period must be positive");
  double u0 = L.U(L.xl), u1 = L.U(L.xr);
  double d0 = L.dU(L.xl), d1 = L.dU(L.xr);
  double su = std::max({1.0, std::fabs(u0), std::fabs(u1)});
  double sd = std::max({1.0, std::fabs(d0), std::fabs(d1)});
  if (std::fabs(u0 - u1) > tol * su || std::fabs(d0 - d1) > tol * sd)
    fail(Err::ConfigInvalid, "landscape is not periodic across the seam");
}

namespace {

struct CosSeg {
  double x0, x1, u0, u1;
};

struct CosTable {
  double xl, xr;
  std::vector<CosSeg> segs;

  const CosSeg& locate(double x) const {
    for (const auto& s : segs)
      if (x <= s.x1) return s;
    return segs.back();
  }
  double eval(double x) const {
    const CosSeg& s = locate(x);
    double t = (x - s.x0) / (s.x1 - s.x0);
    return s.u0 + (s.u1 - s.u0) * (1.0 - std::cos(std::numbers::pi * t)) / 2.0;
  }
  double slope(double x) const {
    const CosSeg& s = locate(x);
    double w = s.x1 - s.x0;
    double t = (x - s.x0) / w;
    return (s.u1 - s.u0) * std::numbers::pi / (2.0 * w) * std::sin(std::numbers::pi * t);
  }
};

double table_wrap(double x, double xl, double xr) {
  double P = xr - xl;
  double r = x - std::floor((x - xl) / P) * P;
  if (r >= xr) r -= P;
  if (r < xl) r = xl;
  return r;
}

}  // namespace

Landscape make_multiwell(const std::vector<double>& heights, double period, double xl,
                         std::string name) {
  std::size_t n = heights.size();
  if (n < 2 || n % 2 != 0)
    fail(Err::ConfigInvalid, "height list must have even length, at least 2");
  if (!(period > 0)) fail(Err::ConfigInvalid, "period must be positive");
  for (std::size_t i = 0; i < n; i += 2) {
    double prev = heights[(i + n - 1) % n], next = heights[(i + 1) % n];
    if (!(heights[i] > prev) || !(heights[i] > next))
      fail(Err::ConfigInvalid, "heights must strictly alternate maximum, minimum");
  }
  double root_sum = 0;
  for (std::size_t i = 0; i < n; ++i)
    root_sum += std::sqrt(std::fabs(heights[(i + 1) % n] - heights[i]));
  double k = period / root_sum;

  auto table = std::make_shared<CosTable>();
  table->xl = xl;
  table->xr = xl + period;
  double x = xl;
  for (std::size_t i = 0; i < n; ++i) {
    double u0 = heights[i], u1 = heights[(i + 1) % n];
    double w = k * std::sqrt(std::fabs(u1 - u0));
    table->segs.push_back({x, x + w, u0, u1});
    x += w;
  }
  table->segs.back().x1 = table->xr;  // absorb rounding in the last width

  Landscape L;
  L.xl = xl;
  L.xr = xl + period;
  L.name = std::move(name);
  L.U = [table](double y) { return table->eval(table_wrap(y, table->xl, table->xr)); };
  L.dU = [table](double y) { return table->slope(table_wrap(y, table->xl, table->xr)); };
  return L;
}

Landscape make_double_well(double h_left, double h_right, double top) {
  if (top == 0.0) top = 2.0 * h_left;
  if (!(h_left > 0) || !(h_right > 0))
    fail(Err::ConfigInvalid, "well depths must be positive");
  if (!(top > h_left))
    fail(Err::ConfigInvalid, "seam height must exceed the inner barrier");
  double period = 2.0;
  double root_sum = std::sqrt(top) + std::sqrt(h_left) + std::sqrt(h_right) +
                    std::sqrt(top - h_left + h_right);
  double k = period / root_sum;
  double xl = -k * (std::sqrt(top) + std::sqrt(h_left));  // puts the inner maximum at 0
  return make_multiwell({top, 0.0, h_left, h_left - h_right}, period, xl, "double_well");
}

Landscape make_cosine_well(double height) {
  if (!(height > 0)) fail(Err::ConfigInvalid, "well depth must be positive");
  return make_multiwell({height, 0.0}, 1.0, -0.5, "cosine_well");
}

Landscape make_quadratic_well() {
  Landscape L;
  L.xl = -3.0;
  L.xr = 3.0;
  L.name = "quadratic_well";
  L.U = [](double y) {
    double x = table_wrap(y, -3.0, 3.0);
    double ax = std::fabs(x);
    if (ax <= 2.0) return x * x / 2.0;
    double t = ax - 2.0;
    return 2.0 + 2.0 * t + t * t / 2.0 - 7.0 / 3.0 * t * t * t + t * t * t * t;
  };
  L.dU = [](double y) {
    double x = table_wrap(y, -3.0, 3.0);
    double ax = std::fabs(x);
    if (ax <= 2.0) return x;
    double t = ax - 2.0;
    double s = x < 0 ? -1.0 : 1.0;
    return s * (2.0 + t - 7.0 * t * t + 4.0 * t * t * t);
  };
  return L;
}

Landscape make_spline_landscape(std::vector<double> xs, std::vector<double> ys, double xl,
                                double xr, std::string name) {
  std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) fail(Err::ConfigInvalid, "need matching knot lists, at least 2");
  if (!(xr > xl)) fail(Err::ConfigInvalid, "domain must have positive width");
  for (std::size_t i = 0; i < n; ++i) {
    if (xs[i] < xl || xs[i] >= xr) fail(Err::ConfigInvalid, "knots must lie in [xl, xr)");
    if (i > 0 && !(xs[i] > xs[i - 1])) fail(Err::ConfigInvalid, "knots must be ascending");
  }
  double P = xr - xl;
  // Periodic C^2 spline: solve for knot second derivatives (small dense solve).
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = (i + 1 < n ? xs[i + 1] : xs[0] + P) - xs[i];
  std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t im = (i + n - 1) % n, ip = (i + 1) % n;
    A[i][im] += h[im] / 6.0;
    A[i][i] += (h[im] + h[i]) / 3.0;
    A[i][ip] += h[i] / 6.0;
    b[i] = (ys[ip] - ys[i]) / h[i] - (ys[i] - ys[im]) / h[im];
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c; r < n; ++r)
      if (std::fabs(A[r][c]) > std::fabs(A[piv][c])) piv = r;
    if (A[piv][c] == 0.0) fail(Err::ConfigInvalid, "degenerate spline system");
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || A[r][c] == 0.0) continue;
      double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  auto M = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) (*M)[i] = b[i] / A[i][i];
  auto kx = std::make_shared<std::vector<double>>(std::move(xs));
  auto ky = std::make_shared<std::vector<double>>(std::move(ys));
  auto kh = std::make_shared<std::vector<double>>(std::move(h));

  auto segment = [kx, xl, xr](double x) {
    // x already wrapped into [xl, xr); interval i covers [xs[i], xs[i+1]).
    auto it = std::upper_bound(kx->begin(), kx->end(), x);
    if (it == kx->begin()) return kx->size() - 1;  // wrap segment reached from the left
    return static_cast<std::size_t>(it - kx->begin()) - 1;
  };
  Landscape L;
  L.xl = xl;
  L.xr = xr;
  L.name = std::move(name);
  L.U = [=](double y) {
    double x = table_wrap(y, xl, xr);
    std::size_t i = segment(x), ip = (i + 1) % kx->size();
    double x0 = (*kx)[i];
    if (x < x0) x += (xr - xl);
    double hh = (*kh)[i], t1 = x0 + hh - x, t0 = x - x0;
    return (*M)[i] * t1 * t1 * t1 / (6 * hh) + (*M)[ip] * t0 * t0 * t0 / (6 * hh) +
           ((*ky)[i] / hh - (*M)[i] * hh / 6) * t1 + ((*ky)[ip] / hh - (*M)[ip] * hh / 6) * t0;
  };
  L.dU = [=](double y) {
    double x = table_wrap(y, xl, xr);
    std::size_t i = segment(x), ip = (i + 1) % kx->size();
    double x0 = (*kx)[i];
    if (x < x0) x += (xr - xl);
    double hh = (*kh)[i], t1 = x0 + hh - x, t0 = x - x0;
    return -(*M)[i] * t1 * t1 / (2 * hh) + (*M)[ip] * t0 * t0 / (2 * hh) -
           ((*ky)[i] / hh - (*M)[i] * hh / 6) + ((*ky)[ip] / hh - (*M)[ip] * hh / 6);
  };
  return L;
}

namespace {

// Uphill sum walking from `from` to `to` in the given direction, splitting
// the arc at the critical points so every piece is monotone.
double uphill_sum(const Landscape& L, const std::vector<Equilibrium>& crit, double from,
                  double to, bool rightward) {
  double P = L.period();
  double d = rightward ? to - from : from - to;
  if (d < 0) d += P;
  if (d == 0) return 0.0;
  std::vector<std::pair<double, double>> inner;  // (offset along walk, height)
  for (const auto& c : crit) {
    double o = rightward ? c.x - from : from - c.x;
    if (o < 0) o += P;
    if (o > 0 && o < d) inner.push_back({o, c.u});
  }
  std::sort(inner.begin(), inner.end());
  double s = 0.0, prev = L.U(from);
  for (const auto& [o, u] : inner) {
    s += std::max(0.0, u - prev);
    prev = u;
  }
  s += std::max(0.0, L.U(to) - prev);
  return s;
}

}  // namespace

EquilibriumSet find_equilibria(const Landscape& L, double degenerate_tol) {
  if (!L.U || !L.dU) fail(Err::ConfigInvalid, "landscape is missing U or dU");
  double P = L.period();
  if (!(P > 0)) fail(Err::ConfigInvalid, "landscape period must be positive");
  const int n = 1 << 14;
  double step = P / n;
  std::vector<double> d(n);
  for (int k = 0; k < n; ++k) d[k] = L.dU(L.xl + k * step);

  std::vector<double> roots;
  for (int k = 0; k < n; ++k) {
    int k2 = (k + 1) % n;
    double x0 = L.xl + k * step, x1 = x0 + step;
    if (d[k] == 0.0) {
      if (d[k2] == 0.0)
        fail(Err::DegenerateCritical, "slope vanishes on a stretch near x = " +
                                          std::to_string(x0));
      roots.push_back(x0);
      continue;
    }
    if (d[k] * d[k2] < 0.0) {
      double a = x0, b = x1, fa = d[k];
      for (int it = 0; it < 200 && b - a > 1e-15 * P; ++it) {
        double m = (a + b) / 2, fm = L.dU(L.wrap(m));
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if (fa * fm < 0) {
          b = m;
        } else {
          a = m;
          fa = fm;
        }
      }
      roots.push_back((a + b) / 2);
    }
  }
  if (roots.empty()) fail(Err::NoEquilibria, "slope never vanishes over one period");

  for (double& r : roots) r = L.wrap(r);
  std::sort(roots.begin(), roots.end());
  std::vector<double> uniq;
  for (double r : roots)
    if (uniq.empty() || r - uniq.back() > 1e-8 * P) uniq.push_back(r);
  if (uniq.size() > 1 && (uniq.front() - L.xl) + (L.xr - uniq.back()) < 1e-8 * P)
    uniq.pop_back();  // same point seen on both sides of the seam

  EquilibriumSet out;
  double h = 1e-6 * P;
  for (double r : uniq) {
    double dd = (L.dU(L.wrap(r + h)) - L.dU(L.wrap(r - h))) / (2 * h);
    if (std::fabs(dd) <= degenerate_tol)
      fail(Err::DegenerateCritical,
           "curvature " + std::to_string(dd) + " at x = " + std::to_string(r) +
               " is below the tolerance");
    out.points.push_back({L.wrap(r), L.U(L.wrap(r)), dd > 0});
  }
  int m = static_cast<int>(out.points.size());
  for (int i = 0; i < m; ++i) {
    if (out.points[i].stable == out.points[(i + 1) % m].stable)
      fail(Err::DegenerateCritical, "critical points of the same type are adjacent");
    (out.points[i].stable ? out.stable : out.unstable).push_back(i);
  }

  int ns = static_cast<int>(out.stable.size());
  out.V.assign(ns, std::vector<double>(ns, 0.0));
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j)
      if (i != j)
        out.V[i][j] = quasipotential(L, out, out.points[out.stable[i]].x,
                                     out.points[out.stable[j]].x);
  out.W.resize(ns);
  for (int j = 0; j < ns; ++j) out.W[j] = min_wgraph_weight<double>(out.V, {j}).weight;
  double wmin = *std::min_element(out.W.begin(), out.W.end());
  double tie_tol = 1e-9 * std::max(1.0, std::fabs(wmin));
  std::vector<int> mins;
  for (int j = 0; j < ns; ++j)
    if (out.W[j] - wmin <= tie_tol) mins.push_back(j);
  if (mins.size() > 1) {
    std::string xs;
    for (int j : mins) xs += (xs.empty() ? "x = " : ", x = ") +
                             std::to_string(out.points[out.stable[j]].x);
    fail(Err::NonUniqueDeepest, "graph weight minimized at several stable points: " + xs);
  }
  out.deepest = mins[0];
  return out;
}

double quasipotential(const Landscape& L, const EquilibriumSet& eqs, double x, double y) {
  double wx = L.wrap(x), wy = L.wrap(y);
  if (wx == wy) return 0.0;
  double right = uphill_sum(L, eqs.points, wx, wy, true);
  double left = uphill_sum(L, eqs.points, wx, wy, false);
  return (2.0 / L.a) * std::min(right, left);
}

double quasipotential(const Landscape& L, double x, double y) {
  return quasipotential(L, find_equilibria(L), x, y);
}

Mat<double> quasipotential_matrix(const Landscape& L, const EquilibriumSet& eqs) {
  int n = static_cast<int>(eqs.points.size());
  Mat<double> V(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) V[i][j] = quasipotential(L, eqs, eqs.points[i].x, eqs.points[j].x);
  return V;
}

SetInfimum quasipotential_to_set(const Landscape& L, const EquilibriumSet& eqs, int from_stable,
                                 const std::vector<std::pair<double, double>>& A,
                                 const std::function<double(double)>& f, int grid_per_period) {
  if (from_stable < 0 || from_stable >= static_cast<int>(eqs.stable.size()))
    fail(Err::ConfigInvalid, "stable index out of range");
  if (!f) fail(Err::ConfigInvalid, "observable f is missing");
  if (grid_per_period < 1) fail(Err::ConfigInvalid, "grid resolution must be positive");
  if (A.empty()) fail(Err::EmptySet, "the target set has no intervals");
  double P = L.period();
  double spacing = P / grid_per_period;
  double x0 = eqs.points[eqs.stable[from_stable]].x;
  SetInfimum out{0, 0, spacing};
  bool any = false;
  for (const auto& [lo, hi] : A) {
    double width = hi - lo;
    if (width < 0 || width > P)
      fail(Err::ConfigInvalid, "interval width must lie in [0, period]");
    int mseg = std::max(1, static_cast<int>(std::ceil(width / spacing)));
    int last = width == 0 ? 0 : mseg;
    for (int k = 0; k <= last; ++k) {
      double node = L.wrap(lo + (width == 0 ? 0.0 : width * k / mseg));
      double v = quasipotential(L, eqs, x0, node);
      double fx = f(node);
      double v1 = fx + v, v2 = 2 * fx + v;
      if (!any || v1 < out.inf_fV) out.inf_fV = v1;
      if (!any || v2 < out.inf_2fV) out.inf_2fV = v2;
      any = true;
    }
  }
  if (!any) fail(Err::EmptySet, "the target set has no grid points");
  return out;
}

void validate_profile(const Profile& p) {
  std::size_t n = p.heights.size();
  if (n < 2 || n % 2 != 0)
    fail(Err::ConfigInvalid, "profile must have even length, at least 2");
  for (std::size_t i = 0; i < n; i += 2) {
    const Rat& prev = p.heights[(i + n - 1) % n];
    const Rat& next = p.heights[(i + 1) % n];
    if (!(p.heights[i] > prev) || !(p.heights[i] > next))
      fail(Err::ConfigInvalid, "profile must strictly alternate maximum, minimum");
  }
}

int profile_wells(const Profile& p) {
  validate_profile(p);
  return static_cast<int>(p.heights.size() / 2);
}

RVec profile_minima(const Profile& p) {
  validate_profile(p);
  RVec out;
  for (std::size_t i = 1; i < p.heights.size(); i += 2) out.push_back(p.heights[i]);
  return out;
}

namespace {

// Sum of positive height increments along the circular walk from node
// `from` to node `to` in direction `dir`, then minimized over directions.
Rat profile_walk_cost(const Profile& p, int from, int to) {
  int n = static_cast<int>(p.heights.size());
  auto walk = [&](int dir) {
    Rat s = 0;
    int k = from;
    while (k != to) {
      int nk = (k + dir + n) % n;
      if (p.heights[nk] > p.heights[k]) s += p.heights[nk] - p.heights[k];
      k = nk;
    }
    return s;
  };
  return rat_min(walk(+1), walk(-1));
}

}  // namespace

RMat profile_V(const Profile& p) {
  int m = profile_wells(p);
  RMat V(m, RVec(m, 0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i != j) V[i][j] = profile_walk_cost(p, 2 * i + 1, 2 * j + 1);
  return V;
}

RMat profile_V_all(const Profile& p) {
  validate_profile(p);
  int n = static_cast<int>(p.heights.size());
  RMat V(n, RVec(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) V[i][j] = profile_walk_cost(p, i, j);
  return V;
}

Profile random_profile(int wells, std::uint64_t seed) {
  if (wells < 1) fail(Err::ConfigInvalid, "need at least one well");
  Philox rng(seed, 0x70726f66u);  // dedicated stream for profile draws
  int n = 2 * wells;
  Profile p;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<Rat> mins(wells);
    std::vector<char> used(16 * wells + 1, 0);
    bool ok = true;
    for (int i = 0; i < wells; ++i) {
      std::uint32_t v = rng.next_below(static_cast<std::uint32_t>(16 * wells + 1));
      if (used[v]) {
        ok = false;
        break;
      }
      used[v] = 1;
      mins[i] = Rat(static_cast<int>(v), 4);
    }
    if (!ok) continue;
    p.heights.assign(n, 0);
    for (int i = 0; i < wells; ++i) p.heights[2 * i + 1] = mins[i];
    for (int i = 0; i < wells; ++i) {
      const Rat& a = p.heights[(2 * i + n - 1) % n];
      const Rat& b = p.heights[2 * i + 1];
      p.heights[2 * i] =
          rat_max(a, b) + 1 + Rat(static_cast<int>(rng.next_below(33)), 4);
    }
    validate_profile(p);
    return p;
  }
  fail(Err::ConfigInvalid, "could not draw distinct well depths");
}

}  // namespace fwq
