#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fwq/rational.hpp"
#include "fwq/wgraph.hpp"

namespace fwq {

// A periodic 1-D potential on [xl, xr), drift -U', noise sqrt(a * eps).
struct Landscape {
  double xl = 0.0;
  double xr = 1.0;
  double a = 2.0;
  std::string name;
  std::function<double(double)> U;
  std::function<double(double)> dU;

  double period() const { return xr - xl; }
  double wrap(double x) const;
  double circ_dist(double x, double y) const;
};

// Seam-continuity check for user-supplied landscapes (value and slope).
void check_periodic(const Landscape& L, double tol = 1e-9);

// Piecewise-cosine landscape through the circular extremum heights
// [M0, m0, M1, m1, ...] starting at the seam maximum M0 at x = xl. Segment
// widths are proportional to sqrt(|height step|), which makes the curvature
// magnitude equal on both sides of every junction, so U is C^2.
Landscape make_multiwell(const std::vector<double>& heights, double period, double xl = 0.0,
                         std::string name = "multiwell");

// Two wells over period 2: seam maximum at height `top` (default 2*h_left),
// left well bottom at 0 with inner barrier h_left at x = 0, right well
// bottom at h_left - h_right. The x-axis is placed so the inner maximum
// sits at the origin.
Landscape make_double_well(double h_left, double h_right, double top = 0.0);

// Single well of the given depth over period 1, minimum at x = 0.
Landscape make_cosine_well(double height = 1.0);

// Quadratic well x^2/2 on [-2, 2] with quartic shoulders meeting C^2 at a
// seam maximum of 19/6 at x = +-3. Near the bottom the dynamics is an
// Ornstein-Uhlenbeck process, giving closed-form step statistics.
Landscape make_quadratic_well();

// Periodic C^2 cubic spline through knots (xs ascending in [xl, xr)).
Landscape make_spline_landscape(std::vector<double> xs, std::vector<double> ys, double xl,
                                double xr, std::string name = "spline");

struct Equilibrium {
  double x;
  double u;
  bool stable;
};

struct EquilibriumSet {
  std::vector<Equilibrium> points;  // ascending x within one period
  std::vector<int> stable;          // indices into points
  std::vector<int> unstable;
  Mat<double> V;          // quasipotential between stable points
  std::vector<double> W;  // minimal arrow-map weight rooted at each stable point
  int deepest = -1;       // position in `stable` minimizing W
};

// Locates and classifies the critical points, computes pairwise
// quasipotentials over the stable set and each point's rooted graph weight,
// and marks the unique weight minimizer.
EquilibriumSet find_equilibria(const Landscape& L, double degenerate_tol = 1e-3);

// Minimal transition cost between two points: (2/a) times the smaller of
// the two one-sided uphill sums along the circle.
double quasipotential(const Landscape& L, const EquilibriumSet& eqs, double x, double y);
double quasipotential(const Landscape& L, double x, double y);
Mat<double> quasipotential_matrix(const Landscape& L, const EquilibriumSet& eqs);

struct SetInfimum {
  double inf_fV;   // inf over the set of f + V(start, .)
  double inf_2fV;  // inf over the set of 2 f + V(start, .)
  double spacing;  // grid resolution used
};

// Grid infimum over a union of closed circular intervals. `from_stable`
// indexes the stable list. Throws EmptySet when no interval survives
// validation.
SetInfimum quasipotential_to_set(const Landscape& L, const EquilibriumSet& eqs, int from_stable,
                                 const std::vector<std::pair<double, double>>& A,
                                 const std::function<double(double)>& f,
                                 int grid_per_period = 10000);

// Exact counterpart of the landscape pipeline: a circular alternating
// height profile [M0, m0, M1, m1, ...] with rational entries. Minima are
// the stable states, in profile order.
struct Profile {
  std::vector<Rat> heights;
};

void validate_profile(const Profile& p);
int profile_wells(const Profile& p);
RVec profile_minima(const Profile& p);
// Pairwise transition costs between minima: min of the two circular uphill
// sums (cost normalization a = 2).
RMat profile_V(const Profile& p);
// Same walk cost over every profile node, maxima included, in profile order.
RMat profile_V_all(const Profile& p);

// Random strictly-alternating profile with a unique deepest minimum and all
// pairwise costs distinct enough for stable golden values.
Profile random_profile(int wells, std::uint64_t seed);

}  // namespace fwq
