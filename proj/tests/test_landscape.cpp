#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fwq/error.hpp"
#include "fwq/landscape.hpp"
#include "fwq/rng.hpp"

using namespace fwq;

namespace {

bool near(double v, double expect, double tol = 1e-5) { return std::abs(v - expect) < tol; }

// Numeric curvature from the supplied derivative.
double curv(const Landscape& L, double x, double h = 1e-5) {
  return (L.dU(x + h) - L.dU(x - h)) / (2 * h);
}

}  // namespace

TEST_CASE("double well geometry") {
  const double hl = 1.0, hr = 0.5, top = 2.0;
  Landscape L = make_double_well(hl, hr, top);
  check_periodic(L);
  const double k =
      2.0 / (std::sqrt(top) + std::sqrt(hl) + std::sqrt(hr) + std::sqrt(top - hl + hr));
  CHECK(near(L.xl, -k * (std::sqrt(top) + std::sqrt(hl)), 1e-12));
  CHECK(near(L.period(), 2.0, 1e-12));

  EquilibriumSet eqs = find_equilibria(L);
  REQUIRE(eqs.points.size() == 4);
  REQUIRE(eqs.stable.size() == 2);
  REQUIRE(eqs.unstable.size() == 2);
  // Ascending: seam max, left bottom, inner max, right bottom.
  CHECK(near(eqs.points[0].x, L.xl, 1e-9));
  CHECK(near(eqs.points[1].x, -k, 1e-6));
  CHECK(near(eqs.points[2].x, 0.0, 1e-6));
  CHECK(near(eqs.points[3].x, k * std::sqrt(hr), 1e-6));
  CHECK(near(eqs.points[0].u, top, 1e-9));
  CHECK(near(eqs.points[1].u, 0.0, 1e-9));
  CHECK(near(eqs.points[2].u, hl, 1e-9));
  CHECK(near(eqs.points[3].u, hl - hr, 1e-9));
  CHECK_FALSE(eqs.points[0].stable);
  CHECK(eqs.points[1].stable);
  CHECK_FALSE(eqs.points[2].stable);
  CHECK(eqs.points[3].stable);

  CHECK(eqs.deepest == 0);
  REQUIRE(eqs.W.size() == 2);
  CHECK(near(eqs.W[0], hr));
  CHECK(near(eqs.W[1], hl));
  CHECK(near(eqs.V[0][1], hl));
  CHECK(near(eqs.V[1][0], hr));

  // The default seam height is twice the left depth.
  Landscape D = make_double_well(hl, hr);
  CHECK(near(D.U(D.xl), 2 * hl, 1e-9));

  // Piecewise-cosine segments meet with equal curvature on both sides.
  for (int s : eqs.stable) {
    double x = eqs.points[s].x;
    CHECK(near(curv(L, x - 1e-4), curv(L, x + 1e-4), 1e-3));
    CHECK(curv(L, x) > 0);
  }
}

TEST_CASE("double well quasipotential matrix") {
  Landscape L = make_double_well(1.0, 0.5, 2.0);
  EquilibriumSet eqs = find_equilibria(L);
  Mat<double> V = quasipotential_matrix(L, eqs);
  REQUIRE(V.size() == 4);

  // Rows in ascending point order: seam max, left bottom, inner max, right bottom.
  const double expect[4][4] = {{0, 0, 0.5, 0},
                               {2, 0, 1, 1},
                               {1.5, 0, 0, 0},
                               {1.5, 0.5, 0.5, 0}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(near(V[i][j], expect[i][j]));
}

TEST_CASE("quasipotential identities on sampled points") {
  std::vector<Landscape> zoo;
  zoo.push_back(make_double_well(1.0, 0.5));
  zoo.push_back(make_multiwell({3, 0, 1.5, 0.5, 2.2, 1}, 3.0, -0.7));
  zoo.push_back(make_cosine_well(0.8));
  Philox rng(0x1A5D, 4);
  for (const Landscape& L : zoo) {
    EquilibriumSet eqs = find_equilibria(L);
    double P = L.period();
    for (int t = 0; t < 40; ++t) {
      double x = L.xl + P * rng.next_below(10000) / 10000.0;
      double y = L.xl + P * rng.next_below(10000) / 10000.0;
      double z = L.xl + P * rng.next_below(10000) / 10000.0;
      double vxy = quasipotential(L, x, y);
      double vyx = quasipotential(L, y, x);
      CHECK(vxy >= 0);
      // Reversing a path turns its downhill sum into the uphill sum.
      CHECK(near(vxy - vyx, (2.0 / L.a) * (L.U(y) - L.U(x)), 1e-7));
      // Concatenation can only cost more.
      CHECK(quasipotential(L, x, z) <= vxy + quasipotential(L, y, z) + 1e-9);
      // The overload taking equilibria agrees with the direct one.
      CHECK(quasipotential(L, eqs, x, y) == vxy);
    }
    CHECK(near(quasipotential(L, 0.3, 0.3), 0.0, 1e-12));
  }
}

TEST_CASE("three-well landscape") {
  Landscape L = make_multiwell({3, 0, 1.5, 0.5, 2.2, 1}, 3.0, -0.7);
  check_periodic(L);
  EquilibriumSet eqs = find_equilibria(L);
  REQUIRE(eqs.points.size() == 6);
  REQUIRE(eqs.stable.size() == 3);
  CHECK(near(eqs.points[0].x, -0.7, 1e-9));

  Mat<double> V6 = quasipotential_matrix(L, eqs);
  REQUIRE(V6.size() == 6);

  // Stable-to-stable costs: climb the cheaper neighboring barrier chain.
  CHECK(near(eqs.V[0][1], 1.5));
  CHECK(near(eqs.V[1][0], 1.0));
  CHECK(near(eqs.V[1][2], 1.7));
  CHECK(near(eqs.V[2][1], 1.2));
  CHECK(near(eqs.V[0][2], 3.0));
  CHECK(near(eqs.V[2][0], 2.0));
  // eqs.V is the stable sub-block of the full matrix.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(eqs.V[i][j] == V6[eqs.stable[i]][eqs.stable[j]]);

  REQUIRE(eqs.W.size() == 3);
  CHECK(near(eqs.W[0], 2.2));
  CHECK(near(eqs.W[1], 2.7));
  CHECK(near(eqs.W[2], 3.2));
  CHECK(eqs.deepest == 0);
}

TEST_CASE("cosine well") {
  Landscape L = make_cosine_well(0.8);
  check_periodic(L);
  EquilibriumSet eqs = find_equilibria(L);
  REQUIRE(eqs.points.size() == 2);
  REQUIRE(eqs.stable.size() == 1);
  CHECK(near(eqs.points[eqs.stable[0]].x, 0.0, 1e-6));
  CHECK(near(eqs.points[eqs.stable[0]].u, 0.0, 1e-9));
  CHECK(eqs.deepest == 0);
  CHECK(eqs.W == std::vector<double>{0.0});
  CHECK(near(quasipotential(L, 0.0, 0.5), 0.8, 1e-5));
}

TEST_CASE("spline landscape interpolates its knots") {
  std::vector<double> xs = {0.1, 0.35, 0.6, 0.85};
  std::vector<double> ys = {0.5, 0.1, 0.7, 0.3};
  Landscape L = make_spline_landscape(xs, ys, 0.0, 1.0);
  check_periodic(L);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(near(L.U(xs[i]), ys[i], 1e-9));
  EquilibriumSet eqs = find_equilibria(L);
  CHECK(eqs.points.size() >= 2);
  CHECK(eqs.points.size() % 2 == 0);  // minima and maxima alternate
  for (std::size_t i = 0; i < eqs.points.size(); ++i)
    CHECK(eqs.points[i].stable != eqs.points[(i + 1) % eqs.points.size()].stable);
}

TEST_CASE("grid infimum over a target set") {
  Landscape L = make_double_well(1.0, 0.5, 2.0);
  EquilibriumSet eqs = find_equilibria(L);
  double x_right = eqs.points[3].x;
  std::vector<std::pair<double, double>> A = {{x_right - 0.05, x_right + 0.05}};
  auto zero = [](double) { return 0.0; };
  SetInfimum si = quasipotential_to_set(L, eqs, 0, A, zero);
  CHECK(near(si.inf_fV, 1.0, 1e-2));
  CHECK(near(si.inf_2fV, si.inf_fV, 1e-12));

  auto f = [](double) { return 0.3; };
  SetInfimum sf = quasipotential_to_set(L, eqs, 0, A, f);
  CHECK(near(sf.inf_fV - si.inf_fV, 0.3, 1e-9));
  CHECK(near(sf.inf_2fV - si.inf_2fV, 0.6, 1e-9));

  // From the shallow well the cheap direction is the inner barrier.
  std::vector<std::pair<double, double>> B = {{eqs.points[1].x - 0.05, eqs.points[1].x + 0.05}};
  SetInfimum sb = quasipotential_to_set(L, eqs, 1, B, zero);
  CHECK(near(sb.inf_fV, 0.5, 1e-2));

  CHECK_THROWS_AS(quasipotential_to_set(L, eqs, 0, {}, zero), Error);
  CHECK_THROWS_AS(quasipotential_to_set(L, eqs, 0, A, nullptr), Error);
}

TEST_CASE("exact profile costs match the smooth landscape") {
  Profile p{{Rat(2), Rat(0), Rat(1), Rat(1, 2)}};
  validate_profile(p);
  CHECK(profile_wells(p) == 2);
  CHECK(profile_minima(p) == RVec{Rat(0), Rat(1, 2)});

  RMat V = profile_V(p);
  CHECK(V == RMat{{Rat(0), Rat(1)}, {Rat(1, 2), Rat(0)}});

  RMat Va = profile_V_all(p);
  RMat expect = {{Rat(0), Rat(0), Rat(1, 2), Rat(0)},
                 {Rat(2), Rat(0), Rat(1), Rat(1)},
                 {Rat(3, 2), Rat(0), Rat(0), Rat(0)},
                 {Rat(3, 2), Rat(1, 2), Rat(1, 2), Rat(0)}};
  CHECK(Va == expect);

  // The smooth double well realizes the same circular height profile, so its
  // grid quasipotentials must land on the exact values. Profile order starts
  // at the seam maximum, matching ascending point order.
  Landscape L = make_double_well(1.0, 0.5, 2.0);
  EquilibriumSet eqs = find_equilibria(L);
  Mat<double> VL = quasipotential_matrix(L, eqs);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(near(VL[i][j], to_double(Va[i][j])));
}

TEST_CASE("profile validation and random profiles") {
  CHECK_THROWS_AS(validate_profile(Profile{{Rat(1), Rat(2), Rat(3), Rat(0)}}), Error);
  CHECK_THROWS_AS(validate_profile(Profile{{Rat(1), Rat(0), Rat(2)}}), Error);

  for (std::uint64_t s = 1; s <= 20; ++s) {
    Profile p = random_profile(2 + static_cast<int>(s % 3), 1000 + s);
    validate_profile(p);
    RMat V = profile_V(p);
    int n = static_cast<int>(V.size());
    // Unique deepest minimum under the rooted-graph weights.
    RVec W(n);
    for (int j = 0; j < n; ++j) W[j] = min_wgraph_weight<Rat>(V, {j}).weight;
    int best = 0;
    for (int j = 1; j < n; ++j)
      if (W[j] < W[best]) best = j;
    for (int j = 0; j < n; ++j)
      if (j != best) CHECK(W[j] > W[best]);
  }
}

TEST_CASE("wrap and circular distance") {
  Landscape L = make_double_well(1.0, 0.5);
  double P = L.period();
  for (double x : {-3.0, -1.2, 0.0, 0.7, 1.9, 4.4}) {
    double w = L.wrap(x);
    CHECK(w >= L.xl);
    CHECK(w < L.xr);
    CHECK(near(std::remainder(w - x, P), 0.0, 1e-12));
  }
  CHECK(near(L.circ_dist(L.xl + 0.1, L.xr - 0.1), 0.2, 1e-12));
  CHECK(L.circ_dist(0.3, 0.3) == 0.0);
}

TEST_CASE("equal well depths have no unique deepest point") {
  Landscape L = make_double_well(1.0, 1.0);
  try {
    find_equilibria(L);
    FAIL("expected NonUniqueDeepest");
  } catch (const Error& e) {
    CHECK(e.code() == Err::NonUniqueDeepest);
  }
}

TEST_CASE("an oversized curvature tolerance flags degeneracy") {
  Landscape L = make_double_well(1.0, 0.5);
  try {
    find_equilibria(L, 1e6);
    FAIL("expected DegenerateCritical");
  } catch (const Error& e) {
    CHECK(e.code() == Err::DegenerateCritical);
  }
}

TEST_CASE("multiwell input validation") {
  CHECK_THROWS_AS(make_multiwell({1, 0, 2}, 1.0), Error);       // odd length
  CHECK_THROWS_AS(make_multiwell({1, 2, 3, 0}, 1.0), Error);    // not alternating
  CHECK_THROWS_AS(make_multiwell({1, 0, 2, 1}, -1.0), Error);   // bad period
}
