#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>
#include <stdexcept>
#include <vector>

#include "fwq/error.hpp"
#include "fwq/landscape.hpp"
#include "fwq/rates.hpp"
#include "fwq/rational.hpp"
#include "fwq/rng.hpp"

using namespace fwq;

namespace {

Err code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected an Error");
}

RateInputs<Rat> example1() {
  RateInputs<Rat> in;
  in.infA_fV = {8, 4, 4, 0, 0};
  in.infA_2fV = {8, 4, 4, 0, 0};
  in.W = RVec{5, 9, 7, 11, 8};
  in.W_pair = RVec{0, 5, 3, 5, 2};
  in.h1 = 4;
  in.c = 6;
  in.f_sign = 1;
  return in;
}

RateInputs<Rat> example2() {
  RateInputs<Rat> in;
  in.infA_fV = {4, 0, 0, 0, 5};
  in.infA_2fV = {4, 0, 0, 0, 5};
  in.W = RVec{7, 11, 9, 13, 8};
  in.W_pair = RVec{0, 7, 5, 7, 2};
  in.h1 = 4;
  in.c = 7;
  in.f_sign = 1;
  return in;
}

}  // namespace

TEST_CASE("five-state single-cycle table") {
  RateReport<Rat> rep = variance_decay_rates(example1());
  CHECK(rep.h1 == 4);
  CHECK(rep.w == 3);
  CHECK(rep.regime == Regime::SingleCycle);
  CHECK(rep.W_pair[0] == rep.W[0]);
  CHECK(rep.R1 == RVec{8, 8, 6, 6, 3});
  CHECK(rep.R2 == RVec{12, 12, 8, 6, 0});
  CHECK(rep.variance_rate == 0);
  CHECK(rep.argmin_j == 4);
  CHECK(rep.argmin_superscript == 2);
  CHECK(rep.bias_rate == 5);
  CHECK(rep.source_W == RateSource::Supplied);
  CHECK(rep.source_h1 == RateSource::Supplied);
  CHECK(rep.h.empty());  // no cost matrix was given
}

TEST_CASE("five-state multicycle table") {
  RateReport<Rat> rep = variance_decay_rates(example2());
  CHECK(rep.h1 == 4);
  CHECK(rep.w == 5);
  CHECK(rep.regime == Regime::Multicycle);
  CHECK(rep.R1 == RVec{4, 4, 2, 6, 6});
  CHECK(rep.R2 == RVec{4, 4, 0, 6, 6});
  CHECK(rep.R3 == RVec{3, 3, -1, 7, 7});
  CHECK(rep.variance_rate == -1);
  CHECK(rep.argmin_j == 2);
  CHECK(rep.argmin_superscript == 3);
  CHECK(rep.bias_rate == 4);
}

TEST_CASE("the m-family at the regime boundary matches the report") {
  RateInputs<Rat> in = example2();
  RateReport<Rat> rep = variance_decay_rates(in);
  // With m + h1 = w the explicitly parameterized family coincides.
  RVec R3 = multicycle_rates(in, Rat(rep.w - rep.h1));
  CHECK(R3 == rep.R3);
  // Larger m only lowers the family, uniformly.
  RVec R3b = multicycle_rates(in, Rat(rep.w - rep.h1 + 2));
  for (std::size_t j = 0; j < R3.size(); ++j) CHECK(R3b[j] == Rat(R3[j] - 2));
}

TEST_CASE("cost matrix inputs derive everything") {
  RateInputs<Rat> in;
  in.V = {{Rat(0), Rat(4), Rat(6)}, {Rat(2), Rat(0), Rat(3)}, {Rat(5), Rat(1), Rat(0)}};
  in.infA_fV = {4, 0, 1};  // f = 0, target set {state 1}
  in.infA_2fV = {4, 0, 1};
  in.c = 9;
  in.f_sign = 1;
  RateReport<Rat> rep = variance_decay_rates(in);
  CHECK(rep.h == RVec{4, 2, 1});
  CHECK(rep.h1 == 4);
  CHECK(rep.W == RVec{3, 5, 7});
  CHECK(rep.W_pair == RVec{3, 1, 2});
  CHECK(rep.w == 2);
  CHECK(rep.regime == Regime::SingleCycle);
  CHECK(rep.R1 == RVec{4, 2, 5});
  CHECK(rep.R2 == RVec{4, 0, 5});
  CHECK(rep.variance_rate == 0);
  CHECK(rep.argmin_j == 1);
  CHECK(rep.argmin_superscript == 2);
  CHECK(rep.bias_rate == 9 - 2);
  CHECK(rep.source_W == RateSource::Computed);
  CHECK(rep.source_h1 == RateSource::Computed);
  CHECK(bias_decay_rate(in) == rep.bias_rate);
}

TEST_CASE("state 0 must be the unique deepest well") {
  RateInputs<Rat> in = example1();
  (*in.W)[2] = 5;  // tie with state 0
  CHECK(code_of([&] { variance_decay_rates(in); }) == Err::NonUniqueDeepest);
  (*in.W)[2] = 4;  // strictly below state 0
  CHECK(code_of([&] { variance_decay_rates(in); }) == Err::ConfigInvalid);
}

TEST_CASE("the horizon exponent must clear both scales") {
  RateInputs<Rat> in = example1();  // max(h1, w) = 4
  in.c = 4;
  CHECK(code_of([&] { variance_decay_rates(in); }) == Err::HorizonTooSmall);
  CHECK(code_of([&] { bias_decay_rate(in); }) == Err::HorizonTooSmall);
  in.c = Rat(4000001, 1000000);
  // bias = min(inf + W) - W[0] + c - max(h1, w) = 8 - 5 + c - 4.
  CHECK(variance_decay_rates(in).bias_rate == Rat(3000001, 1000000));
}

TEST_CASE("declared nonnegative weights pin the infimum band") {
  RateInputs<Rat> in = example1();
  in.infA_2fV[1] = 3;  // below inf f+V
  CHECK(code_of([&] { variance_decay_rates(in); }) == Err::ConfigInvalid);
  in.infA_2fV[1] = 9;  // above 2 inf f+V
  CHECK(code_of([&] { variance_decay_rates(in); }) == Err::ConfigInvalid);
  in.f_sign = 0;  // band not asserted, inputs taken as given
  variance_decay_rates(in);
}

TEST_CASE("bias rate grows one-for-one with the horizon exponent") {
  RateInputs<Rat> in = example1();
  Rat b6 = variance_decay_rates(in).bias_rate;
  in.c = 7;
  CHECK(variance_decay_rates(in).bias_rate == b6 + 1);
}

TEST_CASE("input shape errors") {
  RateInputs<Rat> in = example1();
  in.infA_2fV.pop_back();
  CHECK(code_of([&] { variance_decay_rates(in); }) == Err::ConfigInvalid);

  RateInputs<Rat> bad;
  bad.V = {{Rat(0), Rat(1)}, {Rat(1), Rat(0), Rat(2)}};
  bad.infA_fV = {0, 0};
  bad.infA_2fV = {0, 0};
  bad.c = 10;
  CHECK(code_of([&] { variance_decay_rates(bad); }) == Err::ConfigInvalid);

  bad.V = {{Rat(0), Rat(-1)}, {Rat(1), Rat(0)}};
  CHECK(code_of([&] { variance_decay_rates(bad); }) == Err::ConfigInvalid);
}

TEST_CASE("two-state engine reproduces the closed-form case rates") {
  const double hl = 1.0, hr = 0.3;
  auto engine = [&](double inf0, double inf1) {
    RateInputs<double> in;
    in.V = {{0, hl}, {hr, 0}};
    in.infA_fV = {inf0, inf1};
    in.infA_2fV = {inf0, inf1};
    in.c = 3;
    return variance_decay_rates(in).variance_rate;
  };
  // Target set holding the shallow bottom.
  CHECK(engine(hl, 0) == doctest::Approx(doublewell_case_rate(hl, hr, DoubleWellCase::I)));
  // On the inner slope at height b above the shallow bottom.
  for (double b : {0.1, 0.2, 0.3}) {
    CHECK(engine(hl, b) ==
          doctest::Approx(doublewell_case_rate(hl, hr, DoubleWellCase::II, b)));
  }
  // On the outer slope below the inner barrier height.
  for (double b : {0.1, 0.25}) {
    CHECK(engine(hl + b, b) ==
          doctest::Approx(doublewell_case_rate(hl, hr, DoubleWellCase::III, b)));
  }
  // On the outer slope above it.
  for (double b : {0.4, 0.8}) {
    CHECK(engine(hl + b, b) ==
          doctest::Approx(doublewell_case_rate(hl, hr, DoubleWellCase::IV, b)));
  }
}

TEST_CASE("case parameter guards") {
  CHECK(code_of([] { doublewell_case_rate(0.3, 1.0, DoubleWellCase::I); }) ==
        Err::CaseParamOutOfRange);
  CHECK(code_of([] { doublewell_case_rate(1.0, -0.1, DoubleWellCase::I); }) ==
        Err::CaseParamOutOfRange);
  CHECK(code_of([] { doublewell_case_rate(1.0, 0.3, DoubleWellCase::II, 0.0); }) ==
        Err::CaseParamOutOfRange);
  CHECK(code_of([] { doublewell_case_rate(1.0, 0.3, DoubleWellCase::III, 0.5); }) ==
        Err::CaseParamOutOfRange);
  CHECK(code_of([] { doublewell_case_rate(1.0, 0.3, DoubleWellCase::IV, 0.3); }) ==
        Err::CaseParamOutOfRange);
}

TEST_CASE("pair weights and escape costs bound the rooted weights") {
  Philox rng(0xBEEF, 6);
  for (int t = 0; t < 20; ++t) {
    Profile p = random_profile(2 + static_cast<int>(rng.next_below(3)), 0x5000 + t);
    RMat V = profile_V(p);
    int n = static_cast<int>(V.size());

    // Rotate the deepest minimum into slot 0.
    RVec W(n);
    for (int j = 0; j < n; ++j) W[j] = min_wgraph_weight<Rat>(V, {j}).weight;
    int deep = 0;
    for (int j = 1; j < n; ++j)
      if (W[j] < W[deep]) deep = j;
    std::vector<int> order;
    order.push_back(deep);
    for (int j = 0; j < n; ++j)
      if (j != deep) order.push_back(j);
    RMat Vr(n, RVec(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Vr[i][j] = V[order[i]][order[j]];

    // Random nonempty target set, f = 0.
    std::vector<int> A;
    for (int j = 0; j < n; ++j)
      if (rng.next_below(2)) A.push_back(j);
    if (A.empty()) A.push_back(static_cast<int>(rng.next_below(n)));

    RateInputs<Rat> in;
    in.V = Vr;
    in.infA_fV.resize(n);
    for (int s = 0; s < n; ++s) {
      bool first = true;
      for (int t2 : A) {
        Rat v = Vr[s][t2];
        if (first || v < in.infA_fV[s]) in.infA_fV[s] = v;
        first = false;
      }
    }
    in.infA_2fV = in.infA_fV;
    in.f_sign = 1;

    Rat big = 1;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) big += Vr[i][j];
    in.c = big;
    RateReport<Rat> rep = variance_decay_rates(in);

    // Detaching the reference state's arrow from an optimal one-root graph
    // leaves a two-root graph and removes at least the cheapest escape.
    for (int j = 1; j < n; ++j) CHECK(rep.W[j] >= rep.W_pair[j] + rep.h1);

    // Hence the doubled bias numerator dominates the second family's minimum.
    Rat lhs_min = in.infA_fV[0] + rep.W[0];
    for (int j = 1; j < n; ++j) lhs_min = rat_min(lhs_min, in.infA_fV[j] + rep.W[j]);
    Rat lhs = 2 * lhs_min - 2 * rep.W[0] - rep.h1;
    Rat r2min = rep.R2[0];
    for (int j = 1; j < n; ++j) r2min = rat_min(r2min, rep.R2[j]);
    CHECK(lhs >= r2min);
  }
}

TEST_CASE("stable reduction on the exact double-well profile") {
  Profile p{{Rat(2), Rat(0), Rat(1), Rat(1, 2)}};
  RMat V_all = profile_V_all(p);
  std::vector<int> stable = {1, 3};
  RVec inf_all(4);
  for (int i = 0; i < 4; ++i) inf_all[i] = V_all[i][3];  // target: the shallow bottom
  StableReductionReport rep = stable_reduction_check(V_all, stable, inf_all);
  CHECK(rep.part1);
  CHECK(rep.part2);
  CHECK(rep.part3);
  CHECK(rep.part4);
  CHECK(rep.ok());

  // A subset containing a maximum is not a stable reduction.
  StableReductionReport bad = stable_reduction_check(V_all, {1, 2}, inf_all);
  CHECK_FALSE(bad.part2);
  CHECK_FALSE(bad.ok());

  CHECK(code_of([&] { stable_reduction_check(V_all, {1, 9}, inf_all); }) == Err::ConfigInvalid);
  CHECK(code_of([&] { stable_reduction_check(V_all, {}, inf_all); }) == Err::ConfigInvalid);
}
