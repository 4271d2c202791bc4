#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>

#include "crackle/error.hpp"
#include "crackle/limits.hpp"
#include "crackle/ph.hpp"

using namespace crackle;
using namespace crackle::limits;

namespace {
constexpr double kPi13 = 1.1547005383792515;
constexpr double kB13 = 1.4142135623730951;
}  // namespace

TEST_SUITE_BEGIN("limits");

TEST_CASE("cached constants and their sanity bounds") {
    // (1,3) is analytic; the full 200-restart optimizer cross-check runs in
    // acceptance criterion 3
    CHECK(pi_km(1, 3) == doctest::Approx(kPi13).epsilon(1e-12));
    CHECK(b_km(1, 3) == doctest::Approx(kB13).epsilon(1e-12));
    CHECK(pi_km(1, 4) >= std::sqrt(2.0) - 1e-6);
    CHECK(pi_km(2, 4) >= 1.0);
    CHECK(b_km(1, 4) <= 3.0);                // b_{k,m} < m-1 sanity bound
    CHECK(b_km(1, 4) >= b_km(1, 3) - 1e-9);  // non-decreasing in m
    CHECK(pi_km(1, 3, OptimizerBudget{0, 0, 0}) == doctest::Approx(kPi13));  // cache hit
    CHECK_THROWS_AS(pi_km(3, 9, OptimizerBudget{0, 0, 0}), Unsupported);
    CHECK_THROWS_AS(b_km(2, 3), Error);  // m < k+2
}

TEST_CASE("region membership on the named points") {
    auto b13 = Region::b_km_region(1, 3);
    CHECK(b13->contains(1.0, 1.1));          // 1.1 <= pi13 * 1.0 and 1.0 <= b13
    CHECK(!b13->contains(1.0, 1.16));        // above the cone
    CHECK(!b13->contains(1.5, 1.55));        // x beyond b13
    CHECK(!Region::delta()->contains(2.0, 1.0));  // below the diagonal
    auto d13 = Region::delta_km(1, 3);
    CHECK(d13->contains(1.5, 1.55));
    // boundary tolerance
    CHECK(d13->contains(1.0, kPi13 + 0.5e-9));
    CHECK(!d13->contains(1.0, kPi13 + 1e-6));
}

TEST_CASE("region nesting and erosion") {
    auto b13 = Region::b_km_region(1, 3);
    auto d13 = Region::delta_km(1, 3);
    auto d14 = Region::delta_km(1, 4);
    int inside = 0;
    for (int i = 0; i < 100; ++i) {
        for (int j = 0; j < 100; ++j) {
            double x = 0.02 * i, y = 0.02 * j;
            if (b13->contains(x, y)) {
                ++inside;
                CHECK(d13->contains(x, y));
            }
            if (d13->contains(x, y)) CHECK(d14->contains(x, y));  // monotone in m
        }
    }
    CHECK(inside > 100);
    auto shrunk = b13->shrink(0.1);
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
            double x = 0.02 * i, y = 0.02 * j;
            if (shrunk->contains(x, y)) CHECK(b13->contains(x, y));
        }
    // erosion leaves a margin from the diagonal
    CHECK(!shrunk->contains(0.7, 0.7));
    CHECK(b13->contains(0.7, 0.7));
}

TEST_CASE("J_t region: empty when t is below any feasible birth") {
    auto jt = Region::j_t(0.8 * kB13, 1, 4);
    // grid scan: J_t sits strictly above the lifespan threshold
    double t = 0.8 * kB13;
    double thr = (kPi13 - 1.0) * t;
    auto centers = jt->grid_centers(0.01);
    CHECK(!centers.empty());
    for (auto [x, y] : centers) {
        CHECK(x <= t + 1e-9);
        CHECK(y - x >= thr - 1e-9);
    }
    // a tiny t gives an empty-measure region for the rect test sets
    auto jt_small = Region::j_t(1e-6, 1, 4);
    auto small_centers = jt_small->grid_centers(0.01);
    CHECK(small_centers.empty());
}

TEST_CASE("mean_measure_heavy: prefactor, vanishing set, additivity") {
    // region outside Delta_{1,3} entirely: zero estimate
    auto off = Region::intersect({Region::rect(2.0, 3.0, 3.5, 4.0)});
    auto est_off = mean_measure_heavy(off, 1, 3, 3.0, 2, 50'000, 7);
    CHECK(est_off.value == 0.0);
    CHECK(est_off.stderr_ == 0.0);
    // prefactor pi/21 for k=1,p=3,alpha=3,d=2
    CHECK(est_off.coefficient == doctest::Approx(M_PI / 21.0).epsilon(1e-12));

    auto a1 = Region::intersect({Region::rect(0.2, 0.6, 0.2, 1.0), Region::delta_km(1, 3)});
    auto a2 = Region::intersect({Region::rect(0.6, 1.0, 0.2, 1.3), Region::delta_km(1, 3)});
    auto both = Region::intersect({Region::rect(0.2, 1.0, 0.2, 1.3), Region::delta_km(1, 3)});
    auto ests = mean_measure_heavy({a1, a2, both}, 1, 3, 3.0, 2, 400'000, 11);
    // disjoint halves: raw integer counts add exactly on the shared stream
    CHECK(ests[0].raw_sum + ests[1].raw_sum == ests[2].raw_sum);
    CHECK(ests[0].value + ests[1].value ==
          doctest::Approx(ests[2].value).epsilon(1e-12));
    // monotonicity under containment on a shared stream
    CHECK(ests[0].value <= ests[2].value + 3.0 * ests[2].stderr_);
    CHECK(ests[2].value > 0.0);
    CHECK(ests[2].acceptance_rate > 0.01);

    // doubling alpha rescales by the exact prefactor ratio on the same stream
    auto est_a = mean_measure_heavy(both, 1, 3, 3.0, 2, 200'000, 13);
    auto est_b = mean_measure_heavy(both, 1, 3, 6.0, 2, 200'000, 13);
    CHECK(est_b.value == doctest::Approx(est_a.value * 7.0 / 16.0).epsilon(1e-12));
}

TEST_CASE("mean_measure_exp: c = infinity matches heavy up to the constant") {
    auto sets = std::vector<RegionPtr>{
        Region::intersect({Region::rect(0.2, 0.6, 0.2, 1.0), Region::delta_km(1, 3)}),
        Region::intersect({Region::rect(0.6, 1.0, 0.2, 1.3), Region::delta_km(1, 3)}),
        Region::intersect({Region::rect(0.1, 1.0, 1.0, 1.2), Region::delta_km(1, 3)})};
    auto heavy = mean_measure_heavy(sets, 1, 3, 3.0, 2, 600'000, 21);
    auto expinf = mean_measure_exp(sets, 1, 3,
                                   std::numeric_limits<double>::infinity(), 2, 600'000, 22);
    // exp-to-heavy ratio = (alpha p - d)/p = 7/3 across disjoint sets
    for (std::size_t i = 0; i < sets.size(); ++i) {
        double ratio = expinf[i].value / heavy[i].value;
        double se = 3.0 * (expinf[i].stderr_ / heavy[i].value +
                           heavy[i].stderr_ * expinf[i].value /
                               (heavy[i].value * heavy[i].value));
        CHECK(std::fabs(ratio - 7.0 / 3.0) <= se);
    }
}

TEST_CASE("mean_measure_exp: indicator tightens as c decreases") {
    auto region = Region::intersect({Region::rect(0.2, 1.0, 0.3, 1.3), Region::delta_km(1, 3)});
    auto at_c1 = mean_measure_exp(region, 1, 3, 1.0, 2, 400'000, 33);
    auto at_c01 = mean_measure_exp(region, 1, 3, 0.1, 2, 400'000, 33);
    CHECK(at_c1.value > 0.0);
    CHECK(at_c01.value <= at_c1.value);
    CHECK_THROWS_AS(mean_measure_exp(region, 1, 3, -1.0, 2, 1000, 1), Error);
}

TEST_CASE("ball_union_mass behaviors") {
    auto tail = model::TailModel::pareto(3.0, 2);
    // tiny radius: vanishing mass
    auto tiny = ball_union_mass({0.0, 0.0}, 2, 1e-3, tail, 20'000, 3);
    CHECK(tiny.value < 1e-4);
    // huge single ball at the origin covers nearly all mass
    auto big = ball_union_mass({0.0, 0.0}, 2, 400.0, tail, 400'000, 5);
    CHECK(big.value > 0.95);
    CHECK(big.value < 1.05);
    // two far-apart balls split into single-ball masses
    auto b1 = ball_union_mass({5.0, 0.0}, 2, 1.0, tail, 400'000, 8);
    auto b2 = ball_union_mass({0.0, 9.0}, 2, 1.0, tail, 400'000, 9);
    auto sum = ball_union_mass({5.0, 0.0, 0.0, 9.0}, 2, 1.0, tail, 1'600'000, 10);
    double se = 3.0 * (b1.stderr_ + b2.stderr_ + sum.stderr_);
    CHECK(std::fabs(sum.value - (b1.value + b2.value)) <= se);
}

TEST_CASE("constants table file round trip") {
    auto& table = ConstantsTable::instance();
    std::string path = "constants_roundtrip.txt";
    table.save_file(path);
    ConstantsTable copy = table;
    copy.load_file(path);
    auto a = table.lookup(1, 3);
    auto b = copy.lookup(1, 3);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->pi == b->pi);
    CHECK(a->b == b->b);
    std::remove(path.c_str());
}

TEST_SUITE_END();
