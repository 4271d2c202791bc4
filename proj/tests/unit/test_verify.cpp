#include <doctest.h>

#include <cmath>

#include "crackle/error.hpp"
#include "crackle/rng.hpp"
#include "crackle/stats.hpp"
#include "crackle/verify.hpp"

using namespace crackle;
using namespace crackle::verify;

namespace {

limits::LimitEstimate fake_lambda(double value, double se = 1e-4) {
    limits::LimitEstimate est;
    est.value = value;
    est.stderr_ = se;
    est.samples = 1;
    return est;
}

std::vector<long long> poisson_counts(double mean, std::size_t trials, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<long long> out(trials);
    for (auto& c : out) c = rng.poisson(mean);
    return out;
}

TrialBatch synthetic_batch(const std::vector<std::vector<TrialPair>>& trials) {
    TrialBatch batch;
    batch.plan.tail = model::TailModel::pareto(3.0, 2);
    batch.plan.k = 1;
    batch.plan.p = 4;
    batch.plan.M = 1.0;
    batch.plan.R = 10.0;
    for (const auto& pairs : trials) {
        TrialRecord rec;
        rec.pairs = pairs;
        batch.trials.push_back(rec);
    }
    return batch;
}

TrialPair census_pair(double b, double d, int m) {
    TrialPair p;
    p.birth = b;
    p.death = d;
    p.m = m;
    p.variant = ph::DiagramVariant::SubsetCensus;
    return p;
}

}  // namespace

TEST_SUITE_BEGIN("verify");

TEST_CASE("poisson_gof calibration under its null") {
    // synthetic counts drawn from Poisson(lambda): p-values spread out and
    // the test passes most of the time
    int passes = 0;
    double psum = 0.0;
    for (int rep = 0; rep < 40; ++rep) {
        auto counts = poisson_counts(1.3, 1000, 1000 + rep);
        auto rep_out = poisson_gof(counts, fake_lambda(1.3));
        passes += rep_out.pass;
        psum += *rep_out.p_value;
    }
    CHECK(passes >= 34);
    CHECK(psum / 40.0 > 0.2);  // mean p-value near 1/2 under the null
    CHECK(psum / 40.0 < 0.8);
}

TEST_CASE("poisson_gof power against a doubled mean") {
    int rejects = 0;
    for (int rep = 0; rep < 30; ++rep) {
        auto counts = poisson_counts(2.0, 1000, 77 + rep);
        auto rep_out = poisson_gof(counts, fake_lambda(1.0));
        rejects += !rep_out.pass;
    }
    CHECK(rejects >= 27);  // > 90 percent rejection at lambda = 1
}

TEST_CASE("poisson_gof degenerate guard and zero-count consistency") {
    auto zeros = std::vector<long long>(200, 0);
    auto rep = poisson_gof(zeros, fake_lambda(0.01));
    CHECK(rep.degenerate);
    auto rep2 = poisson_gof(poisson_counts(0.2, 2000, 5), fake_lambda(0.2));
    CHECK(rep2.pass);
}

TEST_CASE("hit_miss frequencies") {
    // zero-measure set: frequency must be zero
    auto rep = hit_miss_estimate(std::vector<long long>(500, 0), fake_lambda(0.0, 0.0));
    CHECK(rep.observed == 0.0);
    CHECK(rep.pass);
    // calibrated frequency
    Rng rng(4242);
    std::vector<long long> counts(2000);
    for (auto& c : counts) c = rng.poisson(0.7);
    auto rep2 = hit_miss_estimate(counts, fake_lambda(0.7));
    CHECK(rep2.pass);
    // superset monotonicity: on the same batch, a superset hits at least as often
    std::vector<long long> super(counts);
    for (auto& c : super) c += 1;  // superset region sees every pair and more
    long long h1 = 0, h2 = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        h1 += counts[i] > 0;
        h2 += super[i] > 0;
    }
    CHECK(h2 >= h1);
}

TEST_CASE("coverage_fraction: conventions and errors") {
    auto region = limits::Region::b_km_region(1, 3);
    // single pair with a huge epsilon covers everything
    auto batch = synthetic_batch({{census_pair(0.7, 0.75, 3)}});
    auto cov = coverage_fraction({batch}, region, 2.0, 3, ph::DiagramVariant::SubsetCensus);
    CHECK(cov.mean_fraction[0] == doctest::Approx(1.0));
    // p = k+2 leaves no eligible sizes
    CHECK_THROWS_AS(
        coverage_fraction({batch}, region, 0.05, 2, ph::DiagramVariant::SubsetCensus),
        EmptyRegion);
    // empty diagrams cover nothing
    auto empty_batch = synthetic_batch({{}});
    auto cov0 = coverage_fraction({empty_batch}, region, 0.05, 3,
                                  ph::DiagramVariant::SubsetCensus);
    CHECK(cov0.mean_fraction[0] == 0.0);
    CHECK(cov0.cells > 50);  // the 0.05-grid on the thin B_{1,3} cone
}

TEST_CASE("moment_scaling: exact regression identity and spread guard") {
    // perfect power-law means: slope exactly -1 (regression identity)
    std::vector<double> lx, ly;
    for (double x : {0.3, 0.2, 0.1, 0.05, 0.032}) {
        lx.push_back(std::log(x));
        ly.push_back(std::log(2.5 / x));
    }
    auto fit = stats::least_squares(lx, ly);
    CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));

    // spread guard: two batches at nearly the same n
    auto tail = model::TailModel::pareto(3.0, 2);
    auto plan1 = model::make_plan(tail, 1, 4, 1e4, 1.0);
    auto plan2 = model::make_plan(tail, 1, 4, 1.2e4, 1.0);
    TrialBatch b1 = synthetic_batch({{census_pair(0.5, 0.55, 3)}});
    b1.plan = plan1;
    TrialBatch b2 = synthetic_batch({{census_pair(0.5, 0.55, 3)}});
    b2.plan = plan2;
    auto region = limits::Region::delta();
    CHECK_THROWS_AS(moment_scaling({b1, b2}, region, 3, ph::DiagramVariant::SubsetCensus),
                    InsufficientSpread);
}

TEST_CASE("lifespan_law conventions") {
    // empty diagrams: T = 0, exceedance 0, compared against lambda(J_t) = 0
    auto batch = synthetic_batch(std::vector<std::vector<TrialPair>>(50));
    auto rep = lifespan_law(batch, 1.0, 0.1, fake_lambda(0.0, 0.0),
                            ph::DiagramVariant::SubsetCensus);
    CHECK(rep.observed == 0.0);
    CHECK(rep.pass);
    // a pair beyond the threshold registers as an exceedance
    double t = 1.0;
    double thr = (1.1547005383792515 - 1.0) * t;
    auto batch2 = synthetic_batch({{census_pair(0.5, 0.5 + thr + 0.2, 4)},
                                   {census_pair(0.5, 0.5 + 0.5 * thr, 3)}});
    auto rep2 = lifespan_law(batch2, t, 0.1, fake_lambda(0.69), ph::DiagramVariant::SubsetCensus);
    CHECK(rep2.observed == doctest::Approx(0.5));
}

TEST_CASE("lifespan law at p = k+2 and the full-law CDF comparison") {
    // p = k+2: the deterministic region is empty, T(empty) = 0, so the
    // threshold is just delta and J_t spans the whole cone up to t
    auto batch = synthetic_batch({{census_pair(0.5, 0.62, 3)}, {census_pair(0.5, 0.55, 3)}});
    batch.plan.p = 3;  // k = 1
    auto rep = lifespan_law(batch, 1.0, 0.1, fake_lambda(0.2), ph::DiagramVariant::SubsetCensus);
    CHECK(rep.observed == doctest::Approx(0.5));  // one trial exceeds 0.1
    auto jt = limits::Region::j_t(1.0, 1, 3);
    CHECK(jt->contains(0.5, 0.62));  // lifespan threshold 0 at p = k+2
    // CDF comparison against synthetic per-level intensities
    std::vector<double> zs = {0.05, 0.1, 0.2};
    std::vector<limits::LimitEstimate> lams(3);
    // exact law of this two-trial batch: P(T <= z) = 0, 0.5, 1
    lams[0] = fake_lambda(50.0, 0.0);                 // exp(-50) ~ 0
    lams[1] = fake_lambda(std::log(2.0), 0.0);        // exp = 0.5
    lams[2] = fake_lambda(0.0, 0.0);                  // exp = 1
    auto cdf_rep = lifespan_law_cdf(batch, 1.0, zs, lams, ph::DiagramVariant::SubsetCensus);
    CHECK(cdf_rep.details["trials"] == 2.0);
    CHECK(std::fabs(cdf_rep.observed - cdf_rep.reference) <= cdf_rep.tolerance + 1.0);
}

TEST_CASE("run_trials determinism and reproducibility") {
    auto tail = model::TailModel::pareto(3.0, 2);
    auto plan = model::make_plan(tail, 1, 3, 2e3, 1.0);
    BatchOptions opts;
    opts.census_sizes = {3};
    auto b1 = run_trials(plan, 20, 99, opts);
    auto b2 = run_trials(plan, 20, 99, opts);
    REQUIRE(b1.trials.size() == b2.trials.size());
    for (std::size_t t = 0; t < b1.trials.size(); ++t) {
        CHECK(b1.trials[t].seed == b2.trials[t].seed);
        CHECK(b1.trials[t].cloud_size == b2.trials[t].cloud_size);
        REQUIRE(b1.trials[t].pairs.size() == b2.trials[t].pairs.size());
        for (std::size_t i = 0; i < b1.trials[t].pairs.size(); ++i) {
            CHECK(b1.trials[t].pairs[i].birth == b2.trials[t].pairs[i].birth);
            CHECK(b1.trials[t].pairs[i].death == b2.trials[t].pairs[i].death);
        }
    }
    // threaded run gives the identical batch
    BatchOptions threaded = opts;
    threaded.threads = 4;
    auto b3 = run_trials(plan, 20, 99, threaded);
    for (std::size_t t = 0; t < b1.trials.size(); ++t) {
        REQUIRE(b3.trials[t].pairs.size() == b1.trials[t].pairs.size());
        for (std::size_t i = 0; i < b1.trials[t].pairs.size(); ++i)
            CHECK(b1.trials[t].pairs[i].birth == b3.trials[t].pairs[i].birth);
    }
    // distinct seeds per trial
    CHECK(b1.trials[0].seed != b1.trials[1].seed);
}

TEST_CASE("tilde dominates isolated per trial; the mean gap shrinks" * doctest::timeout(600)) {
    auto A = limits::Region::intersect(
        {limits::Region::rect(0.2, 1.0, 0.3, 1.3), limits::Region::delta_km(1, 3)});
    auto tail = model::TailModel::pareto(3.0, 2);
    BatchOptions opts;
    opts.threads = 2;
    double rel_gap[2] = {0.0, 0.0};
    const double ns[2] = {1e4, 1.6e5};
    const std::size_t trials[2] = {2500, 1500};
    for (int r = 0; r < 2; ++r) {
        auto plan = model::make_plan(tail, 1, 3, ns[r], 1.0);
        auto batch = run_trials(plan, trials[r], 606 + r, opts);
        auto iso = batch.counts_in(A, 3, ph::DiagramVariant::Isolated);
        auto til = batch.counts_in(A, 3, ph::DiagramVariant::ConnectedOnly);
        long long iso_sum = 0, til_sum = 0;
        for (std::size_t t2 = 0; t2 < iso.size(); ++t2) {
            REQUIRE(til[t2] >= iso[t2]);  // per-trial dominance
            iso_sum += iso[t2];
            til_sum += til[t2];
        }
        REQUIRE(iso_sum > 0);
        rel_gap[r] = static_cast<double>(til_sum - iso_sum) / static_cast<double>(iso_sum);
    }
    CHECK(rel_gap[1] < rel_gap[0]);  // equal limits: the relative gap closes
}

TEST_CASE("run_trials mean count against the census expectation" * doctest::timeout(600)) {
    // the tilde census mean at moderate n sits within a few percent of the
    // limit lambda(A); at this desk scale allow 3 sigma + 12 percent bias
    auto tail = model::TailModel::pareto(3.0, 2);
    auto plan = model::make_plan(tail, 1, 3, 1e5, 1.0);
    auto region = limits::Region::intersect(
        {limits::Region::rect(0.2, 1.0, 0.3, 1.3), limits::Region::delta_km(1, 3)});
    auto region_shrunk = region->shrink(0.02);
    auto lam = limits::mean_measure_heavy(region_shrunk, 1, 3, 3.0, 2, 2'000'000, 17);
    BatchOptions opts;
    opts.census_sizes = {3};
    opts.isolated = false;
    opts.connected_only = false;
    auto batch = run_trials(plan, 400, 31337, opts);
    auto counts = batch.counts_in(region_shrunk, 3, ph::DiagramVariant::SubsetCensus);
    stats::Welford acc;
    for (auto c : counts) acc.add(static_cast<double>(c));
    CHECK(acc.mean > lam.value * 0.85 - 3.0 * acc.stderr_of_mean());
    CHECK(acc.mean < lam.value * 1.02 + 3.0 * acc.stderr_of_mean());
}

TEST_SUITE_END();
