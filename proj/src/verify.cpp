#include "crackle/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "crackle/error.hpp"
#include "crackle/geom.hpp"
#include "crackle/stats.hpp"

namespace crackle::verify {

namespace {

void record_pairs(TrialRecord& rec, const ph::CrackleDiagram& diag) {
    for (const auto& pr : diag.pairs) {
        TrialPair tp;
        tp.birth = pr.birth / diag.M;
        tp.death = pr.death / diag.M;
        tp.m = pr.component_size;
        tp.variant = diag.variant;
        rec.pairs.push_back(tp);
    }
    rec.skipped_components += diag.diagnostics.skipped_components;
}

TrialRecord run_one_trial(const model::ScalingPlan& plan, const model::RadialSampler& sampler,
                          std::uint64_t seed, const BatchOptions& opts) {
    TrialRecord rec;
    rec.seed = seed;
    auto cloud = model::sample_cloud(plan.tail, sampler, plan.n, seed);
    rec.cloud_size = cloud.size();
    if (opts.isolated) {
        auto diag = ph::crackle_diagram(cloud, plan, opts.diagram);
        rec.far_count = diag.diagnostics.far_count;
        record_pairs(rec, diag);
    }
    if (opts.connected_only) {
        auto diag = ph::crackle_diagram_tilde(cloud, plan, opts.diagram);
        rec.far_count = diag.diagnostics.far_count;
        record_pairs(rec, diag);
    }
    for (int m : opts.census_sizes) {
        auto diag = ph::subset_census_diagram(cloud, plan, m, opts.diagram);
        rec.far_count = diag.diagnostics.far_count;
        record_pairs(rec, diag);
    }
    return rec;
}

}  // namespace

TrialBatch run_trials(const model::ScalingPlan& plan, std::size_t trials,
                      std::uint64_t master_seed, const BatchOptions& opts) {
    if (trials < 1) throw Error("run_trials: trials must be >= 1");
    TrialBatch batch;
    batch.plan = plan;
    batch.master_seed = master_seed;
    batch.trials.resize(trials);
    const double rmin = opts.tail_sampling ? std::max(0.0, plan.R - 2.0 * plan.M) : 0.0;
    model::RadialSampler sampler(plan.tail, rmin);
    const int threads = std::max(1, opts.threads);
    if (threads == 1) {
        for (std::size_t t = 0; t < trials; ++t)
            batch.trials[t] = run_one_trial(plan, sampler, trial_seed(master_seed, t), opts);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                std::size_t t = next.fetch_add(1);
                if (t >= trials) break;
                batch.trials[t] = run_one_trial(plan, sampler, trial_seed(master_seed, t), opts);
            }
        };
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return batch;
}

std::vector<long long> TrialBatch::counts_in(const limits::RegionPtr& region, int m,
                                             ph::DiagramVariant variant) const {
    std::vector<long long> counts(trials.size(), 0);
    for (std::size_t t = 0; t < trials.size(); ++t)
        for (const auto& pr : trials[t].pairs)
            if (pr.variant == variant && (m == 0 || pr.m == m) &&
                region->contains(pr.birth, pr.death))
                counts[t] += 1;
    return counts;
}

TestReport poisson_gof(const std::vector<long long>& counts, const limits::LimitEstimate& lambda,
                       double significance) {
    TestReport rep;
    rep.name = "poisson_gof";
    rep.acceptance_rule =
        "chi2 p > significance; |mean - lambda| <= 3(mc se + trial se); "
        "|P(0) - exp(-lambda)| <= 3 binomial CI";
    const double lam = lambda.value;
    rep.reference = lam;
    rep.ref_stderr = lambda.stderr_;
    const std::size_t T = counts.size();
    if (T == 0) throw Error("poisson_gof: empty batch");
    if (lam < 0.05) {
        rep.degenerate = true;
        rep.pass = false;
        rep.acceptance_rule = "degenerate: lambda < 0.05, test powerless";
        return rep;
    }
    stats::Welford acc;
    long long zeros = 0, kmax = 0;
    for (long long c : counts) {
        acc.add(static_cast<double>(c));
        zeros += (c == 0);
        kmax = std::max(kmax, c);
    }
    const double mean = acc.mean;
    const double trial_se = acc.stderr_of_mean();
    rep.observed = mean;
    // chi-square with tail bins pooled to expected >= 5
    std::vector<double> expected;
    std::vector<double> observed;
    for (long long k = 0; k <= kmax; ++k) {
        expected.push_back(stats::poisson_pmf(k, lam) * static_cast<double>(T));
        long long obs = 0;
        for (long long c : counts) obs += (c == k);
        observed.push_back(static_cast<double>(obs));
    }
    expected.push_back(stats::poisson_sf(kmax, lam) * static_cast<double>(T));
    observed.push_back(0.0);
    while (expected.size() > 2 && expected.back() < 5.0) {
        expected[expected.size() - 2] += expected.back();
        observed[observed.size() - 2] += observed.back();
        expected.pop_back();
        observed.pop_back();
    }
    while (expected.size() > 2 && expected.front() < 5.0) {
        expected[1] += expected[0];
        observed[1] += observed[0];
        expected.erase(expected.begin());
        observed.erase(observed.begin());
    }
    double chi2 = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        double d = observed[i] - expected[i];
        chi2 += d * d / std::max(expected[i], 1e-12);
    }
    const double df = static_cast<double>(expected.size()) - 1.0;
    const double pval = stats::chi2_sf(chi2, std::max(df, 1.0));
    rep.p_value = pval;
    const bool chi_ok = pval > significance;
    // mean clause
    const double mean_tol = 3.0 * (lambda.stderr_ + trial_se);
    const bool mean_ok = std::fabs(mean - lam) <= mean_tol;
    // void clause
    const double void_hat = static_cast<double>(zeros) / static_cast<double>(T);
    const double void_ref = std::exp(-lam);
    const bool void_ok = within_binomial_ci(void_hat, void_ref, T);
    rep.tolerance = mean_tol;
    rep.pass = chi_ok && mean_ok && void_ok;
    rep.details["chi2"] = chi2;
    rep.details["chi2_df"] = df;
    rep.details["chi2_pass"] = chi_ok;
    rep.details["mean"] = mean;
    rep.details["mean_tol"] = mean_tol;
    rep.details["mean_pass"] = mean_ok;
    rep.details["trial_stderr"] = trial_se;
    rep.details["void_hat"] = void_hat;
    rep.details["void_ref"] = void_ref;
    rep.details["void_pass"] = void_ok;
    rep.details["trials"] = static_cast<double>(T);
    return rep;
}

TestReport hit_miss_estimate(const std::vector<long long>& counts,
                             const limits::LimitEstimate& lambda) {
    TestReport rep;
    rep.name = "hit_miss";
    rep.acceptance_rule = "|hit freq - (1 - exp(-lambda))| <= 3 binomial CI";
    const std::size_t T = counts.size();
    if (T == 0) throw Error("hit_miss_estimate: empty batch");
    long long hits = 0;
    for (long long c : counts) hits += (c > 0);
    const double phat = static_cast<double>(hits) / static_cast<double>(T);
    const double pref = 1.0 - std::exp(-lambda.value);
    rep.observed = phat;
    rep.reference = pref;
    rep.ref_stderr = lambda.stderr_ * std::exp(-lambda.value);
    rep.tolerance = 3.0 * std::sqrt(std::max(pref * (1.0 - pref), 1e-12) /
                                    static_cast<double>(T));
    rep.pass = std::fabs(phat - pref) <= rep.tolerance;
    rep.details["trials"] = static_cast<double>(T);
    return rep;
}

CoverageResult coverage_fraction(const std::vector<TrialBatch>& ladder,
                                 const limits::RegionPtr& region, double eps, int m_max,
                                 ph::DiagramVariant variant) {
    if (ladder.empty()) throw Error("coverage_fraction: empty ladder");
    const auto& plan0 = ladder.front().plan;
    if (m_max < plan0.k + 2)
        throw EmptyRegion("coverage_fraction: no eligible subset sizes (p = k+2)");
    auto centers = region->grid_centers(eps);
    CoverageResult out;
    out.cells = centers.size();
    if (centers.empty()) throw EmptyRegion("coverage_fraction: region has no grid cells");
    for (const auto& batch : ladder) {
        double frac_sum = 0.0;
        std::vector<char> pooled(centers.size(), 0);
        for (const auto& trial : batch.trials) {
            std::size_t covered = 0;
            for (std::size_t c = 0; c < centers.size(); ++c) {
                bool hit = false;
                for (const auto& pr : trial.pairs) {
                    if (pr.variant != variant || pr.m > m_max) continue;
                    double dx = pr.birth - centers[c].first, dy = pr.death - centers[c].second;
                    if (dx * dx + dy * dy < eps * eps) {
                        hit = true;
                        break;
                    }
                }
                if (hit) {
                    ++covered;
                    pooled[c] = 1;
                }
            }
            frac_sum += static_cast<double>(covered) / static_cast<double>(centers.size());
        }
        out.mean_fraction.push_back(frac_sum / static_cast<double>(batch.trials.size()));
        double pooled_cov = 0.0;
        for (char c : pooled) pooled_cov += c;
        out.pooled_fraction.push_back(pooled_cov / static_cast<double>(centers.size()));
    }
    for (std::size_t i = 1; i < out.mean_fraction.size(); ++i)
        if (out.mean_fraction[i] + 1e-12 < out.mean_fraction[i - 1]) out.non_decreasing = false;
    return out;
}

MomentScaling moment_scaling(const std::vector<TrialBatch>& ladder,
                             const limits::RegionPtr& region, int m,
                             ph::DiagramVariant variant) {
    if (ladder.size() < 2) throw InsufficientSpread("moment_scaling: need >= 2 rungs");
    MomentScaling out;
    for (const auto& batch : ladder) {
        const auto& plan = batch.plan;
        double x = plan.n * std::pow(plan.M, plan.d) * plan.tail.radial_density(plan.R);
        auto counts = batch.counts_in(region, m, variant);
        stats::Welford acc;
        for (long long c : counts) acc.add(static_cast<double>(c));
        if (acc.mean <= 0.0)
            throw Error("moment_scaling: zero mean count at a rung; enlarge trials or region");
        out.log_x.push_back(std::log(x));
        out.log_mean.push_back(std::log(acc.mean));
    }
    const auto [min_it, max_it] = std::minmax_element(out.log_x.begin(), out.log_x.end());
    if (*max_it - *min_it < std::log(10.0) * 0.999)
        throw InsufficientSpread("moment_scaling: ladder spans less than one decade");
    auto fit = stats::least_squares(out.log_x, out.log_mean);
    out.slope = fit.slope;
    out.slope_stderr = fit.slope_stderr;
    return out;
}

TestReport lifespan_law(const TrialBatch& batch, double t, double delta,
                        const limits::LimitEstimate& lambda_jt, ph::DiagramVariant variant) {
    TestReport rep;
    rep.name = "lifespan_law";
    rep.acceptance_rule =
        "|P(T > T(Delta_{k,p-1} cap I_t) + delta) - (1 - exp(-lambda(J_t)))| <= 3 binomial CI";
    const auto& plan = batch.plan;
    // T over the empty deterministic region is 0 by convention (p = k+2)
    const double pi_pm1 =
        (plan.p - 1 >= plan.k + 2) ? limits::pi_km(plan.k, plan.p - 1) : 1.0;
    const double threshold = (pi_pm1 - 1.0) * t + delta;
    std::size_t exceed = 0, contributing = 0;
    for (const auto& trial : batch.trials) {
        double tmax = 0.0;
        bool any = false;
        for (const auto& pr : trial.pairs) {
            if (pr.variant != variant) continue;
            if (pr.birth <= t) {
                tmax = std::max(tmax, pr.death - pr.birth);
                any = true;
            }
        }
        if (any) ++contributing;
        if (tmax > threshold) ++exceed;
    }
    const std::size_t T = batch.trials.size();
    const double phat = static_cast<double>(exceed) / static_cast<double>(T);
    const double pref = 1.0 - std::exp(-lambda_jt.value);
    rep.observed = phat;
    rep.reference = pref;
    rep.ref_stderr = lambda_jt.stderr_ * std::exp(-lambda_jt.value);
    rep.tolerance =
        3.0 * std::sqrt(std::max(pref * (1.0 - pref), 1e-12) / static_cast<double>(T));
    rep.pass = std::fabs(phat - pref) <= rep.tolerance;
    rep.details["threshold"] = threshold;
    rep.details["delta"] = delta;
    rep.details["trials_with_pairs"] = static_cast<double>(contributing);
    rep.details["trials"] = static_cast<double>(T);
    return rep;
}

TestReport lifespan_law_cdf(const TrialBatch& batch, double t, const std::vector<double>& zs,
                            const std::vector<limits::LimitEstimate>& lambda_above,
                            ph::DiagramVariant variant) {
    if (zs.size() != lambda_above.size() || zs.empty())
        throw Error("lifespan_law_cdf: need one lambda per grid level");
    TestReport rep;
    rep.name = "lifespan_law_cdf";
    rep.acceptance_rule =
        "max_z |P(T <= z) - exp(-lambda({lifespan > z}))| <= 3 binomial CI";
    const std::size_t T = batch.trials.size();
    std::vector<double> tmax(T, 0.0);
    for (std::size_t i = 0; i < T; ++i)
        for (const auto& pr : batch.trials[i].pairs)
            if (pr.variant == variant && pr.birth <= t)
                tmax[i] = std::max(tmax[i], pr.death - pr.birth);
    double worst = 0.0, worst_tol = 0.0;
    for (std::size_t j = 0; j < zs.size(); ++j) {
        double cdf_hat = 0.0;
        for (double v2 : tmax) cdf_hat += (v2 <= zs[j]);
        cdf_hat /= static_cast<double>(T);
        double cdf_ref = std::exp(-lambda_above[j].value);
        double tol =
            3.0 * std::sqrt(std::max(cdf_ref * (1.0 - cdf_ref), 1e-12) /
                            static_cast<double>(T));
        if (std::fabs(cdf_hat - cdf_ref) - tol > worst - worst_tol) {
            worst = std::fabs(cdf_hat - cdf_ref);
            worst_tol = tol;
            rep.observed = cdf_hat;
            rep.reference = cdf_ref;
            rep.details["z"] = zs[j];
        }
    }
    rep.tolerance = worst_tol;
    rep.pass = worst <= worst_tol;
    rep.details["trials"] = static_cast<double>(T);
    return rep;
}

bool within_binomial_ci(double phat, double p_ref, std::size_t trials, double z) {
    double halfwidth = z * std::sqrt(std::max(p_ref * (1.0 - p_ref), 1e-12) /
                                     static_cast<double>(trials));
    return std::fabs(phat - p_ref) <= halfwidth;
}

}  // namespace crackle::verify
