#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crackle/limits.hpp"
#include "crackle/model.hpp"
#include "crackle/ph.hpp"

namespace crackle::verify {

/// one scaled persistence pair kept in a trial summary
struct TrialPair {
    double birth = 0.0;  // scaled by 1/M
    double death = 0.0;
    int m = 0;
    ph::DiagramVariant variant = ph::DiagramVariant::Isolated;
};

struct TrialRecord {
    std::uint64_t seed = 0;
    std::size_t cloud_size = 0;
    std::size_t far_count = 0;
    std::size_t skipped_components = 0;
    std::vector<TrialPair> pairs;
};

struct BatchOptions {
    bool isolated = true;
    bool connected_only = true;
    std::vector<int> census_sizes;  // subset-census oracle sizes to record
    ph::DiagramOptions diagram;
    int threads = 1;
    /// sample only the layer {||x|| >= R - 2M}; the far components and their
    /// isolation status are functions of that layer only, so diagrams are
    /// unchanged while huge-n trials stay tractable
    bool tail_sampling = true;
};

struct TrialBatch {
    model::ScalingPlan plan;
    std::uint64_t master_seed = 0;
    std::vector<TrialRecord> trials;

    /// per-trial counts of scaled pairs inside `region` from subsets of size
    /// m (m = 0: any size) and the given variant
    std::vector<long long> counts_in(const limits::RegionPtr& region, int m,
                                     ph::DiagramVariant variant) const;
};

TrialBatch run_trials(const model::ScalingPlan& plan, std::size_t trials,
                      std::uint64_t master_seed, const BatchOptions& opts = {});

struct TestReport {
    std::string name;
    std::string acceptance_rule;
    double observed = 0.0;
    double reference = 0.0;
    double ref_stderr = 0.0;
    std::optional<double> p_value;
    double tolerance = 0.0;
    bool pass = false;
    bool degenerate = false;
    std::map<std::string, double> details;
};

/// chi-square GOF of per-trial counts against Poisson(lambda), tail bins
/// pooled to expected >= 5, plus mean and void-probability clauses
TestReport poisson_gof(const std::vector<long long>& counts, const limits::LimitEstimate& lambda,
                       double significance = 0.01);

/// empirical hit frequency of region K vs 1 - exp(-lambda(K))
TestReport hit_miss_estimate(const std::vector<long long>& counts,
                             const limits::LimitEstimate& lambda);

struct CoverageResult {
    std::vector<double> mean_fraction;   // one per rung
    std::vector<double> pooled_fraction; // batch-pooled diagnostic
    std::size_t cells = 0;
    bool non_decreasing = true;
};

/// Per-trial fraction of eps-grid cells of `region` whose centers lie within
/// eps of a scaled pair with subset size <= m_max; averaged per rung.
CoverageResult coverage_fraction(const std::vector<TrialBatch>& ladder,
                                 const limits::RegionPtr& region, double eps, int m_max,
                                 ph::DiagramVariant variant);

struct MomentScaling {
    double slope = 0.0;
    double slope_stderr = 0.0;
    std::vector<double> log_x;     // log(n M^d f(R)) per rung
    std::vector<double> log_mean;  // log mean count per rung
};

MomentScaling moment_scaling(const std::vector<TrialBatch>& ladder,
                             const limits::RegionPtr& region, int m,
                             ph::DiagramVariant variant);

/// empirical exceedance P(T > (pi_{k,p-1}-1) t + delta) of the maximal
/// lifespan among pairs with scaled birth <= t, vs 1 - exp(-lambda(J_t));
/// for p = k+2 the deterministic part is empty and the threshold is delta
TestReport lifespan_law(const TrialBatch& batch, double t, double delta,
                        const limits::LimitEstimate& lambda_jt, ph::DiagramVariant variant);

/// p = k+2 full-law comparison: the empirical CDF of T against the Poisson
/// functional law P(T <= z) = exp(-lambda({pairs with lifespan > z, birth <= t}))
TestReport lifespan_law_cdf(const TrialBatch& batch, double t, const std::vector<double>& zs,
                            const std::vector<limits::LimitEstimate>& lambda_above,
                            ph::DiagramVariant variant);

/// binomial comparison helper: |phat - p_ref| <= 3 sqrt(p_ref(1-p_ref)/trials)
bool within_binomial_ci(double phat, double p_ref, std::size_t trials, double z = 3.0);

}  // namespace crackle::verify
