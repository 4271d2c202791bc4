#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crackle/limits.hpp"
#include "crackle/model.hpp"

namespace crackle::cli {

/// Flat key=value configuration with dotted sections. Unknown keys are
/// rejected; values round-trip losslessly (17 significant digits for reals).
struct RunConfig {
    // tail
    model::TailKind tail_kind = model::TailKind::ParetoRV;
    double alpha = 3.0;
    double tau = 1.0;
    int dim = 2;
    // plan
    int k = 1;
    int p = 3;
    std::vector<double> n_ladder;  // one entry for a single-n run
    double M = 1.0;
    model::Regime regime = model::Regime::Critical;
    double kappa = 1.5;
    // execution
    std::size_t trials = 100;
    std::uint64_t master_seed = 42;
    int threads = 1;
    std::string out_dir = "out";
    std::size_t mc_samples = 2'000'000;
    std::uint64_t mc_seed = 7;
    int m_cap = 16;
    double sample_budget = 2e7;  // cmd_sample refuses beyond this expected count
    // battery settings
    std::string gof_region = "A";
    double coverage_eps = 0.05;
    std::string coverage_region;
    double lifespan_t = 0.0;  // 0 disables the lifespan report
    double lifespan_delta = 0.1;
    // named regions, plus their primitive spec strings for serialization
    std::map<std::string, limits::RegionPtr> regions;
    std::map<std::string, std::map<std::string, std::string>> region_specs;

    std::string raw_text;  // canonical serialized form

    static RunConfig parse_file(const std::string& path);
    static RunConfig parse(const std::string& text);
    std::string serialize() const;

    model::TailModel tail() const;
    std::vector<model::ScalingPlan> plans() const;
    limits::RegionPtr region(const std::string& name) const;
};

}  // namespace crackle::cli
