#pragma once

#include <string>
#include <vector>

#include "crackle/config.hpp"
#include "crackle/verify.hpp"

namespace crackle::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// derived master seed for one rung of a ladder
std::uint64_t rung_seed(std::uint64_t master_seed, std::size_t rung);

std::string run_sample(const RunConfig& cfg);                       // -> cloud csv path
std::string run_diagram(const RunConfig& cfg, std::string cloud_csv = "");  // -> diagram csv
std::string run_integrate(const RunConfig& cfg);                    // -> lambda csv
/// full battery; returns overall pass, writes reports.jsonl + manifest
bool run_verify(const RunConfig& cfg);
std::string run_plot(const RunConfig& cfg, const std::string& diagram_csv);  // -> svg path

/// limiting mean measure of `region` under the config's tail family
limits::LimitEstimate limit_measure(const RunConfig& cfg, const limits::RegionPtr& region,
                                    std::size_t samples, std::uint64_t seed);

std::string report_to_json(const verify::TestReport& rep);

}  // namespace crackle::cli
