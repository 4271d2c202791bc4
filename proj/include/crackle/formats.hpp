#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crackle/model.hpp"
#include "crackle/ph.hpp"

namespace crackle::cli {

std::string format_real(double x);  // 17 significant digits
std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

void write_cloud_csv(const std::string& path, const model::PointCloud& cloud);
model::PointCloud read_cloud_csv(const std::string& path);

struct DiagramRow {
    int trial = 0;
    int component_id = -1;
    int m = 0;
    int dim = 1;
    double birth = 0.0, death = 0.0;
    double birth_scaled = 0.0, death_scaled = 0.0;
};

void write_diagram_csv(const std::string& path, const std::vector<DiagramRow>& rows);
std::vector<DiagramRow> read_diagram_csv(const std::string& path);

struct LambdaRow {
    std::string region;
    std::string kind;  // "heavy" or "exp"
    double lambda = 0.0, stderr_ = 0.0;
    std::size_t samples = 0;
    double acceptance_rate = 0.0;
};

void write_lambda_csv(const std::string& path, const std::vector<LambdaRow>& rows);

/// persistence-diagram scatter with the deterministic region shaded; pure
/// function of its inputs
std::string render_diagram_svg(const std::vector<DiagramRow>& rows, int k, int p);

struct Manifest {
    std::string tool_version;
    std::string constants_version;
    std::string config_hash;
    std::string started;
    std::string finished;
    std::vector<std::pair<std::string, std::string>> files;  // path -> digest

    void add_file(const std::string& path);
    void write(const std::string& path) const;
};

}  // namespace crackle::cli
