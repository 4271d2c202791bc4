#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "crackle/model.hpp"

namespace crackle::geom {

/// radius of the smallest enclosing ball (Welzl, move-to-front)
double meb_radius(const std::vector<double>& coords, int dim);
double meb_radius(const double* coords, std::size_t count, int dim);

struct Simplex {
    std::vector<int> vertices;  // sorted ascending
    double value = 0.0;         // smallest-enclosing-ball radius
    int dim() const { return static_cast<int>(vertices.size()) - 1; }
};

struct Filtration {
    std::vector<Simplex> simplices;  // sorted by (value, dim, lex vertices)
    int max_dim = 0;
    int point_count = 0;
};

constexpr double kNoCap = std::numeric_limits<double>::infinity();

/// All subsets of size <= max_dim+1 with MEB radius <= value_cap, as a sorted
/// filtration. Enumeration expands cliques of the 2*value_cap neighborhood
/// graph. Throws BudgetExceeded past simplex_budget.
Filtration cech_filtration(const double* coords, std::size_t count, int dim, int max_dim,
                           double value_cap = kNoCap, std::size_t simplex_budget = 2'000'000);
Filtration cech_filtration(const std::vector<double>& coords, int dim, int max_dim,
                           double value_cap = kNoCap, std::size_t simplex_budget = 2'000'000);

struct ComponentPartition {
    std::vector<int> labels;          // per-point component id, 0..count-1 range
    std::map<int, int> sizes;         // component id -> point count
    std::vector<int> isolated_far;    // ids entirely outside B(0;R), if R given
};

/// Connectivity components under pairwise distance < 2M (grid hashing with
/// cell side 2M). If far_radius >= 0, isolated_far collects the components
/// whose points all have norm >= far_radius (-1 skips that pass).
ComponentPartition components_at(const model::PointCloud& cloud, double M,
                                 double far_radius = -1.0);

/// points with ||x|| >= R, order preserved
model::PointCloud restrict_far(const model::PointCloud& cloud, double R);

}  // namespace crackle::geom
