#pragma once

#include <cstdint>
#include <vector>

#include "crackle/geom.hpp"
#include "crackle/model.hpp"

namespace crackle::ph {

struct PersistencePair {
    double birth = 0.0;
    double death = 0.0;
    int dim = 1;
    int component_size = 0;  // 0 when not annotated
    int component_id = -1;

    double lifespan() const { return death - birth; }
};

enum class DiagramVariant {
    Isolated,       // components of the full complex, all vertices beyond R
    ConnectedOnly,  // components of the complex restricted to the far layer
    SubsetCensus    // every connected m-subset of the far layer (test oracle)
};

struct DiagramDiagnostics {
    std::size_t cloud_size = 0;
    std::size_t far_count = 0;
    std::size_t components_far = 0;
    std::size_t skipped_components = 0;  // over m_cap or budget
    std::size_t census_subsets = 0;
};

struct CrackleDiagram {
    int k = 1;
    double M = 1.0;
    double R = 0.0;
    DiagramVariant variant = DiagramVariant::Isolated;
    std::vector<PersistencePair> pairs;  // raw radii
    DiagramDiagnostics diagnostics;

    /// pair scaled by 1/M (applied exactly once)
    std::pair<double, double> scaled(std::size_t i) const {
        return {pairs[i].birth / M, pairs[i].death / M};
    }
};

/// column reduction of the mod-2 boundary matrix in filtration order; returns
/// the dim-k pairs with birth < death
std::vector<PersistencePair> reduce(const geom::Filtration& filt, int k);

struct DiagramOptions {
    int m_cap = 16;
    std::size_t simplex_budget = 2'000'000;
    std::size_t census_budget = 200'000;  // connected-subset enumeration cap per component
};

CrackleDiagram crackle_diagram(const model::PointCloud& cloud, const model::ScalingPlan& plan,
                               const DiagramOptions& opts = {});
CrackleDiagram crackle_diagram_tilde(const model::PointCloud& cloud,
                                     const model::ScalingPlan& plan,
                                     const DiagramOptions& opts = {});

/// Census of the k-th persistence pairs over every connected m-subset of the
/// far layer (not only components); the pairs of one subset are annotated
/// with that subset's size m.
CrackleDiagram subset_census_diagram(const model::PointCloud& cloud,
                                     const model::ScalingPlan& plan, int m,
                                     const DiagramOptions& opts = {});

/// Independent brute-force verifier: all subsets as simplices, quadratic
/// reduction, own enclosing-ball code. Throws TooLarge past 8 points.
std::vector<PersistencePair> naive_diagram_oracle(const double* coords, std::size_t count,
                                                  int dim, int k);
std::vector<PersistencePair> naive_diagram_oracle(const std::vector<double>& coords, int dim,
                                                  int k);

/// max over scaled pairs with birth <= t of (death - birth); 0 on empty
double lifespan_max(const CrackleDiagram& diagram, double t);

}  // namespace crackle::ph
