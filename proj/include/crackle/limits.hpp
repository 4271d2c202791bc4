#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crackle/model.hpp"

namespace crackle::limits {

/// cached region constant for one (k, m)
struct RegionConstant {
    int k = 0, m = 0;
    double pi = 0.0;  // sup of death/birth over m-point k-th persistence pairs
    double b = 0.0;   // sup birth among configurations connected at unit radius
    std::string method;  // "analytic" or "optimizer"
    double tol = 0.0;
};

/// Constants table; ships with analytic (1,3) plus optimizer entries, and can
/// be reloaded from a versioned text file (see constants_dir()).
class ConstantsTable {
  public:
    static ConstantsTable& instance();

    std::optional<RegionConstant> lookup(int k, int m) const;
    void upsert(const RegionConstant& c);
    std::string version() const { return version_; }

    void load_file(const std::string& path);
    void save_file(const std::string& path) const;

  private:
    ConstantsTable();
    std::vector<RegionConstant> entries_;
    std::string version_ = "1";
};

struct OptimizerBudget {
    int restarts = 200;
    int max_iters = 400;
    std::uint64_t seed = 2024;
};

/// numeric sup of death/birth over PH_k pairs of m-point configurations
double pi_km(int k, int m, const OptimizerBudget& budget = {});
/// numeric sup of birth over m-point configurations connected at unit radius
double b_km(int k, int m, const OptimizerBudget& budget = {});
/// the same sups recomputed by the optimizer, bypassing the cache
double pi_km_optimized(int k, int m, const OptimizerBudget& budget = {});
double b_km_optimized(int k, int m, const OptimizerBudget& budget = {});

// ---------------------------------------------------------------------------

class Region;
using RegionPtr = std::shared_ptr<const Region>;

/// Geometric subsets of Delta = {0 <= x <= y}: the half-plane intersections
/// used by the harness (rectangles, Delta_{k,m}, B_{k,m}, I_t, J_t) plus
/// intersection and inward erosion.
class Region {
  public:
    enum class Kind { Delta, DeltaKM, BKM, Rect, IT, JT, MinLifespan, Intersection };

    static RegionPtr delta();
    static RegionPtr delta_km(int k, int m);
    static RegionPtr b_km_region(int k, int m);
    static RegionPtr rect(double x0, double x1, double y0, double y1);
    static RegionPtr i_t(double t);
    static RegionPtr j_t(double t, int k, int p);
    /// half-plane {y - x >= c}
    static RegionPtr min_lifespan(double c);
    static RegionPtr intersect(std::vector<RegionPtr> parts);

    /// membership with tolerance 1e-9 on boundary comparisons
    bool contains(double x, double y, double tol = 1e-9) const;
    /// inward erosion by eps (supported for half-plane representable kinds)
    RegionPtr shrink(double eps) const;
    /// conservative bounding box [x0,x1]x[y0,y1]
    void bounding_box(double& x0, double& x1, double& y0, double& y1) const;
    /// centers of the eps-grid cells lying inside the region
    std::vector<std::pair<double, double>> grid_centers(double eps) const;

    std::string describe() const;
    Kind kind() const { return kind_; }

    struct PlaneSet;

  private:
    friend class RegionBuilder;
    Kind kind_ = Kind::Delta;
    double p0_ = 0, p1_ = 0, p2_ = 0, p3_ = 0;  // kind-specific parameters
    int k_ = 0, m_ = 0;
    double erode_ = 0.0;
    std::vector<RegionPtr> parts_;
    std::shared_ptr<PlaneSet> planes_;
};

// ---------------------------------------------------------------------------

struct LimitEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    std::size_t samples = 0;
    double acceptance_rate = 0.0;
    double coefficient = 0.0;  // analytic prefactor
    double raw_sum = 0.0;      // per-sample weighted pair-count total
};

/// Monte Carlo estimate of the heavy-tail limiting mean measure on each
/// region (shared sample stream across regions).
std::vector<LimitEstimate> mean_measure_heavy(const std::vector<RegionPtr>& regions, int k,
                                              int p, double alpha, int d, std::size_t samples,
                                              std::uint64_t seed);
LimitEstimate mean_measure_heavy(const RegionPtr& region, int k, int p, double alpha, int d,
                                 std::size_t samples, std::uint64_t seed);

/// exponential-tail analogue; c = infinity is encoded as c_inv = 0
std::vector<LimitEstimate> mean_measure_exp(const std::vector<RegionPtr>& regions, int k, int p,
                                            double c, int d, std::size_t samples,
                                            std::uint64_t seed);
LimitEstimate mean_measure_exp(const RegionPtr& region, int k, int p, double c, int d,
                               std::size_t samples, std::uint64_t seed);

/// MC mass of a union of balls under the tail density (diagnostic Q_r)
LimitEstimate ball_union_mass(const std::vector<double>& centers, int dim, double r,
                              const model::TailModel& tail, std::size_t samples,
                              std::uint64_t seed);

}  // namespace crackle::limits
