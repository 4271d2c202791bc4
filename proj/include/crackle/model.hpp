#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "crackle/rng.hpp"

namespace crackle::model {

enum class TailKind { ParetoRV, VonMisesPower };

/// surface measure of the unit sphere S^{d-1} in R^d
double sphere_surface(int d);

/// Spherically symmetric density f(x) = C * g(||x||) with either a Pareto
/// radial profile g(r) = 1/(1+r^alpha) or a von-Mises profile
/// g(r) = exp(-r^tau/tau) (slowly varying part held constant).
struct TailModel {
    TailKind kind;
    int dim;
    double alpha = 0.0;  // ParetoRV only, requires alpha > dim
    double tau = 0.0;    // VonMisesPower only, requires 0 < tau <= 1
    double norm_const = 0.0;

    static TailModel pareto(double alpha, int dim);
    static TailModel von_mises_power(double tau, int dim);

    /// unnormalized radial profile g(rho)
    double profile(double rho) const;
    /// radial density value f(rho) = C * g(rho)
    double radial_density(double rho) const;
    /// regularly varying envelope C * rho^{-alpha}; used by the heavy-tail
    /// scaling equation (exact for the solved rate law)
    double tail_envelope(double rho) const;
    /// a(z) = 1/psi'(z) = z^{1-tau} for the von-Mises family
    double aux_a(double z) const;
    /// P(||X|| >= r), by quadrature
    double tail_mass(double r) const;
};

/// normalizing constant: s_{d-1} * C * int_0^inf rho^{d-1} g(rho) drho = 1
double normalize(TailKind kind, double param, int dim);

struct PointCloud {
    int dim = 2;
    std::vector<double> coords;  // row-major, size() == dim * count
    std::uint64_t seed = 0;
    double intensity_n = 0.0;
    /// points below this radius are not materialized (0 = full cloud)
    double restricted_to = 0.0;

    std::size_t size() const { return dim ? coords.size() / dim : 0; }
    const double* point(std::size_t i) const { return coords.data() + i * dim; }
    double norm(std::size_t i) const;
};

enum class Regime { Critical, Subcritical };

struct ScalingPlan {
    TailModel tail;
    int d = 2;
    int k = 1;
    int p = 3;  // requires p >= k + 2
    double n = 0.0;
    double M = 1.0;
    double R = 0.0;
    Regime regime = Regime::Critical;
    double kappa = 1.5;  // subcritical inflation factor applied to the critical R

    /// left side of the scaling equation at this plan's R (1 at criticality)
    double scaling_residual() const;
};

/// Root of n^p M^{d(p-1)} R^d fenv(R)^p = 1 with the regularly varying
/// envelope fenv(R) = C R^{-alpha}; bisection on log R. Throws NoRoot when
/// the root does not satisfy R > M.
double solve_R_heavy(const TailModel& tail, double n, double M, int p);

/// Root of n^p M^{d(p-1)} a(R) R^{d-1} f(R)^p = 1 for the von-Mises family.
double solve_R_exp(const TailModel& tail, double n, double M, int p);

ScalingPlan make_plan(const TailModel& tail, int k, int p, double n, double M,
                      Regime regime = Regime::Critical, double kappa = 1.5);

/// Radial inverse-CDF sampler. The CDF is tabulated on 1024 log-spaced knots
/// (monotone cubic interpolation) and inverted by safeguarded bisection to
/// absolute error < 1e-12. rmin > 0 restricts the law to {rho >= rmin}.
class RadialSampler {
  public:
    RadialSampler(const TailModel& tail, double rmin = 0.0);

    double restricted_mass() const { return mass_; }
    double sample_radius(Rng& rng) const;
    /// CDF of the (restricted) radial law, as interpolated
    double cdf(double rho) const;
    /// inverse CDF, absolute error < 1e-12
    double inverse_cdf(double u) const;

  private:
    double eval_cdf_raw(double rho) const;
    std::vector<double> knots_, cdf_, slope_;
    double rmin_ = 0.0, rmax_ = 0.0, mass_ = 1.0;
    int dim_;
};

/// Poisson(n) many iid draws from the tail model (rmin restricts to the tail
/// layer; the draw count is then Poisson(n * mass(rmin))).
PointCloud sample_cloud(const TailModel& tail, double n, std::uint64_t seed, double rmin = 0.0);

/// same cloud, reusing a prepared sampler (hot path for trial batches)
PointCloud sample_cloud(const TailModel& tail, const RadialSampler& sampler, double n,
                        std::uint64_t seed);

}  // namespace crackle::model
