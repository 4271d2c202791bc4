#include "crackle/model.hpp"

#include <algorithm>
#include <cmath>

#include "crackle/error.hpp"
#include "crackle/quadrature.hpp"

namespace crackle::model {

double sphere_surface(int d) {
    return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

TailModel TailModel::pareto(double alpha, int dim) {
    TailModel m;
    m.kind = TailKind::ParetoRV;
    m.dim = dim;
    m.alpha = alpha;
    m.norm_const = normalize(TailKind::ParetoRV, alpha, dim);
    return m;
}

TailModel TailModel::von_mises_power(double tau, int dim) {
    TailModel m;
    m.kind = TailKind::VonMisesPower;
    m.dim = dim;
    m.tau = tau;
    m.norm_const = normalize(TailKind::VonMisesPower, tau, dim);
    return m;
}

double TailModel::profile(double rho) const {
    if (kind == TailKind::ParetoRV) return 1.0 / (1.0 + std::pow(rho, alpha));
    return std::exp(-std::pow(rho, tau) / tau);
}

double TailModel::radial_density(double rho) const { return norm_const * profile(rho); }

double TailModel::tail_envelope(double rho) const {
    return norm_const * std::pow(rho, -alpha);
}

double TailModel::aux_a(double z) const { return std::pow(z, 1.0 - tau); }

double TailModel::tail_mass(double r) const {
    if (r <= 0.0) return 1.0;
    const double s = sphere_surface(dim);
    auto f = [this](double rho) { return std::pow(rho, dim - 1) * profile(rho); };
    return s * norm_const * integrate_to_inf(f, r, 1e-12);
}

double normalize(TailKind kind, double param, int dim) {
    if (dim < 1) throw Error("normalize: dimension must be >= 1");
    if (kind == TailKind::ParetoRV) {
        if (!(param > dim)) throw NonIntegrable("ParetoRV requires alpha > dim");
    } else {
        if (!(param > 0.0 && param <= 1.0))
            throw Error("VonMisesPower requires 0 < tau <= 1");
    }
    auto g = [&](double rho) {
        double prof = (kind == TailKind::ParetoRV) ? 1.0 / (1.0 + std::pow(rho, param))
                                                   : std::exp(-std::pow(rho, param) / param);
        return std::pow(rho, dim - 1) * prof;
    };
    double radial = integrate_to_inf(g, 0.0, 1e-12);
    if (!(radial > 0.0) || !std::isfinite(radial))
        throw QuadratureFailure("normalize: radial integral did not converge");
    return 1.0 / (sphere_surface(dim) * radial);
}

double PointCloud::norm(std::size_t i) const {
    const double* x = point(i);
    double s = 0.0;
    for (int j = 0; j < dim; ++j) s += x[j] * x[j];
    return std::sqrt(s);
}

double ScalingPlan::scaling_residual() const {
    if (tail.kind == TailKind::ParetoRV) {
        return std::pow(n, p) * std::pow(M, d * (p - 1)) * std::pow(R, d) *
               std::pow(tail.tail_envelope(R), p);
    }
    return std::pow(n, p) * std::pow(M, d * (p - 1)) * tail.aux_a(R) * std::pow(R, d - 1) *
           std::pow(tail.radial_density(R), p);
}

double solve_R_heavy(const TailModel& tail, double n, double M, int p) {
    if (tail.kind != TailKind::ParetoRV) throw Error("solve_R_heavy: tail must be ParetoRV");
    if (!(n > 0.0) || !(M > 0.0)) throw Error("solve_R_heavy: n, M must be positive");
    const int d = tail.dim;
    const double alpha = tail.alpha;
    // log-linear in log R: p log(Cn) + d(p-1) log M + (d - alpha p) log R = 0
    auto lhs = [&](double logR) {
        return p * (std::log(n) + std::log(tail.norm_const)) + d * (p - 1) * std::log(M) +
               (d - alpha * p) * logR;
    };
    double lo = std::log(M) - 700.0, hi = std::log(M) + 700.0;
    if (lhs(lo) < 0.0 || lhs(hi) > 0.0) throw NoRoot("solve_R_heavy: no root");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (lhs(mid) > 0.0 ? lo : hi) = mid;
    }
    double R = std::exp(0.5 * (lo + hi));
    if (R < M * (1.0 - 1e-12)) throw NoRoot("solve_R_heavy: intensity too small for R >= M");
    return R;
}

double solve_R_exp(const TailModel& tail, double n, double M, int p) {
    if (tail.kind != TailKind::VonMisesPower)
        throw Error("solve_R_exp: tail must be VonMisesPower");
    if (!(n > 0.0) || !(M > 0.0)) throw Error("solve_R_exp: n, M must be positive");
    const int d = tail.dim;
    const double tau = tail.tau;
    auto lhs = [&](double R) {
        // log of n^p M^{d(p-1)} a(R) R^{d-1} f(R)^p
        return p * (std::log(n) + std::log(tail.norm_const)) + d * (p - 1) * std::log(M) +
               (d - tau) * std::log(R) - p * std::pow(R, tau) / tau;
    };
    // the map increases to R* = ((d - tau)/p)^{1/tau} then decreases; bisect on
    // the decreasing branch
    double rstar = (d > tau) ? std::pow((d - tau) / p, 1.0 / tau) : 1e-12;
    double lo = std::max(rstar, 1e-12);
    if (lhs(lo) < 0.0) throw NoRoot("solve_R_exp: no root");
    double hi = std::max(2.0 * lo, 2.0);
    while (lhs(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e12) throw NoRoot("solve_R_exp: no root");
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (lhs(mid) > 0.0 ? lo : hi) = mid;
    }
    double R = 0.5 * (lo + hi);
    if (R < M * (1.0 - 1e-12)) throw NoRoot("solve_R_exp: intensity too small for R >= M");
    return R;
}

ScalingPlan make_plan(const TailModel& tail, int k, int p, double n, double M, Regime regime,
                      double kappa) {
    if (p < k + 2) throw Error("make_plan: requires p >= k + 2");
    ScalingPlan plan;
    plan.tail = tail;
    plan.d = tail.dim;
    plan.k = k;
    plan.p = p;
    plan.n = n;
    plan.M = M;
    plan.regime = regime;
    plan.kappa = kappa;
    double Rc = (tail.kind == TailKind::ParetoRV) ? solve_R_heavy(tail, n, M, p)
                                                  : solve_R_exp(tail, n, M, p);
    plan.R = (regime == Regime::Critical) ? Rc : kappa * Rc;
    if (!(plan.M < plan.R)) throw Error("make_plan: requires M < R");
    return plan;
}

RadialSampler::RadialSampler(const TailModel& tail, double rmin) : rmin_(rmin), dim_(tail.dim) {
    const int n_knots = 1024;
    const double s = sphere_surface(tail.dim);
    // choose rmax so the mass beyond it is negligible relative to the layer
    double lo = (rmin > 0.0) ? rmin : 1e-8;
    double total = (rmin > 0.0) ? tail.tail_mass(rmin) : 1.0;
    mass_ = total;
    double hi = std::max(lo * 2.0, 1.0);
    while (tail.tail_mass(hi) > 1e-13 * total) {
        hi *= 2.0;
        if (hi > 1e300) break;
    }
    rmax_ = hi;
    knots_.resize(n_knots);
    cdf_.resize(n_knots);
    double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n_knots; ++i)
        knots_[i] = std::exp(llo + (lhi - llo) * i / (n_knots - 1));
    if (rmin <= 0.0) knots_[0] = 0.0;
    // cumulative radial mass via per-interval quadrature
    auto dens = [&](double rho) {
        return s * tail.norm_const * std::pow(rho, tail.dim - 1) * tail.profile(rho);
    };
    cdf_[0] = 0.0;
    for (int i = 1; i < n_knots; ++i)
        cdf_[i] = cdf_[i - 1] + integrate(dens, knots_[i - 1], knots_[i], 1e-11, 1e-16 * total);
    double scale = cdf_.back();
    for (auto& c : cdf_) c /= scale;
    // the CDF derivative is the density itself; clamp to the monotone cone
    slope_.assign(n_knots, 0.0);
    std::vector<double> delta(n_knots - 1);
    for (int i = 0; i + 1 < n_knots; ++i)
        delta[i] = (cdf_[i + 1] - cdf_[i]) / (knots_[i + 1] - knots_[i]);
    for (int i = 0; i < n_knots; ++i) {
        double exact = dens(knots_[i]) / scale;
        double cap = 3.0 * std::max(i > 0 ? delta[i - 1] : 0.0,
                                    i + 1 < n_knots ? delta[i] : 0.0);
        slope_[i] = std::min(exact, cap);
    }
}

double RadialSampler::eval_cdf_raw(double rho) const {
    if (rho <= knots_.front()) return 0.0;
    if (rho >= knots_.back()) return 1.0;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), rho);
    std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    double h = knots_[i + 1] - knots_[i];
    double t = (rho - knots_[i]) / h;
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * cdf_[i] + h10 * h * slope_[i] + h01 * cdf_[i + 1] + h11 * h * slope_[i + 1];
}

double RadialSampler::cdf(double rho) const { return eval_cdf_raw(rho); }

double RadialSampler::inverse_cdf(double u) const {
    if (u <= 0.0) return knots_.front();
    if (u >= 1.0) return knots_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    if (i == 0) return knots_.front();
    if (i >= cdf_.size()) return knots_.back();
    double lo = knots_[i - 1], hi = knots_[i];
    // Newton with bisection safeguard on the cubic segment
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        double fx = eval_cdf_raw(x) - u;
        (fx > 0.0 ? hi : lo) = x;
        if (hi - lo < std::max(1e-13, 4e-16 * hi)) break;
        double h = knots_[i] - knots_[i - 1];
        double t = (x - knots_[i - 1]) / h;
        double dh00 = 6 * t * t - 6 * t, dh10 = 3 * t * t - 4 * t + 1;
        double dh01 = -6 * t * t + 6 * t, dh11 = 3 * t * t - 2 * t;
        double deriv = (dh00 * cdf_[i - 1] + dh01 * cdf_[i]) / h + dh10 * slope_[i - 1] +
                       dh11 * slope_[i];
        double xn = (deriv > 1e-300) ? x - fx / deriv : 0.5 * (lo + hi);
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    return 0.5 * (lo + hi);
}

double RadialSampler::sample_radius(Rng& rng) const { return inverse_cdf(rng.uniform()); }

namespace {

void unit_vector(Rng& rng, int d, double* out) {
    if (d == 1) {
        out[0] = rng.uniform() < 0.5 ? -1.0 : 1.0;
        return;
    }
    if (d == 2) {
        double a = 6.283185307179586476925286766559 * rng.uniform();
        out[0] = std::cos(a);
        out[1] = std::sin(a);
        return;
    }
    double s = 0.0;
    do {
        s = 0.0;
        for (int j = 0; j < d; ++j) {
            out[j] = rng.normal();
            s += out[j] * out[j];
        }
    } while (s <= 1e-300);
    s = 1.0 / std::sqrt(s);
    for (int j = 0; j < d; ++j) out[j] *= s;
}

}  // namespace

PointCloud sample_cloud(const TailModel& tail, const RadialSampler& sampler, double n,
                        std::uint64_t seed) {
    if (!(n > 0.0)) throw Error("sample_cloud: n must be positive");
    Rng rng(seed);
    PointCloud cloud;
    cloud.dim = tail.dim;
    cloud.seed = seed;
    cloud.intensity_n = n;
    long long count = rng.poisson(n * sampler.restricted_mass());
    cloud.coords.resize(static_cast<std::size_t>(count) * tail.dim);
    std::vector<double> dir(tail.dim);
    for (long long i = 0; i < count; ++i) {
        double rho = sampler.sample_radius(rng);
        unit_vector(rng, tail.dim, dir.data());
        for (int j = 0; j < tail.dim; ++j)
            cloud.coords[static_cast<std::size_t>(i) * tail.dim + j] = rho * dir[j];
    }
    return cloud;
}

PointCloud sample_cloud(const TailModel& tail, double n, std::uint64_t seed, double rmin) {
    RadialSampler sampler(tail, rmin);
    PointCloud cloud = sample_cloud(tail, sampler, n, seed);
    cloud.restricted_to = rmin;
    return cloud;
}

}  // namespace crackle::model
