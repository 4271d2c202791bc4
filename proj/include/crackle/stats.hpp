#pragma once

#include <cstddef>
#include <vector>

namespace crackle::stats {

/// regularized upper incomplete gamma Q(a, x)
double gamma_q(double a, double x);

/// chi-square survival function P(X > x) with df degrees of freedom
double chi2_sf(double x, double df);

/// Poisson pmf, stable in the log domain
double poisson_pmf(long long k, double lambda);
double poisson_sf(long long k, double lambda);  // P(X > k)

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct Welford {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }
    void merge(const Welford& o) {
        if (o.count == 0) return;
        if (count == 0) { *this = o; return; }
        double total = static_cast<double>(count + o.count);
        double d = o.mean - mean;
        m2 += o.m2 + d * d * static_cast<double>(count) * static_cast<double>(o.count) / total;
        mean = (mean * count + o.mean * o.count) / total;
        count += o.count;
    }
    double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
    double stderr_of_mean() const;
};

}  // namespace crackle::stats
