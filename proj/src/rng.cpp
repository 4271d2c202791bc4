#include "crackle/rng.hpp"

#include <cmath>

namespace crackle {

namespace {

// log(k!) for the PTRS acceptance test
double log_factorial(double k) { return std::lgamma(k + 1.0); }

}  // namespace

long long Rng::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) {
        // Knuth product method
        double limit = std::exp(-mean), prod = uniform();
        long long k = 0;
        while (prod > limit) {
            prod *= uniform();
            ++k;
        }
        return k;
    }
    // Hormann's PTRS transformed rejection; exact for mean >= 10
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double u = uniform() - 0.5;
        double v = uniform();
        double us = 0.5 - std::fabs(u);
        double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        double rhs = -mean + kf * std::log(mean) - log_factorial(kf);
        if (lhs <= rhs) return static_cast<long long>(kf);
    }
}

}  // namespace crackle
