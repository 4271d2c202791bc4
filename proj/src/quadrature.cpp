#include "crackle/quadrature.hpp"

#include <cmath>

#include "crackle/error.hpp"

namespace crackle {

namespace {

struct Quad {
    const std::function<double(double)>& f;
    double abs_tol;
    int max_depth = 60;

    double simpson(double a, double fa, double b, double fb, double fm) const {
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    }

    double recurse(double a, double fa, double b, double fb, double m, double fm, double whole,
                   double eps, int depth) const {
        double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        double flm = f(lm), frm = f(rm);
        double left = simpson(a, fa, m, fm, flm);
        double right = simpson(m, fm, b, fb, frm);
        double delta = left + right - whole;
        // below the floating-point noise floor nothing further can be resolved
        double noise = 4e-16 * (std::fabs(left) + std::fabs(right));
        if (std::fabs(delta) <= 15.0 * eps || std::fabs(delta) <= abs_tol ||
            std::fabs(delta) <= noise)
            return left + right + delta / 15.0;
        if (depth <= 0) throw QuadratureFailure("adaptive quadrature: depth exhausted");
        return recurse(a, fa, m, fm, lm, flm, left, 0.5 * eps, depth - 1) +
               recurse(m, fm, b, fb, rm, frm, right, 0.5 * eps, depth - 1);
    }
};

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 double abs_tol) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fb = f(b), fm = f(m);
    Quad q{f, abs_tol};
    double whole = q.simpson(a, fa, b, fb, fm);
    double eps = std::max(std::fabs(whole) * rel_tol, abs_tol);
    return q.recurse(a, fa, b, fb, m, fm, whole, eps, q.max_depth);
}

double integrate_to_inf(const std::function<double(double)>& f, double a, double rel_tol) {
    // geometric blocks [c, 2c]; each block is smooth, and the sum terminates
    // once the running contribution is negligible
    double lo = a, hi = std::max(2.0 * a, a + 1.0);
    double total = 0.0;
    for (int block = 0; block < 4000; ++block) {
        double part = integrate(f, lo, hi, rel_tol, std::fabs(total) * rel_tol * 0.01 + 1e-300);
        total += part;
        if (block > 2 && std::fabs(part) <= std::fabs(total) * rel_tol * 0.5) return total;
        if (total == 0.0 && block > 64) return total;
        lo = hi;
        hi *= 2.0;
        if (hi > 1e306) return total;
    }
    throw QuadratureFailure("integrate_to_inf: tail did not decay");
}

}  // namespace crackle
