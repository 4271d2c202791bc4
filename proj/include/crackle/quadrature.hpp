#pragma once

#include <functional>

namespace crackle {

/// Adaptive Simpson on [a,b]; throws QuadratureFailure if the requested
/// tolerance cannot be certified.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, double abs_tol = 1e-300);

/// Integral over [a, infinity); maps the tail through u = 1/x.
double integrate_to_inf(const std::function<double(double)>& f, double a, double rel_tol);

}  // namespace crackle
