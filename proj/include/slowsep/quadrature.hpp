#pragma once

#include <cmath>
#include <functional>

namespace slowsep {

// Adaptive Simpson quadrature with absolute tolerance.
double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-12);

}  // namespace slowsep
