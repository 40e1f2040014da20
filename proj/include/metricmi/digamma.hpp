#pragma once

namespace metricmi {

/// Digamma function psi(x) = d/dx ln Gamma(x) for x > 0.
///
/// Shifts the argument up to x >= 6 with psi(x) = psi(x + 1) - 1/x, then
/// applies the asymptotic expansion
///   psi(x) ~ ln x - 1/(2x) - sum_k B_2k / (2k x^2k)
/// through the x^-14 term. Absolute error is below 1e-12 for x >= 1.
/// Throws std::domain_error for x <= 0 or NaN.
double digamma(double x);

/// Leading two terms of the expansion, ln x - 1/(2x).
double digamma_large_x(double x);

} // namespace metricmi
