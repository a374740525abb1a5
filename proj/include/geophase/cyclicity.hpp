#pragma once

#include <optional>

namespace geophase {

struct Rational {
    long numerator = 0;
    long denominator = 1;
    double residual = 0.0;  // |x - numerator/denominator|
};

// Smallest-denominator fraction p/q (q <= max_denominator, p >= 1) with
// |x - p/q| < tol. Walks continued-fraction convergents and the intermediate
// fractions between them, which together contain every best approximation.
std::optional<Rational> rational_approximation(double x, double tol, long max_denominator);

}  // namespace geophase
