#include "geophase/cyclicity.hpp"

#include <cmath>
#include <stdexcept>

namespace geophase {

std::optional<Rational> rational_approximation(double x, double tol, long max_denominator) {
    if (!(tol > 0.0)) throw std::invalid_argument("rational_approximation: tol must be positive");
    if (max_denominator < 1) throw std::invalid_argument("rational_approximation: k_max must be >= 1");
    if (!std::isfinite(x) || x <= 0.0) return std::nullopt;

    auto accept = [&](long p, long q) -> std::optional<Rational> {
        if (p < 1 || q < 1 || q > max_denominator) return std::nullopt;
        const double r = std::abs(x - static_cast<double>(p) / static_cast<double>(q));
        if (r < tol) return Rational{p, q, r};
        return std::nullopt;
    };

    // h/k are the convergents; (h_prev, k_prev) starts at 1/0.
    long h_prev = 1, k_prev = 0;
    long h = static_cast<long>(std::floor(x)), k = 1;
    double rest = x - std::floor(x);
    if (auto r = accept(h, k)) return r;

    for (int iter = 0; iter < 64; ++iter) {
        if (rest < 1e-15) break;
        const double inv = 1.0 / rest;
        const double a_real = std::floor(inv);
        rest = inv - a_real;
        if (a_real > static_cast<double>(max_denominator) + 1.0) {
            // Only intermediate fractions with denominators <= max_denominator remain.
            for (long j = 1; k_prev + j * k <= max_denominator; ++j) {
                if (auto r = accept(h_prev + j * h, k_prev + j * k)) return r;
            }
            break;
        }
        const long a = static_cast<long>(a_real);
        // Intermediate fractions (h_prev + j h)/(k_prev + j k), j < a, in order of
        // increasing denominator, then the next convergent at j = a.
        for (long j = 1; j <= a; ++j) {
            const long q = k_prev + j * k;
            if (q > max_denominator) return std::nullopt;
            if (auto r = accept(h_prev + j * h, q)) return r;
        }
        const long h_next = h_prev + a * h;
        const long k_next = k_prev + a * k;
        h_prev = h;
        k_prev = k;
        h = h_next;
        k = k_next;
    }
    return std::nullopt;
}

}  // namespace geophase
