#pragma once

#include <cmath>
#include <random>

#include "geophase/spin_algebra.hpp"

namespace geophase::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_unit(Rng& rng) {
    std::normal_distribution<double> g;
    Vec3 v(g(rng), g(rng), g(rng));
    return v.normalized();
}

inline ComplexVector random_state(Rng& rng, int dim) {
    std::normal_distribution<double> g;
    ComplexVector psi(dim);
    for (int k = 0; k < dim; ++k) psi(k) = Complex(g(rng), g(rng));
    return psi.normalized();
}

// Term-by-term Taylor series of exp(a), used only as an oracle for small matrices.
inline ComplexMatrix series_exp(const ComplexMatrix& a) {
    ComplexMatrix sum = ComplexMatrix::Identity(a.rows(), a.cols());
    ComplexMatrix term = sum;
    for (int k = 1; k < 200; ++k) {
        term = term * a / static_cast<double>(k);
        sum += term;
        if (term.norm() < 1e-18 * sum.norm()) break;
    }
    return sum;
}

inline double factorial(int n) { return std::tgamma(n + 1.0); }

// Wigner small-d element d^j_{m' m}(beta) from the explicit sum formula.
inline double wigner_small_d(double j, double mp, double m, double beta) {
    const int jpm = static_cast<int>(std::lround(j + m));
    const int jmm = static_cast<int>(std::lround(j - m));
    const int jpmp = static_cast<int>(std::lround(j + mp));
    const int jmmp = static_cast<int>(std::lround(j - mp));
    const int dm = static_cast<int>(std::lround(mp - m));
    const double pre = std::sqrt(factorial(jpm) * factorial(jmm) * factorial(jpmp) * factorial(jmmp));
    const double c = std::cos(beta / 2.0);
    const double s = std::sin(beta / 2.0);
    double sum = 0.0;
    for (int k = std::max(0, -dm); k <= std::min(jpm, jmmp); ++k) {
        const double den = factorial(jpm - k) * factorial(k) * factorial(jmmp - k) * factorial(k + dm);
        const double sign = ((k + dm) % 2 == 0) ? 1.0 : -1.0;
        sum += sign * std::pow(c, jpm + jmm - 2 * k - dm) * std::pow(s, 2 * k + dm) / den;
    }
    return pre * sum;
}

}  // namespace geophase::testing

#include "geophase/neutral_rotating.hpp"

namespace geophase::testing {

// Random rotating-field parameters with omega = 1 and omega_S/omega = K_S/K
// for small K, K_S, so that every solution is cyclic.
inline RotatingFieldParams cyclic_rotating_params(Rng& rng, SpinQuantum spin) {
    for (;;) {
        RotatingFieldParams p;
        p.spin = spin;
        p.omega = 1.0;
        p.mu_sign = uniform(rng, 0.0, 1.0) < 0.5 ? 1 : -1;
        p.theta_B = uniform(rng, 0.2, pi - 0.2);
        const int k = 1 + static_cast<int>(uniform(rng, 0.0, 3.0));
        const int ks = 1 + static_cast<int>(uniform(rng, 0.0, 6.0));
        const double r = static_cast<double>(ks) / k;
        const double c = std::cos(p.theta_B);
        const double disc = c * c - 1.0 + r * r;
        if (disc < 0.0) continue;
        p.omega_B = -p.mu_sign * c + std::sqrt(disc);
        if (p.omega_B > 0.2 && p.omega_B < 4.0) return p;
    }
}

}  // namespace geophase::testing
