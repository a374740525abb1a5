#pragma once

#include <array>
#include <vector>

#include "geophase/types.hpp"

namespace geophase {

// Angular momentum quantum number stored as 2s so that half-integers are exact.
class SpinQuantum {
public:
    explicit SpinQuantum(int two_s);

    // Accepts 0, 0.5, 1, 1.5, ...; anything else throws.
    static SpinQuantum from_value(double s);

    int two_s() const { return two_s_; }
    int dim() const { return two_s_ + 1; }
    double value() const { return 0.5 * two_s_; }

    // Projection m for basis index k (descending order m = s, s-1, ..., -s).
    double m_at(int k) const { return value() - k; }
    // Basis index of projection m; throws if m is not a valid projection.
    int index_of(double m) const;

    friend bool operator==(SpinQuantum, SpinQuantum) = default;

private:
    int two_s_;
};

// Spin matrices in the s_z eigenbasis, ordered m = s ... -s. Units of hbar.
struct SpinOps {
    SpinQuantum spin;
    ComplexMatrix sx, sy, sz;

    const ComplexMatrix& operator[](int i) const;
    // n . s for a real 3-vector n.
    ComplexMatrix dot(const Vec3& n) const;
    ComplexMatrix identity() const { return ComplexMatrix::Identity(spin.dim(), spin.dim()); }
};

SpinOps spin_operators(SpinQuantum s);

struct RotationMatrix {
    ComplexMatrix entries;
    UnitVector3 axis;
    double angle = 0.0;
};

// exp(i * phi * s.n), built from the spectral decomposition of s.n with the
// eigenvalues pinned to their exact values m = -s ... s.
RotationMatrix exp_spin(const SpinOps& ops, const UnitVector3& n, double phi);

// Eigenvectors of s.n for n = (sin t cos p, sin t sin p, cos t). Column k holds
// the eigenvector with eigenvalue m = s - k, equal to exp(-i p s_z) exp(-i t s_y) chi0_m.
struct SpinEigenbasis {
    UnitVector3 direction;
    ComplexMatrix columns;

    ComplexVector state(double m, SpinQuantum spin) const { return columns.col(spin.index_of(m)); }
};

SpinEigenbasis spin_direction_eigenbasis(const SpinOps& ops, double theta, double phi);
SpinEigenbasis spin_direction_eigenbasis(const SpinOps& ops, const UnitVector3& n);

// Closed form of exp(i phi s.n) s exp(-i phi s.n):
//   [s - (s.n) n] cos(phi) + (n x s) sin(phi) + (s.n) n.
std::array<ComplexMatrix, 3> conjugate_spin_vector(const SpinOps& ops, const UnitVector3& n,
                                                   double phi);

// <psi| s |psi> for a normalized state.
Vec3 spin_expectation(const SpinOps& ops, const ComplexVector& psi);

// exp(-i H t) for Hermitian H via its spectral decomposition.
ComplexMatrix hermitian_exp(const ComplexMatrix& h, double t);

}  // namespace geophase
