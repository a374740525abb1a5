#include "geophase/spin_algebra.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace geophase {

SpinQuantum::SpinQuantum(int two_s) : two_s_(two_s) {
    if (two_s < 0) throw std::invalid_argument("SpinQuantum: 2s must be non-negative");
}

SpinQuantum SpinQuantum::from_value(double s) {
    const double doubled = 2.0 * s;
    const double rounded = std::round(doubled);
    if (!std::isfinite(s) || s < 0.0 || std::abs(doubled - rounded) > 1e-9) {
        throw std::invalid_argument("SpinQuantum: s must be a non-negative multiple of 1/2");
    }
    return SpinQuantum(static_cast<int>(rounded));
}

int SpinQuantum::index_of(double m) const {
    const double k = value() - m;
    const double rounded = std::round(k);
    if (std::abs(k - rounded) > 1e-9 || rounded < 0 || rounded > two_s_) {
        throw std::invalid_argument("SpinQuantum: projection outside s, s-1, ..., -s");
    }
    return static_cast<int>(rounded);
}

const ComplexMatrix& SpinOps::operator[](int i) const {
    switch (i) {
        case 0: return sx;
        case 1: return sy;
        case 2: return sz;
        default: throw std::out_of_range("SpinOps: component index must be 0, 1 or 2");
    }
}

ComplexMatrix SpinOps::dot(const Vec3& n) const { return n.x() * sx + n.y() * sy + n.z() * sz; }

SpinOps spin_operators(SpinQuantum s) {
    const int dim = s.dim();
    const double j = s.value();
    ComplexMatrix raise = ComplexMatrix::Zero(dim, dim);
    ComplexMatrix sz = ComplexMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) {
        const double m = s.m_at(k);
        sz(k, k) = m;
        // s+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>, and |m+1> sits at index k-1.
        if (k > 0) raise(k - 1, k) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
    }
    const ComplexMatrix lower = raise.adjoint();
    SpinOps ops{s, 0.5 * (raise + lower), (raise - lower) / (2.0 * imag_unit), sz};
    return ops;
}

namespace {

// Eigenvectors of s.n sorted by ascending eigenvalue; eigenvalues are exactly
// -s, -s+1, ..., s so only the vectors are taken from the solver.
ComplexMatrix projection_eigenvectors(const SpinOps& ops, const Vec3& n) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(ops.dot(n));
    return solver.eigenvectors();
}

}  // namespace

RotationMatrix exp_spin(const SpinOps& ops, const UnitVector3& n, double phi) {
    const int dim = ops.spin.dim();
    const ComplexMatrix vecs = projection_eigenvectors(ops, n.vec());
    ComplexVector phases(dim);
    for (int j = 0; j < dim; ++j) {
        const double m = -ops.spin.value() + j;
        phases(j) = std::exp(imag_unit * (phi * m));
    }
    RotationMatrix r;
    r.entries = vecs * phases.asDiagonal() * vecs.adjoint();
    r.axis = n;
    r.angle = phi;
    return r;
}

SpinEigenbasis spin_direction_eigenbasis(const SpinOps& ops, double theta, double phi) {
    const int dim = ops.spin.dim();
    // exp(-i phi s_z) is diagonal in this basis.
    ComplexVector zphase(dim);
    for (int k = 0; k < dim; ++k) zphase(k) = std::exp(-imag_unit * (phi * ops.spin.m_at(k)));
    const ComplexMatrix ry = exp_spin(ops, unit_y, -theta).entries;
    return SpinEigenbasis{UnitVector3::from_angles(theta, phi), zphase.asDiagonal() * ry};
}

SpinEigenbasis spin_direction_eigenbasis(const SpinOps& ops, const UnitVector3& n) {
    return spin_direction_eigenbasis(ops, n.theta(), n.phi());
}

std::array<ComplexMatrix, 3> conjugate_spin_vector(const SpinOps& ops, const UnitVector3& n,
                                                   double phi) {
    const Vec3& a = n.vec();
    const ComplexMatrix s_par = ops.dot(a);
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    // (n x s)_i = eps_ijk n_j s_k
    const std::array<ComplexMatrix, 3> cross{
        a.y() * ops.sz - a.z() * ops.sy,
        a.z() * ops.sx - a.x() * ops.sz,
        a.x() * ops.sy - a.y() * ops.sx,
    };
    std::array<ComplexMatrix, 3> out;
    for (int i = 0; i < 3; ++i) {
        const ComplexMatrix along = a(i) * s_par;
        out[i] = (ops[i] - along) * c + cross[i] * s + along;
    }
    return out;
}

Vec3 spin_expectation(const SpinOps& ops, const ComplexVector& psi) {
    return Vec3(psi.dot(ops.sx * psi).real(), psi.dot(ops.sy * psi).real(),
                psi.dot(ops.sz * psi).real());
}

ComplexMatrix hermitian_exp(const ComplexMatrix& h, double t) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
    const Eigen::VectorXd& w = solver.eigenvalues();
    ComplexVector phases(w.size());
    for (Eigen::Index j = 0; j < w.size(); ++j) phases(j) = std::exp(-imag_unit * (w(j) * t));
    return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

}  // namespace geophase
