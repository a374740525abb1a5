#include "geophase/neutral_rotating.hpp"

#include <algorithm>
#include <cmath>

#include "geophase/cyclicity.hpp"

namespace geophase {

void RotatingFieldParams::validate() const {
    if (!(omega_B > 0.0) || !std::isfinite(omega_B)) {
        throw std::invalid_argument("RotatingFieldParams: omega_B must be positive");
    }
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw std::invalid_argument("RotatingFieldParams: omega must be positive");
    }
    if (!(theta_B >= 0.0 && theta_B <= pi)) {
        throw std::invalid_argument("RotatingFieldParams: theta_B must lie in [0, pi]");
    }
    if (mu_sign != 1 && mu_sign != -1) {
        throw std::invalid_argument("RotatingFieldParams: mu_sign must be +1 or -1");
    }
}

Vec3 RotatingFieldParams::field_direction(double t) const {
    const double st = std::sin(theta_B);
    return Vec3(st * std::cos(omega * t), st * std::sin(omega * t), std::cos(theta_B));
}

EffectiveFrame effective_frame(const RotatingFieldParams& p) {
    p.validate();
    const double eps = p.mu_sign;
    const double sq = p.omega_B * p.omega_B + p.omega * p.omega +
                      2.0 * eps * p.omega_B * p.omega * std::cos(p.theta_B);
    EffectiveFrame f;
    f.rate = std::sqrt(std::max(sq, 0.0));
    if (f.rate < 1e-12 * std::max(p.omega_B, p.omega)) {
        f.rate = 0.0;
        f.degenerate = true;
        return f;  // axis defaults to z
    }
    f.sin_theta = p.omega_B * std::sin(p.theta_B) / f.rate;
    f.cos_theta = (p.omega_B * std::cos(p.theta_B) + eps * p.omega) / f.rate;
    f.theta = std::atan2(f.sin_theta, f.cos_theta);
    f.axis = UnitVector3::normalized(Vec3(f.sin_theta, 0.0, f.cos_theta));
    return f;
}

PrecessionBasis precession_basis(const EffectiveFrame& frame, const Vec3& v0) {
    PrecessionBasis b;
    b.ez = frame.axis.vec();
    b.v_parallel = v0.dot(b.ez);
    const Vec3 perp = v0 - b.v_parallel * b.ez;
    b.v_perp = perp.norm();
    if (b.v_perp > 1e-12 * std::max(1.0, v0.norm())) {
        b.ex = perp / b.v_perp;
        b.ey = b.ez.cross(v0) / b.v_perp;
    } else {
        b.v_perp = 0.0;
        b.ex = Vec3(frame.cos_theta, 0.0, -frame.sin_theta);
        b.ey = b.ez.cross(b.ex);
    }
    return b;
}

ComplexMatrix rotating_hamiltonian(const RotatingFieldParams& p, const SpinOps& ops, double t) {
    return -static_cast<double>(p.mu_sign) * p.omega_B * ops.dot(p.field_direction(t));
}

namespace {

// exp(i phi s_z), diagonal in the standard basis.
ComplexMatrix z_phase(SpinQuantum s, double phi) {
    ComplexVector d(s.dim());
    for (int k = 0; k < s.dim(); ++k) d(k) = std::exp(imag_unit * (phi * s.m_at(k)));
    return d.asDiagonal();
}

Vec3 rotate_about_z(const Vec3& g, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return Vec3(g.x() * c - g.y() * s, g.x() * s + g.y() * c, g.z());
}

}  // namespace

ComplexMatrix evolution_operator(const RotatingFieldParams& p, double t, double t0) {
    const EffectiveFrame frame = effective_frame(p);
    const SpinOps ops = spin_operators(p.spin);
    const double eps = p.mu_sign;
    const ComplexMatrix ueff = exp_spin(ops, frame.axis, eps * frame.rate * (t - t0)).entries;
    return z_phase(p.spin, -p.omega * t) * ueff * z_phase(p.spin, p.omega * t0);
}

Trajectory mean_spin_trajectory(const RotatingFieldParams& p, const ComplexVector& psi0,
                                std::span<const double> grid) {
    return mean_spin_trajectory(p, spin_expectation(spin_operators(p.spin), psi0), grid);
}

Trajectory mean_spin_trajectory(const RotatingFieldParams& p, const Vec3& v0,
                                std::span<const double> grid) {
    const EffectiveFrame frame = effective_frame(p);
    const Vec3& n = frame.axis.vec();
    const double eps = p.mu_sign;
    const double par = v0.dot(n);
    const Vec3 transverse = v0 - par * n;
    const Vec3 lateral = n.cross(v0);

    Trajectory tr;
    tr.times.assign(grid.begin(), grid.end());
    tr.vectors.reserve(grid.size());
    tr.g_vectors.reserve(grid.size());
    for (double t : grid) {
        const double a = eps * frame.rate * t;
        const Vec3 g = transverse * std::cos(a) - lateral * std::sin(a) + par * n;
        tr.g_vectors.push_back(g);
        tr.vectors.push_back(rotate_about_z(g, p.omega * t));
    }
    return tr;
}

std::optional<CyclicInfo> detect_cyclicity(const RotatingFieldParams& p, double tol, int k_max) {
    const EffectiveFrame frame = effective_frame(p);
    if (frame.degenerate) return std::nullopt;
    const auto r = rational_approximation(frame.rate / p.omega, tol, k_max);
    if (!r) return std::nullopt;
    CyclicInfo info;
    info.K = static_cast<int>(r->denominator);
    info.K_S = static_cast<int>(r->numerator);
    info.T = info.K * p.period();
    info.ratio_residual = r->residual;
    return info;
}

double solid_angle_closed_form(const EffectiveFrame& frame, const Vec3& v0, const CyclicInfo& info,
                               int mu_sign) {
    const double norm = v0.norm();
    if (norm < 1e-12) {
        throw UndefinedSolidAngle("solid angle of a vanishing mean spin is not defined");
    }
    const double c = v0.dot(frame.axis.vec()) / norm;
    return -mu_sign * two_pi * info.K_S * (1.0 - c) + two_pi * info.K * (1.0 - frame.cos_theta * c);
}

double lab_branch_offset(const EffectiveFrame& frame, const Vec3& v0, const CyclicInfo& info,
                         int mu_sign) {
    const double norm = v0.norm();
    if (norm < 1e-12) {
        throw UndefinedSolidAngle("solid angle of a vanishing mean spin is not defined");
    }
    const double c = v0.dot(frame.axis.vec()) / norm;
    return c < -frame.cos_theta ? 4.0 * pi * mu_sign * info.K_S : 0.0;
}

double relation_residual_40(double gamma, std::optional<double> omega_v, double v0_norm,
                            const RotatingFieldParams& p, const CyclicInfo& info) {
    const double s = p.spin.value();
    const double winding = p.mu_sign * two_pi * info.K_S - two_pi * info.K;
    const double geometric = omega_v ? -v0_norm * *omega_v : 0.0;
    return phase_distance(gamma, geometric + (s - v0_norm) * winding);
}

double relation_residual_40(const PhaseReport& report, const RotatingFieldParams& p,
                            const CyclicInfo& info) {
    return relation_residual_40(report.gamma, report.omega_v, report.v0_norm, p, info);
}

PhaseReport phase_report(const RotatingFieldParams& p, const ComplexVector& psi0,
                         const CyclicInfo& info) {
    const SpinOps ops = spin_operators(p.spin);
    if (psi0.size() != p.spin.dim()) {
        throw std::invalid_argument("phase_report: state dimension does not match 2s+1");
    }
    if (std::abs(psi0.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument("phase_report: initial state must be normalized");
    }
    const EffectiveFrame frame = effective_frame(p);
    const double eps = p.mu_sign;
    const double s = p.spin.value();

    PhaseReport r;
    r.info = info;
    r.v0 = spin_expectation(ops, psi0);
    r.v0_norm = r.v0.norm();

    const ComplexVector psi_t = evolution_operator(p, info.T) * psi0;
    const Complex overlap = psi0.dot(psi_t);
    r.cyclic_fidelity = std::abs(overlap);
    r.delta_overlap = std::arg(overlap);
    r.delta = wrap_phase(s * (eps * two_pi * info.K_S - two_pi * info.K));

    // A ratio that is rational only to within the detection tolerance shifts the
    // accumulated phase by at most ~ 2 pi K s residual.
    const double phase_slack = 1e-8 + 4.0 * pi * info.K * std::max(s, 0.5) * info.ratio_residual;
    if (r.cyclic_fidelity < 1.0 - 1e-9 || phase_distance(r.delta, r.delta_overlap) > phase_slack) {
        throw ConsistencyError("phase_report: propagated state is not cyclic over the detected period");
    }

    const double par = r.v0.dot(frame.axis.vec());
    r.beta = eps * two_pi * info.K_S * par - two_pi * info.K * frame.cos_theta * par;
    r.gamma = wrap_phase(r.delta - r.beta);
    if (r.v0_norm >= 1e-12) r.omega_v = solid_angle_closed_form(frame, r.v0, info, p.mu_sign);
    r.relation_residual = relation_residual_40(r, p, info);
    return r;
}

}  // namespace geophase
