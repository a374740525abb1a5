#include "geophase/charged_atom.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <unsupported/Eigen/KroneckerProduct>

#include "geophase/cyclicity.hpp"

namespace geophase {

void ChargedParams::validate() const {
    if (!(omega_B > 0.0) || !std::isfinite(omega_B)) {
        throw std::invalid_argument("ChargedParams: omega_B must be positive");
    }
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw std::invalid_argument("ChargedParams: omega must be positive");
    }
    if (!(theta_B >= 0.0 && theta_B <= pi)) {
        throw std::invalid_argument("ChargedParams: theta_B must lie in [0, pi]");
    }
    if (l < 0) throw std::invalid_argument("ChargedParams: l must be non-negative");
    if (!std::isfinite(epsilon_nl)) throw std::invalid_argument("ChargedParams: epsilon_nl must be finite");
}

Vec3 ChargedParams::field_direction(double t) const {
    const double st = std::sin(theta_B);
    return Vec3(st * std::cos(omega * t), st * std::sin(omega * t), std::cos(theta_B));
}

namespace {

// Frame of the effective vector (b sin thB, 0, b cos thB - w) with b = g omega_B.
PrecessionFrame tilted_frame(double b, double omega, double theta_B) {
    PrecessionFrame f;
    const double x = b * std::sin(theta_B);
    const double z = b * std::cos(theta_B) - omega;
    f.rate = std::hypot(x, z);
    if (f.rate < 1e-12 * std::max(b, omega)) {
        f.rate = 0.0;
        f.degenerate = true;
        return f;
    }
    f.sin_theta = x / f.rate;
    f.cos_theta = z / f.rate;
    f.theta = std::atan2(f.sin_theta, f.cos_theta);
    f.axis = UnitVector3::normalized(Vec3(f.sin_theta, 0.0, f.cos_theta));
    return f;
}

Vec3 rotate_about_z(const Vec3& g, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return Vec3(g.x() * c - g.y() * s, g.x() * s + g.y() * c, g.z());
}

// Rotation of x about the unit axis n by +angle (right-handed).
Vec3 precess(const Vec3& x, const Vec3& n, double angle) {
    const double par = x.dot(n);
    return (x - par * n) * std::cos(angle) + n.cross(x) * std::sin(angle) + par * n;
}

}  // namespace

DualFrame dual_frames(const ChargedParams& p) {
    p.validate();
    return {tilted_frame(p.omega_B, p.omega, p.theta_B), tilted_frame(2.0 * p.omega_B, p.omega, p.theta_B)};
}

ShellOperators shell_operators(int l, SpinQuantum spin) {
    if (l < 0) throw std::invalid_argument("shell_operators: l must be non-negative");
    ShellOperators ops{spin_operators(SpinQuantum(2 * l)), spin_operators(spin), {}, {}};
    const ComplexMatrix il = ops.orbital.identity();
    const ComplexMatrix is = ops.spin.identity();
    for (int i = 0; i < 3; ++i) {
        ops.L[i] = Eigen::kroneckerProduct(ops.orbital[i], is).eval();
        ops.S[i] = Eigen::kroneckerProduct(il, ops.spin[i]).eval();
    }
    return ops;
}

ComplexVector product_state(const ComplexVector& orbital, const ComplexVector& spin) {
    return Eigen::kroneckerProduct(orbital, spin).eval();
}

std::pair<Vec3, Vec3> shell_expectations(const ShellOperators& ops, const ComplexVector& psi) {
    Vec3 u, v;
    for (int i = 0; i < 3; ++i) {
        u[i] = psi.dot(ops.L[i] * psi).real();
        v[i] = psi.dot(ops.S[i] * psi).real();
    }
    return {u, v};
}

ComplexMatrix charged_hamiltonian(const ChargedParams& p, const ShellOperators& ops, double t) {
    const Vec3 n = p.field_direction(t);
    return p.epsilon_nl * ops.identity() + p.omega_B * (ops.l_dot(n) + 2.0 * ops.s_dot(n));
}

ComplexMatrix effective_hamiltonian(const ChargedParams& p, const ShellOperators& ops,
                                    const DualFrame& frames) {
    return p.epsilon_nl * ops.identity() + frames.orbital.rate * ops.l_dot(frames.orbital.axis) +
           frames.spin.rate * ops.s_dot(frames.spin.axis);
}

ComplexMatrix charged_evolution(const ChargedParams& p, double t) {
    const DualFrame frames = dual_frames(p);
    const SpinOps lo = spin_operators(p.orbital());
    const SpinOps so = spin_operators(p.spin);
    const ComplexMatrix ul = exp_spin(lo, frames.orbital.axis, -frames.orbital.rate * t).entries;
    const ComplexMatrix us = exp_spin(so, frames.spin.axis, -frames.spin.rate * t).entries;
    ComplexMatrix u = Eigen::kroneckerProduct(ul, us).eval();
    u *= std::exp(-imag_unit * (p.epsilon_nl * t));
    // exp(-i w t j_z) is diagonal in the product basis.
    const int ds = p.spin.dim();
    for (int a = 0; a < p.orbital().dim(); ++a) {
        for (int b = 0; b < ds; ++b) {
            const double mj = p.orbital().m_at(a) + p.spin.m_at(b);
            u.row(a * ds + b) *= std::exp(-imag_unit * (p.omega * t * mj));
        }
    }
    return u;
}

std::vector<ShellEigenstate> effective_eigenstates(const ChargedParams& p, const DualFrame& frames) {
    const SpinOps lo = spin_operators(p.orbital());
    const SpinOps so = spin_operators(p.spin);
    const SpinEigenbasis zl = spin_direction_eigenbasis(lo, frames.orbital.theta, 0.0);
    const SpinEigenbasis zs = spin_direction_eigenbasis(so, frames.spin.theta, 0.0);
    std::vector<ShellEigenstate> out;
    out.reserve(static_cast<std::size_t>(p.dim()));
    for (int a = 0; a < lo.spin.dim(); ++a) {
        for (int b = 0; b < so.spin.dim(); ++b) {
            ShellEigenstate e;
            e.m = lo.spin.m_at(a);
            e.m_s = so.spin.m_at(b);
            e.energy = p.epsilon_nl + e.m * frames.orbital.rate + e.m_s * frames.spin.rate;
            e.state = product_state(zl.columns.col(a), zs.columns.col(b));
            out.push_back(std::move(e));
        }
    }
    return out;
}

std::optional<DualCyclicInfo> detect_dual_cyclicity(const ChargedParams& p, double tol, int k_max) {
    const DualFrame frames = dual_frames(p);
    if (frames.orbital.degenerate || frames.spin.degenerate) return std::nullopt;
    const auto rl = rational_approximation(frames.orbital.rate / p.omega, tol, k_max);
    const auto rs = rational_approximation(frames.spin.rate / p.omega, tol, k_max);
    if (!rl || !rs) return std::nullopt;
    DualCyclicInfo info;
    const long k = std::lcm(rl->denominator, rs->denominator);
    info.K = static_cast<int>(k);
    info.K_L = static_cast<int>(k / rl->denominator * rl->numerator);
    info.K_S = static_cast<int>(k / rs->denominator * rs->numerator);
    info.T = info.K * p.period();
    info.ratio_residual = std::max(rl->residual, rs->residual);
    return info;
}

DualTrajectory charged_mean_trajectory(const ChargedParams& p, const Vec3& u0, const Vec3& v0,
                                       std::span<const double> grid) {
    const DualFrame frames = dual_frames(p);
    DualTrajectory tr;
    tr.times.assign(grid.begin(), grid.end());
    for (double t : grid) {
        const Vec3 f = precess(u0, frames.orbital.axis, frames.orbital.rate * t);
        const Vec3 g = precess(v0, frames.spin.axis, frames.spin.rate * t);
        tr.f.push_back(f);
        tr.g.push_back(g);
        tr.u.push_back(rotate_about_z(f, p.omega * t));
        tr.v.push_back(rotate_about_z(g, p.omega * t));
    }
    return tr;
}

namespace {

std::optional<double> closed_solid_angle(const PrecessionFrame& frame, const Vec3& x0, int k_frame,
                                         int k) {
    const double norm = x0.norm();
    if (norm < 1e-12) return std::nullopt;
    const double c = x0.dot(frame.axis.vec()) / norm;
    return two_pi * k_frame * (1.0 - c) + two_pi * k * (1.0 - frame.cos_theta * c);
}

}  // namespace

SolidAnglePair charged_solid_angles(const DualFrame& frames, const Vec3& u0, const Vec3& v0,
                                    const DualCyclicInfo& info) {
    return {closed_solid_angle(frames.orbital, u0, info.K_L, info.K),
            closed_solid_angle(frames.spin, v0, info.K_S, info.K)};
}

namespace {

std::optional<double> branch_offset(const PrecessionFrame& frame, const Vec3& x0, int turns) {
    const double norm = x0.norm();
    if (norm < 1e-12) return std::nullopt;
    const double c = x0.dot(frame.axis.vec()) / norm;
    return c < -frame.cos_theta ? -4.0 * pi * turns : 0.0;
}

}  // namespace

SolidAnglePair charged_lab_branch_offsets(const DualFrame& frames, const Vec3& u0, const Vec3& v0,
                                          const DualCyclicInfo& info) {
    return {branch_offset(frames.orbital, u0, info.K_L), branch_offset(frames.spin, v0, info.K_S)};
}

DualPhaseReport charged_phase_report(const ChargedParams& p, const ComplexVector& psi0,
                                     const DualCyclicInfo& info) {
    if (psi0.size() != p.dim()) {
        throw std::invalid_argument("charged_phase_report: state dimension does not match (2l+1)(2s+1)");
    }
    if (std::abs(psi0.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument("charged_phase_report: initial state must be normalized");
    }
    const DualFrame frames = dual_frames(p);
    const ShellOperators ops = shell_operators(p.l, p.spin);
    const double l = p.l;
    const double s = p.spin.value();

    DualPhaseReport r;
    r.info = info;
    std::tie(r.u0, r.v0) = shell_expectations(ops, psi0);
    r.u0_norm = r.u0.norm();
    r.v0_norm = r.v0.norm();

    const ComplexVector psi_t = charged_evolution(p, info.T) * psi0;
    const Complex overlap = psi0.dot(psi_t);
    r.cyclic_fidelity = std::abs(overlap);
    r.delta_overlap = std::arg(overlap);
    r.delta = wrap_phase(-p.epsilon_nl * info.T - l * (two_pi * info.K + two_pi * info.K_L) -
                         s * (two_pi * info.K + two_pi * info.K_S));
    const double phase_slack = 1e-8 + 4.0 * pi * info.K * (l + s + 1.0) * info.ratio_residual;
    if (r.cyclic_fidelity < 1.0 - 1e-9 || phase_distance(r.delta, r.delta_overlap) > phase_slack) {
        throw ConsistencyError("charged_phase_report: propagated state is not cyclic over the detected period");
    }

    const double ul = r.u0.dot(frames.orbital.axis.vec());
    const double vs = r.v0.dot(frames.spin.axis.vec());
    r.beta = -p.epsilon_nl * info.T - two_pi * info.K_L * ul - two_pi * info.K_S * vs -
             two_pi * info.K * (frames.orbital.cos_theta * ul + frames.spin.cos_theta * vs);
    r.gamma = wrap_phase(r.delta - r.beta);

    const SolidAnglePair angles = charged_solid_angles(frames, r.u0, r.v0, info);
    r.omega_u = angles.omega_u;
    r.omega_v = angles.omega_v;
    const ExtraTermResiduals res = relation_residual_82_83(r, p);
    r.residual_82 = res.res82;
    r.residual_83 = res.res83;
    return r;
}

ExtraTermResiduals relation_residual_82_83(const DualPhaseReport& report, const ChargedParams& p) {
    const DualCyclicInfo& i = report.info;
    const double l = p.l;
    const double s = p.spin.value();
    const double orbital_turns = two_pi * i.K + two_pi * i.K_L;
    const double spin_turns = two_pi * i.K + two_pi * i.K_S;
    const double u_term = report.omega_u ? -report.u0_norm * *report.omega_u : 0.0;
    const double v_term = report.omega_v ? -report.v0_norm * *report.omega_v : 0.0;

    ExtraTermResiduals out;
    out.res82 = phase_distance(report.gamma, u_term + v_term + (report.u0_norm - l) * orbital_turns +
                                                 (report.v0_norm - s) * spin_turns);
    if (p.spin.two_s() == 1) {
        const double half_v = report.omega_v ? -0.5 * *report.omega_v : 0.0;
        out.res83 = phase_distance(report.gamma, u_term + half_v + report.u0_norm * orbital_turns);
    }
    return out;
}

double solid_angle_only_residual(const DualPhaseReport& report) {
    const double u_term = report.omega_u ? -report.u0_norm * *report.omega_u : 0.0;
    const double v_term = report.omega_v ? -report.v0_norm * *report.omega_v : 0.0;
    return phase_distance(report.gamma, u_term + v_term);
}

HamiltonianSampler charged_field_hamiltonian(const FieldWaveform& field, const ShellOperators& ops,
                                             double epsilon_nl) {
    return [field, ops, epsilon_nl](double t) -> ComplexMatrix {
        const Vec3 n = field.direction(t);
        return epsilon_nl * ops.identity() + field.rate(t) * (ops.l_dot(n) + 2.0 * ops.s_dot(n));
    };
}

ComplexVector dual_axis_eigenstate(const ShellOperators& ops, const UnitVector3& d0, double m,
                                   const UnitVector3& e0, double m_s) {
    return product_state(axis_eigenstate(ops.orbital, d0, m), axis_eigenstate(ops.spin, e0, m_s));
}

DualAxisTrajectory dual_axis_transport(const FieldWaveform& field, const UnitVector3& d0,
                                       const UnitVector3& e0, std::span<const double> grid,
                                       double m, double m_s, double epsilon_nl) {
    DualAxisTrajectory out{integrate_axis(field, d0, grid, 1.0), integrate_axis(field, e0, grid, 2.0),
                           {}, m, m_s};
    const AxisTrajectory& d = out.orbital;
    const AxisTrajectory& e = out.spin;
    const std::size_t n = d.times.size();
    std::vector<double> rate(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = d.times[k];
        const double energy =
            epsilon_nl + field.rate(t) * (m * d.axis[k] + 2.0 * m_s * e.axis[k]).dot(field.direction(t));
        rate[k] = m * std::cos(d.theta[k]) * d.phi_rate[k] + m_s * std::cos(e.theta[k]) * e.phi_rate[k] -
                  energy;
    }
    out.alpha.assign(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        out.alpha[k] = out.alpha[k - 1] + 0.5 * (d.times[k] - d.times[k - 1]) * (rate[k] + rate[k - 1]);
    }
    return out;
}

std::optional<DualClosure> check_dual_closure(const DualAxisTrajectory& axes, double tol) {
    const auto cd = check_closure(axes.orbital, tol);
    const auto ce = check_closure(axes.spin, tol);
    if (!cd || !ce) return std::nullopt;
    return DualClosure{cd->index, cd->T, cd->K, ce->K, std::max(cd->closure_error, ce->closure_error)};
}

DualGeometricPhase dual_geometric_phase(const DualAxisTrajectory& axes, const DualClosure& closure,
                                        double tol) {
    const CyclicClosure cd{closure.index, closure.T, closure.K_d, closure.closure_error};
    const CyclicClosure ce{closure.index, closure.T, closure.K_e, closure.closure_error};
    const GeometricPhase gd = cyclic_geometric_phase(axes.orbital, cd, axes.m, tol);
    const GeometricPhase ge = cyclic_geometric_phase(axes.spin, ce, axes.m_s, tol);
    DualGeometricPhase out;
    out.omega_d = gd.omega_e;
    out.omega_e = ge.omega_e;
    out.gamma = wrap_phase(-axes.m * out.omega_d - axes.m_s * out.omega_e);
    out.omega_u = gd.omega_v;
    out.omega_v = ge.omega_v;
    out.gamma_uv = wrap_phase((out.omega_u ? -std::abs(axes.m) * *out.omega_u : 0.0) +
                              (out.omega_v ? -std::abs(axes.m_s) * *out.omega_v : 0.0));
    return out;
}

DualEigenResiduals dual_eigen_residuals(const ShellOperators& ops,
                                        const SteppedPropagation& propagation,
                                        const DualAxisTrajectory& axes, Eigen::Index column) {
    const auto& times = axes.orbital.times;
    if (propagation.times.size() != times.size()) {
        throw std::invalid_argument("dual_eigen_residuals: propagation and axes use different grids");
    }
    const double l = ops.orbital.spin.value();
    const ComplexMatrix l2 = ops.L[0] * ops.L[0] + ops.L[1] * ops.L[1] + ops.L[2] * ops.L[2];
    DualEigenResiduals r;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const ComplexVector psi = propagation.states[k].col(column);
        const Vec3& d = axes.orbital.axis[k];
        const Vec3& e = axes.spin.axis[k];
        r.orbital = std::max(r.orbital, (ops.l_dot(d) * psi - axes.m * psi).norm());
        r.spin = std::max(r.spin, (ops.s_dot(e) * psi - axes.m_s * psi).norm());
        r.casimir = std::max(r.casimir, (l2 * psi - l * (l + 1.0) * psi).norm());
        const auto [u, v] = shell_expectations(ops, psi);
        r.u_deviation = std::max(r.u_deviation, (u - axes.m * d).norm());
        r.v_deviation = std::max(r.v_deviation, (v - axes.m_s * e).norm());
    }
    return r;
}

DualTotalPhaseCheck dual_total_phase_check(const HamiltonianSampler& hamiltonian,
                                           const SteppedPropagation& propagation,
                                           const DualAxisTrajectory& axes,
                                           const DualClosure& closure, Eigen::Index column) {
    const auto& times = axes.orbital.times;
    if (propagation.times.size() != times.size()) {
        throw std::invalid_argument("dual_total_phase_check: propagation and axes use different grids");
    }
    const std::size_t end = closure.index;
    DualTotalPhaseCheck out;
    out.delta_alpha = wrap_phase(axes.alpha[end] - axes.alpha[0] - two_pi * axes.m * closure.K_d -
                                 two_pi * axes.m_s * closure.K_e);
    const ComplexVector psi0 = propagation.states[0].col(column);
    out.delta_overlap = std::arg(psi0.dot(propagation.states[end].col(column)));
    std::vector<double> energy(end + 1);
    for (std::size_t k = 0; k <= end; ++k) {
        const ComplexVector psi = propagation.states[k].col(column);
        energy[k] = psi.dot(hamiltonian(times[k]) * psi).real();
    }
    out.beta = -trapezoid(std::span(times).first(end + 1), energy);
    out.gamma = wrap_phase(out.delta_alpha - out.beta);
    out.gamma_overlap = wrap_phase(out.delta_overlap - out.beta);
    return out;
}

}  // namespace geophase
