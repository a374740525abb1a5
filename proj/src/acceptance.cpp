#include "geophase/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "geophase/charged_atom.hpp"
#include "geophase/sweep.hpp"

namespace geophase::acceptance {

namespace {

using Rng = std::mt19937_64;
using Clock = std::chrono::steady_clock;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Vec3 random_unit(Rng& rng) {
    std::normal_distribution<double> g;
    for (;;) {
        const Vec3 v(g(rng), g(rng), g(rng));
        if (v.norm() > 1e-6) return v.normalized();
    }
}

ComplexVector random_state(Rng& rng, int dim) {
    std::normal_distribution<double> g;
    ComplexVector psi(dim);
    for (int i = 0; i < dim; ++i) psi(i) = Complex(g(rng), g(rng));
    return psi.normalized();
}

ComplexMatrix random_states(Rng& rng, int dim, int count) {
    ComplexMatrix m(dim, count);
    for (int k = 0; k < count; ++k) m.col(k) = random_state(rng, dim);
    return m;
}

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

// Step of the oracle runs that confirm closed-form phases to 1e-6 over several
// field periods; half the propagator-check step keeps the accumulated error
// well inside that bound.
constexpr double oracle_step = 5e-5;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

RotatingFieldParams pythagorean_point(SpinQuantum spin) { return RotatingFieldParams{3.0, 4.0, pi / 2.0, 1, spin}; }

ChargedParams paper_point(SpinQuantum spin) {
    ChargedParams p;
    p.omega = 1.0;
    p.omega_B = std::sqrt(1.5);
    p.theta_B = std::acos(std::sqrt(3.0) / (2.0 * std::sqrt(2.0)));
    p.l = 1;
    p.spin = spin;
    return p;
}

// Cyclic neutral parameters with omega = 1: omega_S = K_S/K solved for omega_B.
RotatingFieldParams random_cyclic_params(Rng& rng, SpinQuantum spin) {
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

CheckResult conjugation_identity(Rng& rng) {
    CheckResult r{1, "conjugation identity, s = 1/2 ... 3", false, false, "", 0.0};
    double worst = 0.0;
    for (int two_s : {1, 2, 3, 4, 6}) {
        const SpinOps ops = spin_operators(SpinQuantum(two_s));
        for (int trial = 0; trial < 100; ++trial) {
            const UnitVector3 n = UnitVector3::normalized(random_unit(rng));
            const double phi = uniform(rng, -two_pi, two_pi);
            const auto closed = conjugate_spin_vector(ops, n, phi);
            // exp(i phi s.n) from a generic Hermitian eigen-solver, not the spin rotation code.
            const ComplexMatrix u = hermitian_exp(ops.dot(n.vec()), -phi);
            for (int i = 0; i < 3; ++i) worst = std::max(worst, (closed[i] - u * ops[i] * u.adjoint()).norm());
        }
    }
    r.pass = worst < 1e-10;
    r.detail = "max Frobenius error " + sci(worst) + " (< 1e-10)";
    return r;
}

CheckResult propagator_exactness(Rng& rng) {
    CheckResult r{2, "closed-form propagator vs stepping oracle", false, false, "", 0.0};
    double worst = 0.0;
    double ratio_min = 1e300;
    double ratio_max = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
        RotatingFieldParams p;
        p.omega_B = uniform(rng, 0.3, 3.0);
        p.omega = uniform(rng, 0.5, 2.0);
        p.theta_B = uniform(rng, 0.0, pi);
        p.mu_sign = uniform(rng, 0.0, 1.0) < 0.5 ? 1 : -1;
        p.spin = SpinQuantum(1 + static_cast<int>(uniform(rng, 0.0, 4.0)));
        const SpinOps ops = spin_operators(p.spin);
        const HamiltonianSampler h = [&](double t) { return rotating_hamiltonian(p, ops, t); };
        const double tau = p.period();
        const ComplexMatrix exact = evolution_operator(p, tau);
        const double fine = (exact - timestep_propagator(h, p.spin.dim(), 1e-4 * tau, tau)).operatorNorm();
        const double coarse = (exact - timestep_propagator(h, p.spin.dim(), 2e-4 * tau, tau)).operatorNorm();
        worst = std::max(worst, fine);
        ratio_min = std::min(ratio_min, coarse / fine);
        ratio_max = std::max(ratio_max, coarse / fine);
    }
    r.pass = worst < 1e-6 && ratio_min >= 3.5 && ratio_max <= 4.5;
    r.detail = "max ||U - U_oracle|| " + sci(worst) + " (< 1e-6), dt-halving ratio in [" + sci(ratio_min) + ", " +
               sci(ratio_max) + "] (within [3.5, 4.5])";
    return r;
}

CheckResult pythagorean_frame() {
    CheckResult r{3, "Pythagorean frame point omega_B=3, omega=4, theta_B=pi/2", false, false, "", 0.0};
    const RotatingFieldParams base = pythagorean_point(SpinQuantum(1));
    const EffectiveFrame frame = effective_frame(base);
    const auto info = detect_cyclicity(base);
    bool ok = std::abs(frame.rate - 5.0) < 1e-12 && info && info->K == 4 && info->K_S == 5;
    double closed_err = 0.0;
    double oracle_err = 0.0;
    if (info) {
        for (int two_s : {1, 2, 3}) {
            const RotatingFieldParams p = pythagorean_point(SpinQuantum(two_s));
            const SpinOps ops = spin_operators(p.spin);
            const SpinEigenbasis basis = spin_direction_eigenbasis(ops, frame.axis);
            const HamiltonianSampler h = [&](double t) { return rotating_hamiltonian(p, ops, t); };
            const SteppedPropagation prop = timestep_propagate(h, basis.columns, oracle_step * p.period(), info->T);
            for (int k = 0; k < p.spin.dim(); ++k) {
                const double m_s = p.spin.m_at(k);
                const double expected = -m_s * info->K * two_pi * (1.0 - 4.0 / 5.0);
                const PhaseReport rep = phase_report(p, basis.columns.col(k), *info);
                closed_err = std::max(closed_err, phase_distance(rep.gamma, expected));
                const PhaseDecomposition d = phase_decompose(prop, h, k);
                oracle_err = d.gamma ? std::max(oracle_err, phase_distance(rep.gamma, *d.gamma)) : pi;
            }
        }
    }
    ok = ok && closed_err < 1e-9 && oracle_err < 1e-6;
    r.pass = ok;
    r.detail = "omega_S=" + std::to_string(frame.rate) + (info ? ", K=" + std::to_string(info->K) + ", K_S=" +
                                                                   std::to_string(info->K_S)
                                                             : ", not cyclic") +
               "; gamma vs -m_s K 2pi(1-4/5) " + sci(closed_err) + " (< 1e-9), vs oracle " + sci(oracle_err) +
               " (< 1e-6)";
    return r;
}

CheckResult neutral_extra_term(Rng& rng) {
    CheckResult r{4, "neutral extra-term relation on random superpositions", false, false, "", 0.0};
    double relation = 0.0;
    double oracle_err = 0.0;
    for (int two_s : {2, 3}) {
        const RotatingFieldParams p = pythagorean_point(SpinQuantum(two_s));
        const CyclicInfo info = *detect_cyclicity(p);
        const SpinOps ops = spin_operators(p.spin);
        const ComplexMatrix states = random_states(rng, p.spin.dim(), 25);
        const HamiltonianSampler h = [&](double t) { return rotating_hamiltonian(p, ops, t); };
        const SteppedPropagation prop = timestep_propagate(h, states, oracle_step * p.period(), info.T);
        for (int k = 0; k < 25; ++k) {
            const PhaseReport rep = phase_report(p, states.col(k), info);
            relation = std::max(relation, rep.relation_residual);
            const PhaseDecomposition d = phase_decompose(prop, h, k);
            oracle_err = d.gamma ? std::max(oracle_err, phase_distance(rep.gamma, *d.gamma)) : pi;
        }
    }
    const RotatingFieldParams half = pythagorean_point(SpinQuantum(1));
    const CyclicInfo info = *detect_cyclicity(half);
    double norm_err = 0.0;
    double half_law = 0.0;
    for (int k = 0; k < 25; ++k) {
        const PhaseReport rep = phase_report(half, random_state(rng, 2), info);
        norm_err = std::max(norm_err, std::abs(rep.v0_norm - 0.5));
        half_law = std::max(half_law, phase_distance(rep.gamma, -0.5 * *rep.omega_v));
    }
    r.pass = relation < 1e-6 && oracle_err < 1e-6 && norm_err < 1e-12 && half_law < 1e-6;
    r.detail = "s=1,3/2 residual " + sci(relation) + " (< 1e-6), gamma vs oracle " + sci(oracle_err) +
               "; s=1/2 ||v0|-1/2| " + sci(norm_err) + " (< 1e-12), gamma vs -Omega_v/2 " + sci(half_law) + " (< 1e-6)";
    return r;
}

std::vector<CheckResult> solid_angle_duality(Rng& rng) {
    CheckResult r{5, "closed-form vs quadrature solid angle (unreduced)", false, false, "", 0.0};
    CheckResult info_line{5, "same draws with the lab-axis branch offset applied", false, true, "", 0.0};
    double worst = 0.0;
    double corrected = 0.0;
    int rotated = 0;
    int off_branch = 0;
    const int draws = 20;
    for (int draw = 0; draw < draws; ++draw) {
        RotatingFieldParams p;
        ComplexVector psi;
        if (draw + 1 < draws) {
            p = random_cyclic_params(rng, SpinQuantum(1 + static_cast<int>(uniform(rng, 0.0, 3.0))));
            psi = random_state(rng, p.spin.dim());
        } else {
            // One trace that grazes -z (closest approach 0.05 rad) so the
            // quadrature has to move its pole.
            EffectiveFrame f;
            do {
                p = random_cyclic_params(rng, SpinQuantum(1));
                f = effective_frame(p);
            } while (f.theta < 0.2 || f.theta > pi - 0.2);
            const double rho = pi - f.theta - 0.05;
            const Vec3 dir = std::cos(rho) * f.axis.vec() + std::sin(rho) * Vec3::UnitY();
            psi = spin_direction_eigenbasis(spin_operators(p.spin), UnitVector3::normalized(dir)).state(0.5, p.spin);
        }
        const EffectiveFrame frame = effective_frame(p);
        const CyclicInfo info = *detect_cyclicity(p);
        const SpinOps ops = spin_operators(p.spin);
        const Vec3 v0 = spin_expectation(ops, psi);
        const auto grid = uniform_grid(info.T, static_cast<std::size_t>(4000 * info.K));
        const Trajectory tr = mean_spin_trajectory(p, v0, grid);
        const double closed = solid_angle_closed_form(frame, v0, info, p.mu_sign);
        const QuadratureResult q = solid_angle_quadrature(tr);
        const double offset = lab_branch_offset(frame, v0, info, p.mu_sign);
        if (q.frame_rotated) ++rotated;
        if (offset != 0.0) ++off_branch;
        worst = std::max(worst, std::abs(q.value - closed));
        corrected = std::max(corrected, std::abs(q.value - closed - offset));
    }
    r.pass = worst < 1e-6 && rotated > 0;
    r.detail = "max |Omega_closed - Omega_quad| " + sci(worst) + " (< 1e-6) over " + std::to_string(draws) +
               " draws, " + std::to_string(rotated) + " needed pole rotation, " + std::to_string(off_branch) +
               " on the branch where the two differ by 4 pi K_S";
    info_line.pass = corrected < 1e-6;
    info_line.detail = "max |Omega_closed + offset - Omega_quad| " + sci(corrected) +
                       "; both agree modulo 4 pi on every draw";
    return {r, info_line};
}

FieldWaveform sign_flipping_field(double amplitude, double omega, double theta) {
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    return FieldWaveform([=](double t) { return amplitude * std::cos(omega * t); },
                         [=](double t) { return Vec3(st * std::cos(omega * t), st * std::sin(omega * t), ct); });
}

CheckResult general_transport() {
    CheckResult r{6, "eigenaxis transport in a generic waveform", false, false, "", 0.0};
    double eigen = 0.0;
    double mean_dev = 0.0;
    double gamma_err = 0.0;
    bool zero_ok = true;
    bool closed_all = true;

    const auto run = [&](const FieldWaveform& field, const SpinOps& ops, const UnitVector3& e0, double T) {
        for (int k = 0; k < ops.spin.dim(); ++k) {
            const double m_s = ops.spin.m_at(k);
            const ComplexVector psi0 = axis_eigenstate(ops, e0, m_s);
            const HamiltonianSampler h = neutral_hamiltonian(field, ops);
            const SteppedPropagation prop = timestep_propagate(h, psi0, 1e-4 * T, T);
            const AxisTrajectory axis = transport_axis(field, e0, prop.times, m_s);
            eigen = std::max(eigen, eigen_residual(ops, prop, axis, m_s));
            mean_dev = std::max(mean_dev, mean_spin_deviation(ops, prop, axis, m_s));
            const auto closure = check_closure(axis);
            if (!closure) {
                closed_all = false;
                continue;
            }
            const GeometricPhase g = cyclic_geometric_phase(axis, *closure, m_s);
            const TotalPhaseCheck c = total_phase_check(field, ops, prop, axis, *closure, m_s);
            gamma_err = std::max(gamma_err, phase_distance(g.gamma, c.gamma_overlap));
            if (m_s == 0.0) zero_ok = zero_ok && g.gamma == 0.0 && !g.omega_v.has_value();
        }
    };

    const RotatingFieldParams p = pythagorean_point(SpinQuantum(3));
    run(FieldWaveform::rotating(p.mu_sign * p.omega_B, p.omega, p.theta_B), spin_operators(p.spin),
        effective_frame(p).axis, p.period());

    const double T = two_pi;
    const FieldWaveform flip = sign_flipping_field(2.2, 1.0, 0.9);
    run(flip, spin_operators(SpinQuantum(2)), periodic_fixed_axis(flip, T, 20000, -1.0), T);

    r.pass = closed_all && eigen < 1e-5 && mean_dev < 1e-6 && gamma_err < 1e-5 && zero_ok;
    r.detail = "eigen residual " + sci(eigen) + " (< 1e-5), |v - m_s e| " + sci(mean_dev) +
               " (< 1e-6), gamma vs delta-beta " + sci(gamma_err) + " (< 1e-5), m_s=0 gives 0 with Omega_v undefined: " +
               (zero_ok ? "yes" : "no") + (closed_all ? "" : ", some axis did not close");
    return r;
}

CheckResult charged_paper_point() {
    CheckResult r{7, "charged frames and eigenstate phase at omega_B/omega = sqrt(3/2)", false, false, "", 0.0};
    const ChargedParams p = paper_point(SpinQuantum(1));
    const DualFrame f = dual_frames(p);
    const double rate_err = std::max(std::abs(f.orbital.rate - 1.0), std::abs(f.spin.rate - 2.0));
    const double cos_err = std::max(std::abs(f.orbital.cos_theta + 0.25), std::abs(f.spin.cos_theta - 0.25));
    const auto info = detect_dual_cyclicity(p);
    double closed_err = pi;
    double oracle_err = pi;
    if (info) {
        for (const ShellEigenstate& e : effective_eigenstates(p, f)) {
            if (e.m != 1.0 || e.m_s != 0.5) continue;
            const DualPhaseReport rep = charged_phase_report(p, e.state, *info);
            closed_err = phase_distance(rep.gamma, 0.75 * pi);
            const ShellOperators ops = shell_operators(p.l, p.spin);
            const HamiltonianSampler h = [&](double t) { return charged_hamiltonian(p, ops, t); };
            const SteppedPropagation prop = timestep_propagate(h, e.state, oracle_step * p.period(), info->T);
            const PhaseDecomposition d = phase_decompose(prop, h);
            if (d.gamma) oracle_err = phase_distance(*d.gamma, 0.75 * pi);
        }
    }
    r.pass = rate_err < 1e-12 && cos_err < 1e-12 && closed_err < 1e-9 && oracle_err < 1e-6;
    r.detail = "rate error " + sci(rate_err) + ", cos error " + sci(cos_err) + " (< 1e-12); gamma(1, 1/2) - 3pi/4 " +
               sci(closed_err) + " (< 1e-9), oracle " + sci(oracle_err) + " (< 1e-6)";
    return r;
}

// Random orbital superpositions within the shell, each with a random pure
// spin state: |v0| = s for s = 1/2 as the spin-1/2 relation assumes.
ComplexMatrix random_shell_states(Rng& rng, const ChargedParams& p, int count) {
    ComplexMatrix m(p.dim(), count);
    for (int k = 0; k < count; ++k) {
        m.col(k) = product_state(random_state(rng, 2 * p.l + 1), random_state(rng, p.spin.dim()));
    }
    return m;
}

std::vector<CheckResult> charged_extra_terms(Rng& rng) {
    CheckResult r{8, "charged extra-term relations on shell superpositions", false, false, "", 0.0};
    CheckResult info_line{8, "same relations on states entangling orbit and spin", false, true, "", 0.0};
    double res83 = 0.0;
    double res82 = 0.0;
    double oracle_err = 0.0;
    double eigen_law = 0.0;
    double entangled83 = 0.0;
    double entangled82 = 0.0;
    double min_v0 = 1e300;
    for (int two_s : {1, 2}) {
        const ChargedParams p = paper_point(SpinQuantum(two_s));
        const DualCyclicInfo info = *detect_dual_cyclicity(p);
        const ShellOperators ops = shell_operators(p.l, p.spin);
        const ComplexMatrix states = random_shell_states(rng, p, 25);
        const HamiltonianSampler h = [&](double t) { return charged_hamiltonian(p, ops, t); };
        const SteppedPropagation prop = timestep_propagate(h, states, oracle_step * p.period(), info.T);
        for (int k = 0; k < 25; ++k) {
            const DualPhaseReport rep = charged_phase_report(p, states.col(k), info);
            if (two_s == 1) {
                res83 = std::max(res83, *rep.residual_83);
            } else {
                res82 = std::max(res82, rep.residual_82);
            }
            const PhaseDecomposition d = phase_decompose(prop, h, k);
            oracle_err = d.gamma ? std::max(oracle_err, phase_distance(rep.gamma, *d.gamma)) : pi;
        }
        for (const ShellEigenstate& e : effective_eigenstates(p, dual_frames(p))) {
            const DualPhaseReport rep = charged_phase_report(p, e.state, info);
            const double u = rep.omega_u ? -std::abs(e.m) * *rep.omega_u : 0.0;
            const double v = rep.omega_v ? -std::abs(e.m_s) * *rep.omega_v : 0.0;
            eigen_law = std::max(eigen_law, phase_distance(rep.gamma, u + v));
        }
        for (int k = 0; k < 25; ++k) {
            const DualPhaseReport rep = charged_phase_report(p, random_state(rng, p.dim()), info);
            entangled82 = std::max(entangled82, rep.residual_82);
            if (rep.residual_83) {
                entangled83 = std::max(entangled83, *rep.residual_83);
                min_v0 = std::min(min_v0, rep.v0_norm);
            }
        }
    }
    r.pass = res83 < 1e-6 && res82 < 1e-6 && oracle_err < 1e-6 && eigen_law < 1e-9;
    r.detail = "s=1/2 res83 " + sci(res83) + ", s=1 res82 " + sci(res82) + " (< 1e-6), gamma vs oracle " +
               sci(oracle_err) + "; eigenstates vs -|m|Omega_u - |m_s|Omega_v " + sci(eigen_law) + " (< 1e-9)";
    info_line.pass = true;
    info_line.detail = "res82 " + sci(entangled82) + " still holds; res83 " + sci(entangled83) +
                       " does not, since |v0| drops to " + sci(min_v0) + " < 1/2";
    return {r, info_line};
}

CheckResult dual_transport() {
    CheckResult r{9, "dual-axis transport in the rotating field as a waveform", false, false, "", 0.0};
    const ChargedParams p = paper_point(SpinQuantum(1));
    const DualFrame f = dual_frames(p);
    const DualCyclicInfo info = *detect_dual_cyclicity(p);
    const ShellOperators ops = shell_operators(p.l, p.spin);
    const FieldWaveform field = FieldWaveform::rotating(p.omega_B, p.omega, p.theta_B);
    const HamiltonianSampler h = charged_field_hamiltonian(field, ops, p.epsilon_nl);
    double gamma_err = 0.0;
    double eigen = 0.0;
    double mean_dev = 0.0;
    double overlap_err = 0.0;
    bool closed_all = true;
    for (double m : {1.0, 0.0, -1.0}) {
        for (double m_s : {0.5, -0.5}) {
            const ComplexVector psi0 = dual_axis_eigenstate(ops, f.orbital.axis, m, f.spin.axis, m_s);
            const DualPhaseReport closed = charged_phase_report(p, psi0, info);
            const SteppedPropagation prop = timestep_propagate(h, psi0, 1e-4 * p.period(), p.period());
            const DualAxisTrajectory axes =
                dual_axis_transport(field, f.orbital.axis, f.spin.axis, prop.times, m, m_s, p.epsilon_nl);
            const auto closure = check_dual_closure(axes);
            if (!closure) {
                closed_all = false;
                continue;
            }
            const DualGeometricPhase g = dual_geometric_phase(axes, *closure);
            gamma_err = std::max(gamma_err, phase_distance(g.gamma, closed.gamma));
            const DualEigenResiduals res = dual_eigen_residuals(ops, prop, axes);
            eigen = std::max({eigen, res.orbital, res.spin});
            mean_dev = std::max({mean_dev, res.u_deviation, res.v_deviation});
            const DualTotalPhaseCheck c = dual_total_phase_check(h, prop, axes, *closure);
            overlap_err = std::max(overlap_err, phase_distance(c.gamma_overlap, g.gamma));
        }
    }
    r.pass = closed_all && gamma_err < 1e-6 && eigen < 1e-5 && mean_dev < 1e-6;
    r.detail = "gamma vs closed form " + sci(gamma_err) + " (< 1e-6), eigen residuals " + sci(eigen) +
               " (< 1e-5), |u - m d|, |v - m_s e| " + sci(mean_dev) + " (< 1e-6); oracle delta-beta " +
               sci(overlap_err) + (closed_all ? "" : ", some axis did not close");
    return r;
}

CheckResult sweep_recovery() {
    CheckResult r{10, "sweep recovers the (1, 2) point", false, false, "", 0.0};
    io::SweepConfig c;
    c.charged = true;
    c.x_min = 0.5;
    c.x_max = 2.5;
    c.theta_min = 0.0;
    c.theta_max = pi;
    c.target_l = 1.0;
    c.target_s = 2.0;
    const auto points = io::sweep(c);
    const double x_star = std::sqrt(1.5);
    const double th_star = std::acos(std::sqrt(3.0) / (2.0 * std::sqrt(2.0)));
    double best = 1e300;
    for (const auto& pt : points) {
        best = std::min(best, std::max(std::abs(pt.omega_B_over_omega - x_star), std::abs(pt.theta_B - th_star)));
    }
    r.pass = best < 1e-6;
    r.detail = std::to_string(points.size()) + " point(s), closest at distance " + sci(best) + " (< 1e-6)";
    return r;
}

template <typename F>
CheckResult timed(F&& f, double limit) {
    const auto start = Clock::now();
    CheckResult r = f();
    r.seconds = seconds_since(start);
    if (limit > 0.0) {
        r.detail += ", runtime limit " + std::to_string(static_cast<int>(limit)) + " s";
        r.pass = r.pass && r.seconds < limit;
    }
    return r;
}

}  // namespace

std::vector<CheckResult> run_all(const Options& options, const Reporter& report) {
    std::vector<CheckResult> out;
    const auto add = [&](CheckResult r) {
        if (report) report(r);
        out.push_back(std::move(r));
    };
    // Each check draws from its own stream so that results do not depend on
    // which checks ran before.
    const auto rng_for = [&](int id) { return Rng(options.seed * 1000003ULL + static_cast<std::uint64_t>(id)); };

    Rng r1 = rng_for(1);
    add(timed([&] { return conjugation_identity(r1); }, 5.0));
    Rng r2 = rng_for(2);
    add(timed([&] { return propagator_exactness(r2); }, 30.0));
    add(timed([&] { return pythagorean_frame(); }, 0.0));
    Rng r4 = rng_for(4);
    add(timed([&] { return neutral_extra_term(r4); }, 0.0));
    Rng r5 = rng_for(5);
    const auto start = Clock::now();
    auto five = solid_angle_duality(r5);
    five[0].seconds = seconds_since(start);
    add(five[0]);
    add(five[1]);
    add(timed([&] { return general_transport(); }, 0.0));
    add(timed([&] { return charged_paper_point(); }, 0.0));
    Rng r8 = rng_for(8);
    const auto start8 = Clock::now();
    auto eight = charged_extra_terms(r8);
    eight[0].seconds = seconds_since(start8);
    add(eight[0]);
    add(eight[1]);
    add(timed([&] { return dual_transport(); }, 0.0));
    add(timed([&] { return sweep_recovery(); }, 60.0));
    return out;
}

std::string format(const CheckResult& r) {
    const char* tag = r.informational ? "INFO" : (r.pass ? "PASS" : "FAIL");
    char time[32];
    std::snprintf(time, sizeof time, " (%.2f s)", r.seconds);
    return std::string(tag) + " [" + std::to_string(r.id) + "] " + r.title + ": " + r.detail +
           (r.informational ? "" : time);
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const auto& r : results) {
        if (!r.informational && !r.pass) return false;
    }
    return true;
}

}  // namespace geophase::acceptance
