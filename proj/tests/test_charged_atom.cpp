#include <doctest.h>

#include "geophase/charged_atom.hpp"
#include "support.hpp"

using namespace geophase;
using geophase::testing::Rng;
using geophase::testing::random_state;

namespace {

ChargedParams paper_point(SpinQuantum spin = SpinQuantum(1), int l = 1, double epsilon_nl = 0.0) {
    ChargedParams p;
    p.omega = 1.0;
    p.omega_B = std::sqrt(1.5);
    p.theta_B = std::acos(std::sqrt(3.0) / (2.0 * std::sqrt(2.0)));
    p.l = l;
    p.spin = spin;
    p.epsilon_nl = epsilon_nl;
    return p;
}

HamiltonianSampler sampler_for(const ChargedParams& p) {
    const ShellOperators ops = shell_operators(p.l, p.spin);
    return [p, ops](double t) { return charged_hamiltonian(p, ops, t); };
}

const ShellEigenstate& find_state(const std::vector<ShellEigenstate>& states, double m, double m_s) {
    for (const auto& s : states) {
        if (s.m == m && s.m_s == m_s) return s;
    }
    throw std::logic_error("no such eigenstate");
}

}  // namespace

TEST_CASE("dual frames at the worked parameter point") {
    const DualFrame f = dual_frames(paper_point());
    CHECK(std::abs(f.orbital.rate - 1.0) < 1e-12);
    CHECK(std::abs(f.spin.rate - 2.0) < 1e-12);
    CHECK(f.orbital.cos_theta == doctest::Approx(-0.25).epsilon(1e-12));
    CHECK(f.spin.cos_theta == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::abs(f.orbital.sin_theta * f.orbital.sin_theta + f.orbital.cos_theta * f.orbital.cos_theta - 1) < 1e-12);
    CHECK(std::abs(f.spin.sin_theta * f.spin.sin_theta + f.spin.cos_theta * f.spin.cos_theta - 1) < 1e-12);

    ChargedParams collinear;
    collinear.omega_B = 1.0;
    collinear.omega = 1.0;
    collinear.theta_B = 0.0;
    const DualFrame c = dual_frames(collinear);
    CHECK(c.orbital.degenerate);
    CHECK(c.spin.rate == doctest::Approx(1.0));
    CHECK_FALSE(detect_dual_cyclicity(collinear).has_value());

    ChargedParams bad = paper_point();
    bad.l = -1;
    CHECK_THROWS_AS(dual_frames(bad), std::invalid_argument);
}

TEST_CASE("shell operators act on separate factors") {
    const ShellOperators ops = shell_operators(1, SpinQuantum(1));
    CHECK(ops.dim() == 6);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) CHECK((ops.L[i] * ops.S[j] - ops.S[j] * ops.L[i]).norm() < 1e-14);
    }
    // Orbital index outer: |m = 1, m_s = -1/2> is the second basis vector.
    const ComplexVector basis = ComplexMatrix::Identity(6, 6).col(1);
    const auto [u, v] = shell_expectations(ops, basis);
    CHECK(u.z() == doctest::Approx(1.0));
    CHECK(v.z() == doctest::Approx(-0.5));
}

TEST_CASE("charged propagator") {
    Rng rng(31);
    const ChargedParams p = paper_point();
    CHECK((charged_evolution(p, 0.0) - ComplexMatrix::Identity(6, 6)).norm() < 1e-13);
    const ComplexMatrix u = charged_evolution(p, 2.3);
    CHECK((u.adjoint() * u - ComplexMatrix::Identity(6, 6)).norm() < 1e-12);

    for (int trial = 0; trial < 2; ++trial) {
        ChargedParams q;
        q.omega = 1.0;
        q.omega_B = geophase::testing::uniform(rng, 0.3, 2.0);
        q.theta_B = geophase::testing::uniform(rng, 0.1, pi - 0.1);
        q.l = 1;
        q.spin = SpinQuantum(1 + trial);
        q.epsilon_nl = geophase::testing::uniform(rng, -1.0, 1.0);
        const double tau = q.period();
        const ComplexMatrix oracle = timestep_propagator(sampler_for(q), q.dim(), 1e-4 * tau, tau);
        CHECK((charged_evolution(q, tau) - oracle).operatorNorm() < 1e-6);
    }
}

TEST_CASE("effective eigenstates and their energies") {
    const ChargedParams p = paper_point(SpinQuantum(1), 1, 0.3);
    const DualFrame f = dual_frames(p);
    const ShellOperators ops = shell_operators(p.l, p.spin);
    const ComplexMatrix h = effective_hamiltonian(p, ops, f);
    const auto states = effective_eigenstates(p, f);
    REQUIRE(states.size() == 6);
    ComplexMatrix columns(6, 6);
    std::vector<double> energies;
    for (std::size_t k = 0; k < states.size(); ++k) {
        columns.col(static_cast<Eigen::Index>(k)) = states[k].state;
        CHECK((h * states[k].state - states[k].energy * states[k].state).norm() < 1e-10);
        energies.push_back(states[k].energy);
    }
    CHECK((columns.adjoint() * columns - ComplexMatrix::Identity(6, 6)).norm() < 1e-12);
    CHECK(find_state(states, 1.0, 0.5).energy == doctest::Approx(0.3 + 2.0).epsilon(1e-12));

    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    std::sort(energies.begin(), energies.end());
    for (int k = 0; k < 6; ++k) CHECK(es.eigenvalues()(k) == doctest::Approx(energies[k]).epsilon(1e-10));

    // Untilted frames give the standard basis.
    ChargedParams flat = p;
    flat.theta_B = 0.0;
    flat.omega_B = 3.0;
    const auto plain = effective_eigenstates(flat, dual_frames(flat));
    for (int k = 0; k < 6; ++k) CHECK((plain[k].state - ComplexMatrix::Identity(6, 6).col(k)).norm() < 1e-12);
}

TEST_CASE("combined cyclicity uses the least common multiple") {
    const auto info = detect_dual_cyclicity(paper_point());
    REQUIRE(info);
    CHECK(info->K == 1);
    CHECK(info->K_L == 1);
    CHECK(info->K_S == 2);

    // Antiparallel field: omega_L = omega_B + omega and omega_S = 2 omega_B + omega.
    ChargedParams q;
    q.omega = 1.0;
    q.theta_B = pi;
    q.omega_B = 0.5;  // omega_L = 3/2, omega_S = 2
    auto qi = detect_dual_cyclicity(q);
    REQUIRE(qi);
    CHECK(qi->K == 2);
    CHECK(qi->K_L == 3);
    CHECK(qi->K_S == 4);
    q.omega_B = 1.0 / 3.0;  // omega_L = 4/3, omega_S = 5/3
    qi = detect_dual_cyclicity(q);
    REQUIRE(qi);
    CHECK(qi->K == 3);
    CHECK(qi->K_L == 4);
    CHECK(qi->K_S == 5);
}

TEST_CASE("eigenstate phase at the worked point") {
    const ChargedParams p = paper_point();
    const DualCyclicInfo info = *detect_dual_cyclicity(p);
    const auto states = effective_eigenstates(p, dual_frames(p));
    const ComplexVector psi = find_state(states, 1.0, 0.5).state;
    const DualPhaseReport r = charged_phase_report(p, psi, info);
    CHECK(phase_distance(r.gamma, 0.75 * pi) < 1e-9);
    CHECK(phase_distance(r.gamma, -2.5 * pi - 0.75 * pi) < 1e-9);
    CHECK(*r.omega_u == doctest::Approx(2.5 * pi).epsilon(1e-12));
    CHECK(*r.omega_v == doctest::Approx(1.5 * pi).epsilon(1e-12));

    const HamiltonianSampler h = sampler_for(p);
    const SteppedPropagation prop = timestep_propagate(h, psi, 1e-4 * p.period(), info.T);
    const PhaseDecomposition d = phase_decompose(prop, h);
    REQUIRE(d.gamma);
    CHECK(phase_distance(*d.gamma, 0.75 * pi) < 1e-6);
}

TEST_CASE("eigenstates reduce to the solid-angle law") {
    for (int two_s : {1, 2}) {
        for (double eps : {0.0, 0.37}) {
            const ChargedParams p = paper_point(SpinQuantum(two_s), 1, eps);
            const DualFrame f = dual_frames(p);
            const DualCyclicInfo info = *detect_dual_cyclicity(p);
            const double cap_l = two_pi * (1.0 - f.orbital.cos_theta);
            const double cap_s = two_pi * (1.0 - f.spin.cos_theta);
            for (const auto& e : effective_eigenstates(p, f)) {
                const DualPhaseReport r = charged_phase_report(p, e.state, info);
                CHECK(phase_distance(r.gamma, -e.m * cap_l * info.K - e.m_s * cap_s * info.K) < 1e-9);
                CHECK(r.residual_82 < 1e-9);
                const double u_term = r.omega_u ? -std::abs(e.m) * *r.omega_u : 0.0;
                const double v_term = r.omega_v ? -std::abs(e.m_s) * *r.omega_v : 0.0;
                CHECK(phase_distance(r.gamma, u_term + v_term) < 1e-9);
                CHECK(phase_distance(r.gamma, r.delta - r.beta) < 1e-12);
            }
        }
    }
}

TEST_CASE("total phase is shared by every shell state") {
    Rng rng(32);
    const ChargedParams p = paper_point(SpinQuantum(1), 2, 0.9);
    const DualCyclicInfo info = *detect_dual_cyclicity(p);
    const double reference = charged_phase_report(p, random_state(rng, p.dim()), info).delta;
    for (int trial = 0; trial < 10; ++trial) {
        const DualPhaseReport r = charged_phase_report(p, random_state(rng, p.dim()), info);
        CHECK(phase_distance(r.delta_overlap, reference) < 1e-9);
    }
}

TEST_CASE("mean trajectories follow the closed form") {
    Rng rng(33);
    const ChargedParams p = paper_point(SpinQuantum(2));
    const ShellOperators ops = shell_operators(p.l, p.spin);
    const ComplexVector psi = random_state(rng, p.dim());
    const auto [u0, v0] = shell_expectations(ops, psi);
    const auto grid = uniform_grid(p.period(), 200);
    const DualTrajectory tr = charged_mean_trajectory(p, u0, v0, grid);
    const HamiltonianSampler h = sampler_for(p);
    const SteppedPropagation prop = timestep_propagate(h, psi, 1e-4 * p.period(), p.period());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto [u, v] = shell_expectations(ops, prop.states[k * 50].col(0));
        CHECK((tr.u[k] - u).norm() < 1e-6);
        CHECK((tr.v[k] - v).norm() < 1e-6);
        CHECK(std::abs(tr.u[k].norm() - u0.norm()) < 1e-12);
    }
}

TEST_CASE("extra-term relations for shell superpositions") {
    Rng rng(34);
    {
        const ChargedParams p = paper_point(SpinQuantum(1));
        const DualCyclicInfo info = *detect_dual_cyclicity(p);
        const HamiltonianSampler h = sampler_for(p);
        for (int trial = 0; trial < 3; ++trial) {
            const ComplexVector psi = random_state(rng, p.dim());
            const DualPhaseReport r = charged_phase_report(p, psi, info);
            REQUIRE(r.residual_83);
            CHECK(r.residual_82 < 1e-9);
            const SteppedPropagation prop = timestep_propagate(h, psi, 1e-4 * p.period(), info.T);
            DualPhaseReport from_oracle = r;
            from_oracle.gamma = *phase_decompose(prop, h).gamma;
            CHECK(relation_residual_82_83(from_oracle, p).res82 < 1e-6);
        }
    }
    {
        const ChargedParams p = paper_point(SpinQuantum(2));
        const DualCyclicInfo info = *detect_dual_cyclicity(p);
        int naive_failures = 0;
        for (int trial = 0; trial < 10; ++trial) {
            const DualPhaseReport r = charged_phase_report(p, random_state(rng, p.dim()), info);
            CHECK(r.residual_82 < 1e-9);
            CHECK_FALSE(r.residual_83.has_value());
            if (solid_angle_only_residual(r) > 1e-3) ++naive_failures;
        }
        CHECK(naive_failures > 0);
    }
}

TEST_CASE("product states of a spin one half keep |v0| = 1/2") {
    Rng rng(35);
    const ChargedParams p = paper_point(SpinQuantum(1));
    const DualCyclicInfo info = *detect_dual_cyclicity(p);
    for (int trial = 0; trial < 20; ++trial) {
        const ComplexVector psi = product_state(random_state(rng, 3), random_state(rng, 2));
        const DualPhaseReport r = charged_phase_report(p, psi, info);
        CHECK(std::abs(r.v0_norm - 0.5) < 1e-12);
        CHECK(std::abs(r.residual_82 - *r.residual_83) < 1e-9);
        CHECK(*r.residual_83 < 1e-9);
    }
}

TEST_CASE("closed-form solid angles against quadrature") {
    Rng rng(36);
    const ChargedParams p = paper_point(SpinQuantum(2));
    const DualFrame f = dual_frames(p);
    const DualCyclicInfo info = *detect_dual_cyclicity(p);
    const ShellOperators ops = shell_operators(p.l, p.spin);
    int compared = 0;
    for (int trial = 0; trial < 12; ++trial) {
        const ComplexVector psi = random_state(rng, p.dim());
        const auto [u0, v0] = shell_expectations(ops, psi);
        const auto grid = uniform_grid(info.T, 20000);
        const DualTrajectory tr = charged_mean_trajectory(p, u0, v0, grid);
        const SolidAnglePair closed = charged_solid_angles(f, u0, v0, info);
        try {
            const double qu = solid_angle_quadrature(tr.times, tr.u).value;
            const double qv = solid_angle_quadrature(tr.times, tr.v).value;
            CHECK(solid_angle_distance(qu, *closed.omega_u) < 1e-6);
            CHECK(solid_angle_distance(qv, *closed.omega_v) < 1e-6);
            // Unreduced, the lab-axis branch differs by whole turns of 4 pi.
            const SolidAnglePair offset = charged_lab_branch_offsets(f, u0, v0, info);
            CHECK(std::abs(qu - *closed.omega_u - *offset.omega_u) < 1e-6);
            CHECK(std::abs(qv - *closed.omega_v - *offset.omega_v) < 1e-6);
            ++compared;
        } catch (const Error&) {
        }
    }
    CHECK(compared > 6);

    // Eigenstate traces: single circles with K windings.
    const auto states = effective_eigenstates(p, f);
    const ComplexVector psi = find_state(states, 1.0, 0.0).state;
    const auto [u0, v0] = shell_expectations(ops, psi);
    const SolidAnglePair closed = charged_solid_angles(f, u0, v0, info);
    CHECK(*closed.omega_u == doctest::Approx(info.K * two_pi * (1.0 - f.orbital.cos_theta)).epsilon(1e-12));
    CHECK_FALSE(closed.omega_v.has_value());
}

TEST_CASE("dual transport in the rotating field") {
    const ChargedParams p = paper_point();
    const DualFrame f = dual_frames(p);
    const ShellOperators ops = shell_operators(p.l, p.spin);
    const DualCyclicInfo info = *detect_dual_cyclicity(p);
    const FieldWaveform field = FieldWaveform::rotating(p.omega_B, p.omega, p.theta_B);
    const HamiltonianSampler h = charged_field_hamiltonian(field, ops, p.epsilon_nl);
    for (double m : {1.0, 0.0, -1.0}) {
        for (double m_s : {0.5, -0.5}) {
            const ComplexVector psi0 = dual_axis_eigenstate(ops, f.orbital.axis, m, f.spin.axis, m_s);
            const DualPhaseReport closed = charged_phase_report(p, psi0, info);
            const SteppedPropagation prop = timestep_propagate(h, psi0, 1e-4 * p.period(), p.period());
            const DualAxisTrajectory axes = dual_axis_transport(field, f.orbital.axis, f.spin.axis, prop.times, m, m_s);
            const auto closure = check_dual_closure(axes);
            REQUIRE(closure);
            const DualGeometricPhase g = dual_geometric_phase(axes, *closure);
            CHECK(phase_distance(g.gamma, closed.gamma) < 1e-6);
            CHECK(phase_distance(g.gamma_uv, g.gamma) < 1e-9);
            const DualEigenResiduals res = dual_eigen_residuals(ops, prop, axes);
            CHECK(res.orbital < 1e-5);
            CHECK(res.spin < 1e-5);
            CHECK(res.casimir < 1e-10);
            CHECK(res.u_deviation < 1e-6);
            CHECK(res.v_deviation < 1e-6);
            const DualTotalPhaseCheck c = dual_total_phase_check(h, prop, axes, *closure);
            CHECK(phase_distance(c.delta_alpha, c.delta_overlap) < 1e-6);
            CHECK(phase_distance(c.gamma, g.gamma) < 1e-6);
        }
    }
}

TEST_CASE("constant field: both axes precess about z") {
    const double w = 0.7;
    const FieldWaveform field([w](double) { return w; }, [](double) { return Vec3::UnitZ(); });
    const auto grid = uniform_grid(2.0, 2000);
    const UnitVector3 tilted = UnitVector3::from_angles(0.8, 0.0);
    const DualAxisTrajectory axes = dual_axis_transport(field, tilted, tilted, grid, 1.0, 0.5);
    const double t = grid.back();
    CHECK(axes.orbital.axis.back().isApprox(Vec3(axis_rotation(Vec3::UnitZ(), w * t) * tilted.vec()), 1e-10));
    CHECK(axes.spin.axis.back().isApprox(Vec3(axis_rotation(Vec3::UnitZ(), 2.0 * w * t) * tilted.vec()), 1e-10));

    const DualAxisTrajectory polar = dual_axis_transport(field, unit_z, unit_z, grid, 1.0, 0.5);
    const auto closure = check_dual_closure(polar);
    REQUIRE(closure);
    CHECK(std::abs(dual_geometric_phase(polar, *closure).gamma) < 1e-12);
}
