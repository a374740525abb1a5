#include <doctest.h>

#include "geophase/general_field.hpp"
#include "geophase/neutral_rotating.hpp"
#include "support.hpp"

using namespace geophase;
using geophase::testing::Rng;

namespace {

RotatingFieldParams pythagorean(SpinQuantum spin, int mu_sign = 1) {
    return RotatingFieldParams{3.0, 4.0, pi / 2.0, mu_sign, spin};
}

FieldWaveform as_waveform(const RotatingFieldParams& p) {
    return FieldWaveform::rotating(p.mu_sign * p.omega_B, p.omega, p.theta_B);
}

// Smooth periodic field whose rate changes sign: omega_B(t) = A cos(w t) about a
// cone rotating at w.
FieldWaveform sign_flipping_field(double amplitude, double omega, double theta) {
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    return FieldWaveform([=](double t) { return amplitude * std::cos(omega * t); },
                         [=](double t) { return Vec3(st * std::cos(omega * t), st * std::sin(omega * t), ct); });
}

// Random smooth loop of period 2 pi / w.
FieldWaveform random_loop(Rng& rng, double omega) {
    const double a0 = geophase::testing::uniform(rng, -1.5, 1.5);
    const double a1 = geophase::testing::uniform(rng, 0.3, 1.5);
    const double phase = geophase::testing::uniform(rng, 0.0, two_pi);
    const Vec3 c0 = geophase::testing::random_unit(rng);
    const Vec3 c1 = 0.8 * geophase::testing::random_unit(rng);
    const Vec3 c2 = 0.8 * geophase::testing::random_unit(rng);
    return FieldWaveform([=](double t) { return a0 + a1 * std::cos(omega * t + phase); },
                         [=](double t) {
                             return Vec3(c0 + c1 * std::cos(omega * t) + c2 * std::sin(2.0 * omega * t)).normalized();
                         });
}

struct OracleRun {
    SteppedPropagation propagation;
    AxisTrajectory axis;
};

OracleRun run_with_oracle(const FieldWaveform& field, const SpinOps& ops, const UnitVector3& e0, double m_s,
                          double T, double dt) {
    const ComplexVector psi0 = axis_eigenstate(ops, e0, m_s);
    SteppedPropagation prop = timestep_propagate(neutral_hamiltonian(field, ops), psi0, dt, T);
    AxisTrajectory axis = transport_axis(field, e0, prop.times, m_s);
    return {std::move(prop), std::move(axis)};
}

}  // namespace

TEST_CASE("constant field precesses the axis") {
    const double w = 1.3;
    const FieldWaveform field([w](double) { return w; }, [](double) { return Vec3::UnitZ(); });
    const auto grid = uniform_grid(5.0, 5000);
    const AxisTrajectory a = integrate_axis(field, unit_x, grid, -1.0);
    for (std::size_t k = 0; k < grid.size(); k += 50) {
        const double t = grid[k];
        CHECK((a.axis[k] - Vec3(std::cos(w * t), -std::sin(w * t), 0.0)).norm() < 1e-10);
    }
    CHECK_FALSE(a.step_too_coarse);
    CHECK_FALSE(a.frame_rotated);
    const AxisTrajectory coarse = integrate_axis(field, unit_x, uniform_grid(5.0, 20), -1.0);
    CHECK(coarse.step_too_coarse);
}

TEST_CASE("rotating field as a waveform follows the special solution") {
    for (int mu : {1, -1}) {
        const RotatingFieldParams p = pythagorean(SpinQuantum(3), mu);
        const EffectiveFrame f = effective_frame(p);
        const auto grid = uniform_grid(p.period(), 4000);
        const AxisTrajectory a = integrate_axis(as_waveform(p), f.axis, grid, -1.0);
        const Trajectory closed = mean_spin_trajectory(p, Vec3(1.5 * f.axis.vec()), grid);
        for (std::size_t k = 0; k < grid.size(); ++k) CHECK((a.axis[k] - closed.vectors[k] / 1.5).norm() < 1e-8);
    }
}

TEST_CASE("axis norm survives long integrations") {
    Rng rng(1);
    const FieldWaveform field = random_loop(rng, 1.0);
    const AxisTrajectory a = integrate_axis(field, UnitVector3::normalized(Vec3(1, 2, 3)), uniform_grid(100.0, 100000), 1.0);
    double drift = 0.0;
    for (const Vec3& e : a.axis) drift = std::max(drift, std::abs(e.norm() - 1.0));
    CHECK(drift < 1e-9);
}

TEST_CASE("sampled waveform interpolation") {
    std::vector<double> t, w;
    std::vector<Vec3> n;
    for (int k = 0; k <= 100; ++k) {
        const double x = 0.01 * k;
        t.push_back(x);
        w.push_back(2.0 * x);
        n.push_back(Vec3(std::cos(x), std::sin(x), 0.0));
    }
    const FieldWaveform field = FieldWaveform::from_samples(t, w, n);
    CHECK(field.rate(0.555) == doctest::Approx(1.11));
    CHECK((field.direction(0.555) - Vec3(std::cos(0.555), std::sin(0.555), 0.0)).norm() < 1e-12);
    CHECK_THROWS_AS(field.rate(1.5), std::out_of_range);

    auto bad_n = n;
    bad_n[3] *= 1.01;
    CHECK_THROWS_AS(FieldWaveform::from_samples(t, w, bad_n), std::invalid_argument);
    auto bad_t = t;
    bad_t[5] = bad_t[4];
    CHECK_THROWS_AS(FieldWaveform::from_samples(bad_t, w, n), std::invalid_argument);
    auto jump = n;
    jump[50] = Vec3(0.0, 0.0, 1.0);
    CHECK_THROWS_AS(FieldWaveform::from_samples(t, w, jump), std::invalid_argument);
}

TEST_CASE("eigenvalue equation holds along the propagated state") {
    const RotatingFieldParams p = pythagorean(SpinQuantum(3));
    const SpinOps ops = spin_operators(p.spin);
    const UnitVector3 e0 = effective_frame(p).axis;
    const OracleRun run = run_with_oracle(as_waveform(p), ops, e0, 0.5, p.period(), 1e-4 * p.period());
    const ComplexVector psi0 = run.propagation.state(0);
    CHECK((ops.dot(e0) * psi0 - 0.5 * psi0).norm() < 1e-12);
    CHECK(eigen_residual(ops, run.propagation, run.axis, 0.5) < 1e-6);
    CHECK(mean_spin_deviation(ops, run.propagation, run.axis, 0.5) < 1e-6);
}

TEST_CASE("sign-flipping field keeps the eigenvalue equation") {
    const double omega = 1.0;
    const double T = two_pi / omega;
    const FieldWaveform field = sign_flipping_field(2.2, omega, 0.9);
    const SpinOps ops = spin_operators(SpinQuantum(2));
    const UnitVector3 e0 = periodic_fixed_axis(field, T, 20000, -1.0);
    const OracleRun run = run_with_oracle(field, ops, e0, 1.0, T, 1e-4 * T);
    CHECK(eigen_residual(ops, run.propagation, run.axis, 1.0) < 1e-5);
    const auto closure = check_closure(run.axis);
    REQUIRE(closure);
    const GeometricPhase g = cyclic_geometric_phase(run.axis, *closure, 1.0);
    const TotalPhaseCheck c = total_phase_check(field, ops, run.propagation, run.axis, *closure, 1.0);
    CHECK(phase_distance(c.gamma, g.gamma) < 1e-5);
    CHECK(phase_distance(c.gamma_overlap, g.gamma) < 1e-5);
    CHECK(phase_distance(c.delta_alpha, c.delta_overlap) < 1e-5);
}

TEST_CASE("solid angle of a circular axis trace") {
    const double theta = 0.7;
    const double w = 2.0;
    // Field along z with rate -w carries e around z counter-clockwise.
    const FieldWaveform field([w](double) { return -w; }, [](double) { return Vec3::UnitZ(); });
    const auto grid = uniform_grid(two_pi / w, 2000);
    const AxisTrajectory a = integrate_axis(field, UnitVector3::from_angles(theta, 0.3), grid, -1.0);
    const auto closure = check_closure(a);
    REQUIRE(closure);
    CHECK(closure->K == 1);
    const GeometricPhase g = cyclic_geometric_phase(a, *closure, 1.0);
    CHECK(g.omega_e == doctest::Approx(two_pi * (1.0 - std::cos(theta))).epsilon(1e-9));

    const GeometricPhase zero = cyclic_geometric_phase(a, *closure, 0.0);
    CHECK(zero.gamma == 0.0);
    CHECK_FALSE(zero.omega_v.has_value());
    CHECK_FALSE(zero.gamma_v.has_value());

    const GeometricPhase neg = cyclic_geometric_phase(a, *closure, -1.0);
    CHECK(phase_distance(*neg.gamma_v, neg.gamma) < 1e-12);
    CHECK(*neg.omega_v == doctest::Approx(two_pi * (1.0 + std::cos(theta))).epsilon(1e-9));

    CyclicClosure open = *closure;
    open.closure_error = 1e-3;
    CHECK_THROWS_AS(cyclic_geometric_phase(a, open, 1.0), NotCyclicError);
}

TEST_CASE("closure scan finds the first return") {
    const double w = 2.0;
    const FieldWaveform field([w](double) { return -w; }, [](double) { return Vec3::UnitZ(); });
    const auto grid = uniform_grid(3.0 * two_pi / w, 3000);
    const AxisTrajectory a = integrate_axis(field, UnitVector3::from_angles(1.0, 0.0), grid, -1.0);
    const auto c = scan_closure(a, 0.1);
    REQUIRE(c);
    CHECK(c->index == 1000);
    CHECK(c->K == 1);
    CHECK_FALSE(check_closure(integrate_axis(field, unit_x, uniform_grid(1.0, 100), -1.0)).has_value());
}

TEST_CASE("rotating-field phases match the closed form") {
    for (int two_s : {1, 2, 3}) {
        for (int mu : {1, -1}) {
            const RotatingFieldParams p = pythagorean(SpinQuantum(two_s), mu);
            const SpinOps ops = spin_operators(p.spin);
            const CyclicInfo info = *detect_cyclicity(p);
            const UnitVector3 e0 = effective_frame(p).axis;
            for (int k = 0; k < p.spin.dim(); ++k) {
                const double m_s = p.spin.m_at(k);
                const PhaseReport closed = phase_report(p, axis_eigenstate(ops, e0, m_s), info);
                // The axis of the special solution closes after one field period.
                const AxisTrajectory a = transport_axis(as_waveform(p), e0, uniform_grid(p.period(), 4000), m_s);
                const auto closure = check_closure(a);
                REQUIRE(closure);
                const GeometricPhase g = cyclic_geometric_phase(a, *closure, m_s);
                CHECK(phase_distance(info.K * g.gamma, closed.gamma) < 1e-6);
            }
        }
    }
}

TEST_CASE("total phase split against the closed form") {
    const RotatingFieldParams p = pythagorean(SpinQuantum(2));
    const SpinOps ops = spin_operators(p.spin);
    const CyclicInfo info = *detect_cyclicity(p);
    const UnitVector3 e0 = effective_frame(p).axis;
    const double m_s = 1.0;
    const PhaseReport closed = phase_report(p, axis_eigenstate(ops, e0, m_s), info);
    const OracleRun run = run_with_oracle(as_waveform(p), ops, e0, m_s, info.T, 1e-4 * p.period());
    const auto closure = check_closure(run.axis);
    REQUIRE(closure);
    const TotalPhaseCheck c = total_phase_check(as_waveform(p), ops, run.propagation, run.axis, *closure, m_s);
    CHECK(phase_distance(c.delta_alpha, closed.delta) < 1e-6);
    CHECK(c.beta == doctest::Approx(closed.beta).epsilon(1e-6));
    CHECK(phase_distance(c.gamma, closed.gamma) < 1e-6);
}

TEST_CASE("static axis has no geometric phase") {
    const FieldWaveform field([](double) { return 0.8; }, [](double) { return Vec3::UnitZ(); });
    const SpinOps ops = spin_operators(SpinQuantum(2));
    const OracleRun run = run_with_oracle(field, ops, unit_z, 1.0, 3.0, 1e-3);
    CHECK(run.axis.frame_rotated);  // the axis sits on the lab pole
    const auto closure = check_closure(run.axis);
    REQUIRE(closure);
    const TotalPhaseCheck c = total_phase_check(field, ops, run.propagation, run.axis, *closure, 1.0);
    CHECK(std::abs(c.gamma) < 1e-9);
    CHECK(std::abs(cyclic_geometric_phase(run.axis, *closure, 1.0).gamma) < 1e-9);
}

TEST_CASE("random closed loops: delta - beta equals -m_s Omega_e") {
    Rng rng(21);
    for (int trial = 0; trial < 4; ++trial) {
        const double omega = 1.0;
        const double T = two_pi / omega;
        const FieldWaveform field = random_loop(rng, omega);
        const SpinQuantum spin(1 + trial % 3);
        const SpinOps ops = spin_operators(spin);
        const double m_s = spin.m_at(trial % spin.dim());
        const UnitVector3 e0 = periodic_fixed_axis(field, T, 20000, -1.0, geophase::testing::random_unit(rng));
        const OracleRun run = run_with_oracle(field, ops, e0, m_s, T, 2e-4 * T);
        const auto closure = check_closure(run.axis);
        REQUIRE(closure);
        const GeometricPhase g = cyclic_geometric_phase(run.axis, *closure, m_s);
        const TotalPhaseCheck c = total_phase_check(field, ops, run.propagation, run.axis, *closure, m_s);
        CHECK(phase_distance(c.gamma_overlap, g.gamma) < 1e-5);
        CHECK(phase_distance(c.gamma, g.gamma) < 1e-5);
        if (g.gamma_v) CHECK(phase_distance(*g.gamma_v, g.gamma) < 1e-9);
        CHECK(mean_spin_deviation(ops, run.propagation, run.axis, m_s) < 1e-6);
    }
}

TEST_CASE("gamma is stable under grid refinement and lab rotation") {
    Rng rng(22);
    const double T = two_pi;
    const FieldWaveform field = random_loop(rng, 1.0);
    const UnitVector3 e0 = periodic_fixed_axis(field, T, 20000, -1.0);
    const double m_s = 1.5;
    auto gamma_on = [&](const FieldWaveform& f, const UnitVector3& start, std::size_t steps) {
        const AxisTrajectory a = transport_axis(f, start, uniform_grid(T, steps), m_s);
        return cyclic_geometric_phase(a, *check_closure(a), m_s).gamma;
    };
    const double coarse = gamma_on(field, e0, 20000);
    CHECK(phase_distance(coarse, gamma_on(field, e0, 40000)) < 1e-6);

    const Mat3 r = axis_rotation(Vec3(0.3, -1.0, 0.4), 1.1);
    CHECK(phase_distance(coarse, gamma_on(field.rotated(r), UnitVector3::normalized(r * e0.vec()), 20000)) < 1e-6);
}

TEST_CASE("spin one half: any state is an axis eigenstate") {
    Rng rng(23);
    const SpinOps ops = spin_operators(SpinQuantum(1));
    for (int trial = 0; trial < 20; ++trial) {
        const ComplexVector psi = geophase::testing::random_state(rng, 2);
        const UnitVector3 e0 = axis_from_spin_half_state(psi);
        CHECK((ops.dot(e0) * psi - 0.5 * psi).norm() < 1e-10);
    }
    CHECK_THROWS(axis_from_spin_half_state(ComplexVector::Zero(3)));
}
