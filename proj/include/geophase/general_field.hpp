#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "geophase/oracle.hpp"
#include "geophase/spin_algebra.hpp"

namespace geophase {

// Field B(t) = B(t) n(t) described by a signed precession rate omega_B(t) and a
// unit direction n(t). The rate may change sign. Either an exact callable or
// dense samples (linear in the rate, spherical-linear in the direction).
class FieldWaveform {
public:
    using RateFunction = std::function<double(double)>;
    using DirectionFunction = std::function<Vec3(double)>;

    FieldWaveform(RateFunction rate, DirectionFunction direction);

    // Samples must be strictly increasing in time, with |n| = 1 to 1e-10 and
    // neighbouring directions less than 0.1 rad apart.
    static FieldWaveform from_samples(std::vector<double> times, std::vector<double> rates,
                                      std::vector<Vec3> directions);

    // Constant rate about n(t) = (sin thB cos wt, sin thB sin wt, cos thB).
    static FieldWaveform rotating(double rate, double omega, double theta_B);

    double rate(double t) const { return rate_(t); }
    Vec3 direction(double t) const { return direction_(t); }

    // Same field seen in a lab frame rotated by R (n -> R n).
    FieldWaveform rotated(const Mat3& r) const;

private:
    RateFunction rate_;
    DirectionFunction direction_;
};

// Evenly spaced grid 0, T/n, ..., T.
std::vector<double> uniform_grid(double T, std::size_t steps);

// A unit axis carried by de/dt = coupling * omega_B(t) n(t) x e. The neutral
// spin axis has coupling -1; the charged orbital and spin axes +1 and +2.
struct AxisTrajectory {
    std::vector<double> times;
    std::vector<Vec3> axis;       // e(t_k), lab frame
    std::vector<Vec3> velocity;   // de/dt at t_k, lab frame
    Mat3 frame = Mat3::Identity();  // rows: working-frame axes in lab coordinates
    bool frame_rotated = false;
    std::vector<double> theta;     // polar angle in the working frame
    std::vector<double> phi;       // azimuth in the working frame, unwrapped
    std::vector<double> phi_rate;  // d phi / dt from e and de/dt
    std::vector<double> alpha;     // accumulated phase; empty for bare transports
    double max_step_angle = 0.0;   // largest rotation angle of a single step
    bool step_too_coarse = false;  // max_step_angle > 0.1 rad
};

inline constexpr double pole_guard = 0.05;
inline constexpr double max_step_rotation = 0.1;

// RK4 on the grid with renormalization after each step. If the trace comes
// within sin(theta) < pole_guard of the lab poles, angles are taken in a
// working frame whose poles stay clear of it.
AxisTrajectory integrate_axis(const FieldWaveform& field, const UnitVector3& e0,
                              std::span<const double> grid, double coupling);

// Spin axis of a neutral particle in the eigenstate s.e0 = m_s, with the phase
//   d alpha/dt = m_s cos(theta_e) d phi_e/dt + omega_B v.n,  v = m_s e,
// accumulated by the trapezoidal rule.
AxisTrajectory transport_axis(const FieldWaveform& field, const UnitVector3& e0,
                              std::span<const double> grid, double m_s);

struct CyclicClosure {
    std::size_t index = 0;  // sample at which the axis returns
    double T = 0.0;
    int K = 0;              // turns of phi_e in the working frame
    double closure_error = 0.0;
};

inline constexpr double default_closure_tol = 1e-6;

// Closure at the last sample, or nothing if |e(T) - e(0)| >= tol.
std::optional<CyclicClosure> check_closure(const AxisTrajectory& axis,
                                           double tol = default_closure_tol);

// Earliest sample after t_min where |e - e0| has a local minimum below tol.
std::optional<CyclicClosure> scan_closure(const AxisTrajectory& axis, double t_min,
                                          double tol = default_closure_tol);

struct GeometricPhase {
    double gamma = 0.0;    // -m_s Omega_e, in (-pi, pi]
    double omega_e = 0.0;  // int (1 - cos theta_e) dphi_e, working frame
    std::optional<double> omega_v;  // trace of v = m_s e; empty for m_s = 0
    std::optional<double> gamma_v;  // -|m_s| Omega_v, in (-pi, pi]
};

// Throws NotCyclicError unless closure.closure_error < tol.
GeometricPhase cyclic_geometric_phase(const AxisTrajectory& axis, const CyclicClosure& closure,
                                      double m_s, double tol = default_closure_tol);

// Solid angle int (1 - cos theta) dphi over samples [0, end], trapezoidal.
double axis_solid_angle(const AxisTrajectory& axis, std::size_t end);

// -omega_B(t) s.n(t).
HamiltonianSampler neutral_hamiltonian(const FieldWaveform& field, const SpinOps& ops);

// Eigenstate of s.e0 with eigenvalue m_s.
ComplexVector axis_eigenstate(const SpinOps& ops, const UnitVector3& e0, double m_s);

// max_k || (s.e(t_k)) psi_k - m_s psi_k || over the propagated column.
double eigen_residual(const SpinOps& ops, const SteppedPropagation& propagation,
                      const AxisTrajectory& axis, double m_s, Eigen::Index column = 0);

// max_k || <s>(t_k) - m_s e(t_k) ||.
double mean_spin_deviation(const SpinOps& ops, const SteppedPropagation& propagation,
                           const AxisTrajectory& axis, double m_s, Eigen::Index column = 0);

struct TotalPhaseCheck {
    double delta_alpha = 0.0;    // alpha(T) - alpha(0) - 2 pi m_s K, in (-pi, pi]
    double delta_overlap = 0.0;  // arg <psi(0)|psi(T)>
    double beta = 0.0;           // int omega_B <s>.n dt with <s> from the propagated state
    double gamma = 0.0;          // delta_alpha - beta, in (-pi, pi]
    double gamma_overlap = 0.0;  // delta_overlap - beta, in (-pi, pi]
};

// Needs `axis` from transport_axis on the propagation's time grid.
TotalPhaseCheck total_phase_check(const FieldWaveform& field, const SpinOps& ops,
                                  const SteppedPropagation& propagation,
                                  const AxisTrajectory& axis, const CyclicClosure& closure,
                                  double m_s, Eigen::Index column = 0);

// e0 = 2 <psi|s|psi> for a spin-1/2 state; psi is then the m_s = 1/2 eigenstate of s.e0.
UnitVector3 axis_from_spin_half_state(const ComplexVector& psi);

// Axis that returns to itself after one period T of a periodic field: the
// rotation-invariant direction of the one-period transport map (computed with
// RK4 on `steps` steps). The sign is chosen to have non-negative overlap with hint.
UnitVector3 periodic_fixed_axis(const FieldWaveform& field, double T, std::size_t steps,
                                double coupling, const Vec3& hint = Vec3::UnitZ());

}  // namespace geophase
