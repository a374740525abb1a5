#pragma once

#include <optional>
#include <span>
#include <vector>

#include "geophase/spin_algebra.hpp"

namespace geophase {

// Neutral spin-s particle with moment mu = mu s / s in the field
// B n(t), n(t) = (sin thB cos wt, sin thB sin wt, cos thB). hbar = 1.
struct RotatingFieldParams {
    double omega_B = 1.0;  // |mu| B / s, > 0
    double omega = 1.0;    // rotation rate, > 0
    double theta_B = 0.0;  // cone angle in [0, pi]
    int mu_sign = 1;       // sign of mu
    SpinQuantum spin{1};

    void validate() const;
    Vec3 field_direction(double t) const;
    double period() const { return two_pi / omega; }
};

// Tilted precession axis and rate of a time-independent effective Hamiltonian.
struct PrecessionFrame {
    double rate = 0.0;
    double sin_theta = 0.0;
    double cos_theta = 1.0;
    double theta = 0.0;
    UnitVector3 axis;  // in the x-z plane
    bool degenerate = false;
};

using EffectiveFrame = PrecessionFrame;

// omega_S, theta_S and n_S of the co-rotating frame. When omega_S collapses
// (antiparallel cancellation) the axis falls back to z and `degenerate` is set.
EffectiveFrame effective_frame(const RotatingFieldParams& p);

// Right-handed triple (e_x, e_y, e_z = n_S) adapted to an initial mean spin v0.
// For v0 parallel to n_S the transverse pair is a fixed completion.
struct PrecessionBasis {
    Vec3 ex, ey, ez;
    double v_parallel = 0.0;
    double v_perp = 0.0;
};

PrecessionBasis precession_basis(const EffectiveFrame& frame, const Vec3& v0);

// H(t) = -eps(mu) omega_B s.n(t).
ComplexMatrix rotating_hamiltonian(const RotatingFieldParams& p, const SpinOps& ops, double t);

// U(t, t0) = exp(-i w t s_z) exp(i eps omega_S (t - t0) s.n_S) exp(i w t0 s_z).
ComplexMatrix evolution_operator(const RotatingFieldParams& p, double t, double t0 = 0.0);

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec3> vectors;    // v(t) = <s>(t)
    std::vector<Vec3> g_vectors;  // co-rotating part g(t), g_z = v_z
};

// Closed-form mean spin: v0 rotated about n_S by -eps omega_S t, then about z by w t.
Trajectory mean_spin_trajectory(const RotatingFieldParams& p, const ComplexVector& psi0,
                                std::span<const double> grid);
Trajectory mean_spin_trajectory(const RotatingFieldParams& p, const Vec3& v0,
                                std::span<const double> grid);

struct CyclicInfo {
    int K = 1;    // field turns per cycle
    int K_S = 1;  // effective-frame turns per cycle
    double T = 0.0;
    double ratio_residual = 0.0;  // |omega_S/omega - K_S/K|
};

inline constexpr double default_cyclic_tol = 1e-9;
inline constexpr int default_k_max = 64;

std::optional<CyclicInfo> detect_cyclicity(const RotatingFieldParams& p,
                                           double tol = default_cyclic_tol,
                                           int k_max = default_k_max);

struct PhaseReport {
    CyclicInfo info;
    double delta = 0.0;          // closed form, in (-pi, pi]
    double delta_overlap = 0.0;  // arg <psi(0)|psi(T)>
    double beta = 0.0;           // unreduced
    double gamma = 0.0;          // in (-pi, pi]
    std::optional<double> omega_v;  // unreduced; empty when |v0| = 0
    Vec3 v0 = Vec3::Zero();
    double v0_norm = 0.0;
    double cyclic_fidelity = 0.0;
    double relation_residual = 0.0;
};

// Total, dynamic and geometric phase of the cyclic solution started at psi0
// (t0 = 0). Throws ConsistencyError if the propagated state is not cyclic.
PhaseReport phase_report(const RotatingFieldParams& p, const ComplexVector& psi0,
                         const CyclicInfo& info);

// Unreduced solid angle of the trace of v(t) over one cycle:
//   -eps 2pi K_S (1 - v0.n_S/|v0|) + 2pi K (1 - cos(theta_S) v0.n_S/|v0|).
// Throws UndefinedSolidAngle for |v0| < 1e-12.
double solid_angle_closed_form(const EffectiveFrame& frame, const Vec3& v0, const CyclicInfo& info,
                               int mu_sign);

// Offset between the lab-axis quadrature of the trace and the closed form above.
// Non-zero (4 pi eps K_S) only when v0.n_S/|v0| < -cos(theta_S), i.e. when the
// co-rotating circle of g(t) encloses -z.
double lab_branch_offset(const EffectiveFrame& frame, const Vec3& v0, const CyclicInfo& info,
                         int mu_sign);

// Distance mod 2pi between gamma and -|v0| Omega_v + (s - |v0|)(eps 2pi K_S - 2pi K).
// For |v0| = 0 the solid-angle term is dropped.
double relation_residual_40(double gamma, std::optional<double> omega_v, double v0_norm,
                            const RotatingFieldParams& p, const CyclicInfo& info);
double relation_residual_40(const PhaseReport& report, const RotatingFieldParams& p,
                            const CyclicInfo& info);

}  // namespace geophase
