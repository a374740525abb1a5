#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "geophase/general_field.hpp"
#include "geophase/neutral_rotating.hpp"

namespace geophase {

// Charged particle on a fixed (n, l) shell of energy epsilon_nl in the strong
// rotating field: H(t) = epsilon_nl + omega_B (l + 2s).n(t), hbar = 1.
struct ChargedParams {
    double omega_B = 1.0;  // mu_B B, > 0
    double omega = 1.0;
    double theta_B = 0.0;
    int l = 1;
    SpinQuantum spin{1};
    double epsilon_nl = 0.0;

    void validate() const;
    Vec3 field_direction(double t) const;
    double period() const { return two_pi / omega; }
    SpinQuantum orbital() const { return SpinQuantum(2 * l); }
    int dim() const { return (2 * l + 1) * spin.dim(); }
};

struct DualFrame {
    PrecessionFrame orbital;  // omega_L, theta_L, n_L
    PrecessionFrame spin;     // omega_S, theta_S, n_S
};

DualFrame dual_frames(const ChargedParams& p);

// Orbital and spin operators on the product space, orbital index outer
// (m = l ... -l) and spin index inner (m_s = s ... -s).
struct ShellOperators {
    SpinOps orbital;
    SpinOps spin;
    std::array<ComplexMatrix, 3> L;
    std::array<ComplexMatrix, 3> S;

    int dim() const { return static_cast<int>(L[0].rows()); }
    ComplexMatrix identity() const { return ComplexMatrix::Identity(dim(), dim()); }
    ComplexMatrix l_dot(const Vec3& n) const { return n.x() * L[0] + n.y() * L[1] + n.z() * L[2]; }
    ComplexMatrix s_dot(const Vec3& n) const { return n.x() * S[0] + n.y() * S[1] + n.z() * S[2]; }
    ComplexMatrix jz() const { return L[2] + S[2]; }
};

ShellOperators shell_operators(int l, SpinQuantum spin);

ComplexVector product_state(const ComplexVector& orbital, const ComplexVector& spin);

// Mean orbital and spin angular momenta (u, v) of a shell state.
std::pair<Vec3, Vec3> shell_expectations(const ShellOperators& ops, const ComplexVector& psi);

ComplexMatrix charged_hamiltonian(const ChargedParams& p, const ShellOperators& ops, double t);

// epsilon_nl + omega_L l.n_L + omega_S s.n_S.
ComplexMatrix effective_hamiltonian(const ChargedParams& p, const ShellOperators& ops,
                                    const DualFrame& frames);

// U(t) = exp(-i w t j_z) exp(-i H_eff t).
ComplexMatrix charged_evolution(const ChargedParams& p, double t);

struct ShellEigenstate {
    double m = 0.0;
    double m_s = 0.0;
    double energy = 0.0;  // epsilon_nl + m omega_L + m_s omega_S
    ComplexVector state;
};

// (exp(-i thL l_y) zeta0_m) x (exp(-i thS s_y) chi0_ms), m outer, m_s inner.
std::vector<ShellEigenstate> effective_eigenstates(const ChargedParams& p, const DualFrame& frames);

struct DualCyclicInfo {
    int K = 1;
    int K_L = 1;
    int K_S = 1;
    double T = 0.0;
    double ratio_residual = 0.0;  // larger of the two ratio residuals
};

// K = lcm of the two detected denominators; nothing if either ratio is not
// rational within tol with denominator <= k_max.
std::optional<DualCyclicInfo> detect_dual_cyclicity(const ChargedParams& p,
                                                    double tol = default_cyclic_tol,
                                                    int k_max = default_k_max);

struct DualTrajectory {
    std::vector<double> times;
    std::vector<Vec3> u, v;  // lab frame
    std::vector<Vec3> f, g;  // co-rotating parts
};

// u0 rotated about n_L by +omega_L t and v0 about n_S by +omega_S t, both then
// about z by w t.
DualTrajectory charged_mean_trajectory(const ChargedParams& p, const Vec3& u0, const Vec3& v0,
                                       std::span<const double> grid);

struct SolidAnglePair {
    std::optional<double> omega_u;  // empty for |u0| < 1e-12
    std::optional<double> omega_v;  // empty for |v0| < 1e-12
};

// Closed forms
//   Omega_u = 2pi K_L (1 - c_u) + 2pi K (1 - cos thL c_u),  c_u = u0.n_L/|u0|
// and likewise for v with (K_S, n_S, thS). Unreduced.
SolidAnglePair charged_solid_angles(const DualFrame& frames, const Vec3& u0, const Vec3& v0,
                                    const DualCyclicInfo& info);

// Offsets between the lab-axis quadratures of the u and v traces and the closed
// forms above: -4pi K_L when c_u < -cos thL (the co-rotating circle encloses
// -z), likewise -4pi K_S for v. Zero entries for vanishing vectors.
SolidAnglePair charged_lab_branch_offsets(const DualFrame& frames, const Vec3& u0, const Vec3& v0,
                                          const DualCyclicInfo& info);

struct DualPhaseReport {
    DualCyclicInfo info;
    double delta = 0.0;          // closed form, (-pi, pi]
    double delta_overlap = 0.0;  // arg <psi(0)|psi(T)>
    double beta = 0.0;           // unreduced
    double gamma = 0.0;          // (-pi, pi]
    Vec3 u0 = Vec3::Zero();
    Vec3 v0 = Vec3::Zero();
    double u0_norm = 0.0;
    double v0_norm = 0.0;
    std::optional<double> omega_u;
    std::optional<double> omega_v;
    double cyclic_fidelity = 0.0;
    double residual_82 = 0.0;
    std::optional<double> residual_83;  // spin 1/2 only
};

// Throws ConsistencyError if the propagated state is not cyclic over info.T.
DualPhaseReport charged_phase_report(const ChargedParams& p, const ComplexVector& psi0,
                                     const DualCyclicInfo& info);

struct ExtraTermResiduals {
    double res82 = 0.0;
    std::optional<double> res83;
};

// Distance mod 2pi of gamma from
//   -|u0| Omega_u - |v0| Omega_v + (|u0| - l)(2pi K + 2pi K_L) + (|v0| - s)(2pi K + 2pi K_S)
// and, for s = 1/2, from the form with |v0| = 1/2 and the spin extra term dropped.
// Solid-angle terms of vanishing mean vectors are dropped.
ExtraTermResiduals relation_residual_82_83(const DualPhaseReport& report, const ChargedParams& p);

// Distance of gamma from the bare -|u0| Omega_u - |v0| Omega_v.
double solid_angle_only_residual(const DualPhaseReport& report);

// epsilon_nl + omega_B(t) (l + 2s).n(t) for a general waveform.
HamiltonianSampler charged_field_hamiltonian(const FieldWaveform& field,
                                             const ShellOperators& ops, double epsilon_nl);

// Common eigenstate of l.d0 = m and s.e0 = m_s.
ComplexVector dual_axis_eigenstate(const ShellOperators& ops, const UnitVector3& d0, double m,
                                   const UnitVector3& e0, double m_s);

struct DualAxisTrajectory {
    AxisTrajectory orbital;  // d(t), dd/dt = +omega_B n x d
    AxisTrajectory spin;     // e(t), de/dt = +2 omega_B n x e
    std::vector<double> alpha;
    double m = 0.0;
    double m_s = 0.0;
};

// Transports both axes and accumulates
//   d alpha/dt = m cos(th_d) dphi_d/dt + m_s cos(th_e) dphi_e/dt - <H>,
// <H> = epsilon_nl + omega_B (m d + 2 m_s e).n.
DualAxisTrajectory dual_axis_transport(const FieldWaveform& field, const UnitVector3& d0,
                                       const UnitVector3& e0, std::span<const double> grid,
                                       double m, double m_s, double epsilon_nl = 0.0);

struct DualClosure {
    std::size_t index = 0;
    double T = 0.0;
    int K_d = 0;
    int K_e = 0;
    double closure_error = 0.0;  // larger of the two axes
};

std::optional<DualClosure> check_dual_closure(const DualAxisTrajectory& axes,
                                              double tol = default_closure_tol);

struct DualGeometricPhase {
    double gamma = 0.0;  // -m Omega_d - m_s Omega_e, (-pi, pi]
    double omega_d = 0.0;
    double omega_e = 0.0;
    std::optional<double> omega_u;
    std::optional<double> omega_v;
    double gamma_uv = 0.0;  // -|m| Omega_u - |m_s| Omega_v, (-pi, pi]
};

DualGeometricPhase dual_geometric_phase(const DualAxisTrajectory& axes, const DualClosure& closure,
                                        double tol = default_closure_tol);

struct DualEigenResiduals {
    double orbital = 0.0;       // max || (l.d) psi - m psi ||
    double spin = 0.0;          // max || (s.e) psi - m_s psi ||
    double casimir = 0.0;       // max || l^2 psi - l(l+1) psi ||
    double u_deviation = 0.0;   // max || u - m d ||
    double v_deviation = 0.0;   // max || v - m_s e ||
};

DualEigenResiduals dual_eigen_residuals(const ShellOperators& ops,
                                        const SteppedPropagation& propagation,
                                        const DualAxisTrajectory& axes, Eigen::Index column = 0);

struct DualTotalPhaseCheck {
    double delta_alpha = 0.0;    // alpha(T) - alpha(0) - 2pi m K_d - 2pi m_s K_e
    double delta_overlap = 0.0;
    double beta = 0.0;           // -int <H> dt from the propagated state
    double gamma = 0.0;
    double gamma_overlap = 0.0;
};

DualTotalPhaseCheck dual_total_phase_check(const HamiltonianSampler& hamiltonian,
                                           const SteppedPropagation& propagation,
                                           const DualAxisTrajectory& axes,
                                           const DualClosure& closure, Eigen::Index column = 0);

}  // namespace geophase
