#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "geophase/neutral_rotating.hpp"
#include "geophase/types.hpp"

namespace geophase {

// Brute-force reference engines. Nothing here uses the closed-form solutions.

using HamiltonianSampler = std::function<ComplexMatrix(double)>;

struct SteppedPropagation {
    double dt = 0.0;                    // actual step, T / ceil(T / requested dt)
    std::vector<double> times;          // 0, dt, ..., T
    std::vector<ComplexMatrix> states;  // one dim x ncols block per time (only the
                                        // endpoints when history is not kept)
    double norm_drift = 0.0;            // max | ||psi_k|| - ||psi_0|| |
    bool history = true;                // every step kept

    const ComplexMatrix& initial() const { return states.front(); }
    const ComplexMatrix& final() const { return states.back(); }
    ComplexVector state(std::size_t k, Eigen::Index column = 0) const {
        return states.at(k).col(column);
    }
};

// Exponential midpoint rule: psi_{k+1} = exp(-i H(t_k + dt/2) dt) psi_k, each
// factor from the spectral decomposition of the sampled H. Second order in dt.
// Columns of psi0 are propagated together. Throws if a sample is not Hermitian.
SteppedPropagation timestep_propagate(const HamiltonianSampler& hamiltonian,
                                      const ComplexMatrix& psi0, double dt, double T,
                                      bool keep_history = true);

// Time-ordered propagator U(T) on the given dimension.
ComplexMatrix timestep_propagator(const HamiltonianSampler& hamiltonian, int dim, double dt,
                                  double T);

struct QuadratureResult {
    double value = 0.0;             // unreduced, referred to the requested axis
    double refinement_delta = 0.0;  // |value(dt) - value(2 dt)|
    bool frame_rotated = false;     // the integral was taken about another pole
    Vec3 pole_used = Vec3::UnitZ();
};

inline constexpr double default_pole_tol = 0.02;

// Solid angle of a closed trace about `reference`:
//   (1/|v0|) int (p . (v x dv/dt)) / (|v0| + p . v) dt,
// trapezoidal in t with central-difference derivatives (fourth order on uniform grids). If the trace comes
// within pole_tol (in 1 + p.v/|v0|) of -reference, the integral is taken about
// a pole far from the trace and converted back with the exact 4 pi winding
// correction. Throws if the trace passes through the antipode itself.
QuadratureResult solid_angle_quadrature(std::span<const double> times,
                                        std::span<const Vec3> vectors,
                                        const Vec3& reference = Vec3::UnitZ(),
                                        double pole_tol = default_pole_tol);
QuadratureResult solid_angle_quadrature(const Trajectory& trajectory,
                                        const Vec3& reference = Vec3::UnitZ(),
                                        double pole_tol = default_pole_tol);

struct PhaseDecomposition {
    double fidelity = 0.0;  // |<psi(0)|psi(T)>|
    double delta = 0.0;     // arg <psi(0)|psi(T)>
    double beta = 0.0;      // -int <H> dt
    std::optional<double> gamma;  // delta - beta in (-pi, pi]; empty if not cyclic
};

inline constexpr double default_fidelity_tol = 1e-6;

PhaseDecomposition phase_decompose(const SteppedPropagation& propagation,
                                   const HamiltonianSampler& hamiltonian,
                                   Eigen::Index column = 0,
                                   double fidelity_tol = default_fidelity_tol);

// Trapezoidal rule on a (possibly non-uniform) grid.
double trapezoid(std::span<const double> times, std::span<const double> values);

}  // namespace geophase
