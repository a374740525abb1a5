#include "geophase/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geophase/sphere.hpp"
#include "geophase/spin_algebra.hpp"

namespace geophase {

namespace {

void require_hermitian(const ComplexMatrix& h, double t) {
    const double scale = std::max(1.0, h.norm());
    if ((h - h.adjoint()).norm() > 1e-10 * scale) {
        throw std::invalid_argument("timestep_propagate: Hamiltonian sample at t = " +
                                    std::to_string(t) + " is not Hermitian");
    }
}

std::size_t step_count(double dt, double T) {
    if (!(dt > 0.0)) throw std::invalid_argument("timestep_propagate: dt must be positive");
    if (!(T >= 0.0)) throw std::invalid_argument("timestep_propagate: T must be non-negative");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(T / dt - 1e-9)));
}

}  // namespace

SteppedPropagation timestep_propagate(const HamiltonianSampler& hamiltonian,
                                      const ComplexMatrix& psi0, double dt, double T,
                                      bool keep_history) {
    const std::size_t n = step_count(dt, T);
    SteppedPropagation out;
    out.dt = T / static_cast<double>(n);
    out.history = keep_history || n == 1;
    const Eigen::VectorXd norms0 = psi0.colwise().norm().transpose();

    out.times.reserve(keep_history ? n + 1 : 2);
    out.states.reserve(keep_history ? n + 1 : 2);
    out.times.push_back(0.0);
    out.states.push_back(psi0);

    ComplexMatrix psi = psi0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t_mid = (static_cast<double>(k) + 0.5) * out.dt;
        const ComplexMatrix h = hamiltonian(t_mid);
        require_hermitian(h, t_mid);
        psi = hermitian_exp(h, out.dt) * psi;
        const double t = static_cast<double>(k + 1) * out.dt;
        const Eigen::VectorXd norms = psi.colwise().norm().transpose();
        out.norm_drift = std::max(out.norm_drift, (norms - norms0).cwiseAbs().maxCoeff());
        if (keep_history || k + 1 == n) {
            out.times.push_back(t);
            out.states.push_back(psi);
        }
    }
    return out;
}

ComplexMatrix timestep_propagator(const HamiltonianSampler& hamiltonian, int dim, double dt,
                                  double T) {
    return timestep_propagate(hamiltonian, ComplexMatrix::Identity(dim, dim), dt, T, false).final();
}

double trapezoid(std::span<const double> times, std::span<const double> values) {
    if (times.size() != values.size()) {
        throw std::invalid_argument("trapezoid: size mismatch");
    }
    double sum = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) {
        sum += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
    }
    return sum;
}

namespace {

// Derivatives by central differences: five-point stencils (fourth order, with
// matching one-sided stencils at the ends) on uniform grids, three-point otherwise.
std::vector<Vec3> differentiate(std::span<const double> t, std::span<const Vec3> u) {
    const std::size_t n = u.size();
    if (n < 5) throw std::invalid_argument("solid_angle_quadrature: need at least 5 samples");
    std::vector<Vec3> d(n, Vec3::Zero());
    const double h = (t[n - 1] - t[0]) / static_cast<double>(n - 1);
    bool uniform = true;
    for (std::size_t k = 1; k < n && uniform; ++k) {
        uniform = std::abs((t[k] - t[k - 1]) - h) <= 1e-9 * h;
    }
    if (uniform) {
        for (std::size_t k = 2; k + 2 < n; ++k) {
            d[k] = (u[k - 2] - 8.0 * u[k - 1] + 8.0 * u[k + 1] - u[k + 2]) / (12.0 * h);
        }
        d[0] = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * h);
        d[1] = (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]) / (12.0 * h);
        d[n - 1] = (25.0 * u[n - 1] - 48.0 * u[n - 2] + 36.0 * u[n - 3] - 16.0 * u[n - 4] + 3.0 * u[n - 5]) /
                   (12.0 * h);
        d[n - 2] = (3.0 * u[n - 1] + 10.0 * u[n - 2] - 18.0 * u[n - 3] + 6.0 * u[n - 4] - u[n - 5]) /
                   (12.0 * h);
        return d;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (u[k + 1] - u[k - 1]) / (t[k + 1] - t[k - 1]);
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * (t[1] - t[0]));
    d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * (t[n - 1] - t[n - 2]));
    return d;
}

double pole_integral(std::span<const double> t, std::span<const Vec3> u, const Vec3& pole,
                     std::size_t stride) {
    std::vector<double> ts;
    std::vector<Vec3> us;
    for (std::size_t k = 0; k < u.size(); k += stride) {
        ts.push_back(t[k]);
        us.push_back(u[k]);
    }
    if ((u.size() - 1) % stride != 0) {
        ts.push_back(t.back());
        us.push_back(u.back());
    }
    const std::vector<Vec3> du = differentiate(ts, us);
    std::vector<double> f(us.size());
    for (std::size_t k = 0; k < us.size(); ++k) {
        f[k] = pole.dot(us[k].cross(du[k])) / (1.0 + pole.dot(us[k]));
    }
    return trapezoid(ts, f);
}

double min_clearance(std::span<const Vec3> u, const Vec3& pole, std::size_t stride = 1) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < u.size(); k += stride) m = std::min(m, 1.0 + pole.dot(u[k]));
    return m;
}

// Pole whose antipode stays farthest from the trace, searched on a Fibonacci grid.
Vec3 choose_pole(std::span<const Vec3> u) {
    const std::size_t stride = std::max<std::size_t>(1, u.size() / 2000);
    constexpr int candidates = 1500;
    Vec3 best = Vec3::UnitZ();
    double best_score = -1.0;
    for (int i = 0; i < candidates; ++i) {
        const Vec3 p = fibonacci_point(i, candidates);
        const double score = min_clearance(u, p, stride);
        if (score > best_score) {
            best_score = score;
            best = p;
        }
    }
    return best;
}

// Winding number of the trace around -reference after stereographic
// projection from -pole.
int projected_winding(std::span<const Vec3> u, const Vec3& pole, const Vec3& reference) {
    const Mat3 frame = frame_with_pole(pole);
    auto project = [&](const Vec3& x) {
        const Vec3 y = frame * x;
        return Eigen::Vector2d(y.x() / (1.0 + y.z()), y.y() / (1.0 + y.z()));
    };
    const Eigen::Vector2d q = project(-reference);
    double total = 0.0;
    Eigen::Vector2d prev = project(u[0]) - q;
    for (std::size_t k = 1; k < u.size(); ++k) {
        const Eigen::Vector2d cur = project(u[k]) - q;
        total += std::atan2(prev.x() * cur.y() - prev.y() * cur.x(), prev.dot(cur));
        prev = cur;
    }
    return static_cast<int>(std::lround(total / two_pi));
}

}  // namespace

QuadratureResult solid_angle_quadrature(std::span<const double> times,
                                        std::span<const Vec3> vectors, const Vec3& reference,
                                        double pole_tol) {
    if (times.size() != vectors.size()) {
        throw std::invalid_argument("solid_angle_quadrature: size mismatch");
    }
    if (vectors.size() < 9) throw std::invalid_argument("solid_angle_quadrature: need at least 9 samples");
    const double r = vectors.front().norm();
    if (r <= 1e-10) throw UndefinedSolidAngle("solid_angle_quadrature: vanishing trace");
    std::vector<Vec3> u;
    u.reserve(vectors.size());
    for (const Vec3& v : vectors) {
        if (v.norm() <= 1e-10) throw UndefinedSolidAngle("solid_angle_quadrature: vanishing trace");
        u.push_back(v / r);
    }
    const Vec3 ref = reference.normalized();

    QuadratureResult out;
    out.pole_used = ref;
    const double clearance = min_clearance(u, ref);
    if (clearance >= pole_tol) {
        out.value = pole_integral(times, u, ref, 1);
        out.refinement_delta = std::abs(out.value - pole_integral(times, u, ref, 2));
        return out;
    }
    if (clearance < 1e-12) {
        throw Error("solid_angle_quadrature: trace passes through the antipode of the reference axis");
    }
    const Vec3 pole = choose_pole(u);
    if (min_clearance(u, pole) < pole_tol) {
        throw Error("solid_angle_quadrature: no pole keeps the trace clear of its antipode");
    }
    const int winding = projected_winding(u, pole, ref);
    out.frame_rotated = true;
    out.pole_used = pole;
    const double correction = -4.0 * pi * winding;
    out.value = pole_integral(times, u, pole, 1) + correction;
    out.refinement_delta =
        std::abs(out.value - (pole_integral(times, u, pole, 2) + correction));
    return out;
}

QuadratureResult solid_angle_quadrature(const Trajectory& trajectory, const Vec3& reference,
                                        double pole_tol) {
    return solid_angle_quadrature(trajectory.times, trajectory.vectors, reference, pole_tol);
}

PhaseDecomposition phase_decompose(const SteppedPropagation& propagation,
                                   const HamiltonianSampler& hamiltonian, Eigen::Index column,
                                   double fidelity_tol) {
    if (!propagation.history || propagation.states.size() < 2 ||
        propagation.states.size() != propagation.times.size()) {
        throw std::invalid_argument("phase_decompose: propagation history is required");
    }
    const ComplexVector psi0 = propagation.state(0, column);
    const ComplexVector psiT = propagation.states.back().col(column);
    const Complex overlap = psi0.dot(psiT);

    PhaseDecomposition out;
    out.fidelity = std::abs(overlap);
    out.delta = std::arg(overlap);
    std::vector<double> energy(propagation.times.size());
    for (std::size_t k = 0; k < propagation.times.size(); ++k) {
        const ComplexVector psi = propagation.states[k].col(column);
        energy[k] = psi.dot(hamiltonian(propagation.times[k]) * psi).real();
    }
    out.beta = -trapezoid(propagation.times, energy);
    if (out.fidelity >= 1.0 - fidelity_tol) out.gamma = wrap_phase(out.delta - out.beta);
    return out;
}

}  // namespace geophase
