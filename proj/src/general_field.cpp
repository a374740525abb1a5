#include "geophase/general_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "geophase/sphere.hpp"

namespace geophase {

FieldWaveform::FieldWaveform(RateFunction rate, DirectionFunction direction)
    : rate_(std::move(rate)), direction_(std::move(direction)) {
    if (!rate_ || !direction_) throw std::invalid_argument("FieldWaveform: empty function");
}

namespace {

Vec3 slerp(const Vec3& a, const Vec3& b, double x) {
    const double angle = std::atan2(a.cross(b).norm(), a.dot(b));
    if (angle < 1e-12) return ((1.0 - x) * a + x * b).normalized();
    const double s = std::sin(angle);
    return (std::sin((1.0 - x) * angle) / s) * a + (std::sin(x * angle) / s) * b;
}

}  // namespace

FieldWaveform FieldWaveform::from_samples(std::vector<double> times, std::vector<double> rates,
                                          std::vector<Vec3> directions) {
    const std::size_t n = times.size();
    if (n < 2 || rates.size() != n || directions.size() != n) {
        throw std::invalid_argument("FieldWaveform: need at least two samples of each column");
    }
    for (std::size_t k = 0; k < n; ++k) {
        if (!std::isfinite(times[k]) || !std::isfinite(rates[k]) || !directions[k].allFinite()) {
            throw std::invalid_argument("FieldWaveform: non-finite sample " + std::to_string(k));
        }
        if (k > 0 && !(times[k] > times[k - 1])) {
            throw std::invalid_argument("FieldWaveform: sample times must increase strictly");
        }
        if (std::abs(directions[k].norm() - 1.0) > 1e-10) {
            throw std::invalid_argument("FieldWaveform: direction sample " + std::to_string(k) +
                                        " is not a unit vector");
        }
        if (k > 0) {
            const Vec3& a = directions[k - 1];
            const Vec3& b = directions[k];
            if (std::atan2(a.cross(b).norm(), a.dot(b)) >= max_step_rotation) {
                throw std::invalid_argument("FieldWaveform: direction turns by 0.1 rad or more between samples " +
                                            std::to_string(k - 1) + " and " + std::to_string(k));
            }
        }
    }
    struct Table {
        std::vector<double> t, w;
        std::vector<Vec3> n;
        // Interval index and fraction for time t; throws outside the sampled span.
        std::pair<std::size_t, double> locate(double x) const {
            if (x < t.front() - 1e-12 || x > t.back() + 1e-12) {
                throw std::out_of_range("FieldWaveform: time " + std::to_string(x) +
                                        " outside the sampled span");
            }
            auto it = std::upper_bound(t.begin(), t.end(), x);
            std::size_t k = it == t.begin() ? 0 : static_cast<std::size_t>(it - t.begin()) - 1;
            k = std::min(k, t.size() - 2);
            return {k, std::clamp((x - t[k]) / (t[k + 1] - t[k]), 0.0, 1.0)};
        }
    };
    auto table = std::make_shared<Table>(Table{std::move(times), std::move(rates), std::move(directions)});
    return FieldWaveform(
        [table](double x) {
            const auto [k, f] = table->locate(x);
            return (1.0 - f) * table->w[k] + f * table->w[k + 1];
        },
        [table](double x) {
            const auto [k, f] = table->locate(x);
            return slerp(table->n[k], table->n[k + 1], f);
        });
}

FieldWaveform FieldWaveform::rotating(double rate, double omega, double theta_B) {
    const double st = std::sin(theta_B);
    const double ct = std::cos(theta_B);
    return FieldWaveform([rate](double) { return rate; },
                         [=](double t) {
                             return Vec3(st * std::cos(omega * t), st * std::sin(omega * t), ct);
                         });
}

FieldWaveform FieldWaveform::rotated(const Mat3& r) const {
    auto direction = direction_;
    return FieldWaveform(rate_, [direction, r](double t) { return Vec3(r * direction(t)); });
}

std::vector<double> uniform_grid(double T, std::size_t steps) {
    if (steps == 0) throw std::invalid_argument("uniform_grid: need at least one step");
    std::vector<double> grid(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        grid[k] = T * static_cast<double>(k) / static_cast<double>(steps);
    }
    return grid;
}

namespace {

void check_grid(std::span<const double> grid) {
    if (grid.size() < 2) throw std::invalid_argument("axis transport: grid needs two points");
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] > grid[k - 1])) {
            throw std::invalid_argument("axis transport: grid must increase strictly");
        }
    }
}

// Working frame for the angles: lab unless the trace nears a lab pole.
Mat3 angle_frame(const std::vector<Vec3>& trace, bool& rotated) {
    auto min_sin2 = [&](const Vec3& p, std::size_t stride) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < trace.size(); k += stride) {
            const double c = p.dot(trace[k]);
            m = std::min(m, 1.0 - c * c);
        }
        return m;
    };
    rotated = false;
    if (min_sin2(Vec3::UnitZ(), 1) >= pole_guard * pole_guard) return Mat3::Identity();
    const std::size_t stride = std::max<std::size_t>(1, trace.size() / 2000);
    constexpr int candidates = 1500;
    Vec3 best = Vec3::UnitZ();
    double best_score = -1.0;
    for (int i = 0; i < candidates; ++i) {
        const Vec3 p = fibonacci_point(i, candidates);
        const double score = min_sin2(p, stride);
        if (score > best_score) {
            best_score = score;
            best = p;
        }
    }
    rotated = true;
    return frame_with_pole(best);
}

}  // namespace

AxisTrajectory integrate_axis(const FieldWaveform& field, const UnitVector3& e0,
                              std::span<const double> grid, double coupling) {
    check_grid(grid);
    auto f = [&](double t, const Vec3& e) -> Vec3 {
        return coupling * field.rate(t) * field.direction(t).cross(e);
    };

    AxisTrajectory out;
    out.times.assign(grid.begin(), grid.end());
    out.axis.reserve(grid.size());
    out.velocity.reserve(grid.size());
    Vec3 e = e0.vec();
    out.axis.push_back(e);
    out.velocity.push_back(f(grid[0], e));
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        const double t = grid[k];
        const double h = grid[k + 1] - t;
        const Vec3 k1 = f(t, e);
        const Vec3 k2 = f(t + 0.5 * h, e + 0.5 * h * k1);
        const Vec3 k3 = f(t + 0.5 * h, e + 0.5 * h * k2);
        const Vec3 k4 = f(t + h, e + h * k3);
        e = (e + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).normalized();
        const double peak_rate = std::max({std::abs(field.rate(t)), std::abs(field.rate(t + 0.5 * h)),
                                           std::abs(field.rate(t + h))});
        out.max_step_angle = std::max(out.max_step_angle, std::abs(coupling) * peak_rate * h);
        out.axis.push_back(e);
        out.velocity.push_back(f(t + h, e));
    }
    out.step_too_coarse = out.max_step_angle > max_step_rotation;

    out.frame = angle_frame(out.axis, out.frame_rotated);
    const std::size_t n = grid.size();
    out.theta.resize(n);
    out.phi.resize(n);
    out.phi_rate.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec3 w = out.frame * out.axis[k];
        const Vec3 dw = out.frame * out.velocity[k];
        const double rho2 = w.x() * w.x() + w.y() * w.y();
        out.theta[k] = std::atan2(std::sqrt(rho2), w.z());
        const double raw = std::atan2(w.y(), w.x());
        out.phi[k] = k == 0 ? raw : out.phi[k - 1] + wrap_phase(raw - out.phi[k - 1]);
        out.phi_rate[k] = rho2 > 0.0 ? (w.x() * dw.y() - w.y() * dw.x()) / rho2 : 0.0;
    }
    return out;
}

AxisTrajectory transport_axis(const FieldWaveform& field, const UnitVector3& e0,
                              std::span<const double> grid, double m_s) {
    AxisTrajectory out = integrate_axis(field, e0, grid, -1.0);
    const std::size_t n = out.times.size();
    std::vector<double> rate(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = out.times[k];
        rate[k] = m_s * std::cos(out.theta[k]) * out.phi_rate[k] +
                  field.rate(t) * m_s * out.axis[k].dot(field.direction(t));
    }
    out.alpha.assign(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
        out.alpha[k] = out.alpha[k - 1] + 0.5 * (out.times[k] - out.times[k - 1]) * (rate[k] + rate[k - 1]);
    }
    return out;
}

namespace {

CyclicClosure closure_at(const AxisTrajectory& axis, std::size_t k) {
    CyclicClosure c;
    c.index = k;
    c.T = axis.times[k] - axis.times[0];
    c.K = static_cast<int>(std::lround((axis.phi[k] - axis.phi[0]) / two_pi));
    c.closure_error = (axis.axis[k] - axis.axis[0]).norm();
    return c;
}

}  // namespace

std::optional<CyclicClosure> check_closure(const AxisTrajectory& axis, double tol) {
    const CyclicClosure c = closure_at(axis, axis.times.size() - 1);
    if (c.closure_error < tol) return c;
    return std::nullopt;
}

std::optional<CyclicClosure> scan_closure(const AxisTrajectory& axis, double t_min, double tol) {
    const std::size_t n = axis.axis.size();
    auto dist = [&](std::size_t k) { return (axis.axis[k] - axis.axis[0]).norm(); };
    for (std::size_t k = 1; k < n; ++k) {
        if (axis.times[k] - axis.times[0] < t_min) continue;
        const double d = dist(k);
        if (d >= tol || d > dist(k - 1)) continue;
        if (k + 1 < n && d > dist(k + 1)) continue;
        return closure_at(axis, k);
    }
    return std::nullopt;
}

double axis_solid_angle(const AxisTrajectory& axis, std::size_t end) {
    if (end >= axis.times.size()) throw std::out_of_range("axis_solid_angle: end past the trajectory");
    double sum = 0.0;
    for (std::size_t k = 1; k <= end; ++k) {
        const double a = (1.0 - std::cos(axis.theta[k - 1])) * axis.phi_rate[k - 1];
        const double b = (1.0 - std::cos(axis.theta[k])) * axis.phi_rate[k];
        sum += 0.5 * (axis.times[k] - axis.times[k - 1]) * (a + b);
    }
    return sum;
}

GeometricPhase cyclic_geometric_phase(const AxisTrajectory& axis, const CyclicClosure& closure,
                                      double m_s, double tol) {
    if (!(closure.closure_error < tol)) {
        throw NotCyclicError("cyclic_geometric_phase: axis does not close (|e(T) - e(0)| = " +
                             std::to_string(closure.closure_error) + ")");
    }
    GeometricPhase g;
    g.omega_e = axis_solid_angle(axis, closure.index);
    g.gamma = wrap_phase(-m_s * g.omega_e);
    if (m_s != 0.0) {
        // v = m_s e; for m_s < 0 it traces the antipodal curve.
        g.omega_v = m_s > 0.0 ? g.omega_e : 4.0 * pi * closure.K - g.omega_e;
        g.gamma_v = wrap_phase(-std::abs(m_s) * *g.omega_v);
    }
    return g;
}

HamiltonianSampler neutral_hamiltonian(const FieldWaveform& field, const SpinOps& ops) {
    return [field, ops](double t) -> ComplexMatrix {
        return -field.rate(t) * ops.dot(field.direction(t));
    };
}

ComplexVector axis_eigenstate(const SpinOps& ops, const UnitVector3& e0, double m_s) {
    return spin_direction_eigenbasis(ops, e0).state(m_s, ops.spin);
}

namespace {

void check_matching_grid(const SteppedPropagation& propagation, const AxisTrajectory& axis) {
    if (propagation.times.size() != axis.times.size()) {
        throw std::invalid_argument("propagation and axis trajectory use different grids");
    }
    for (std::size_t k = 0; k < axis.times.size(); ++k) {
        if (std::abs(propagation.times[k] - axis.times[k]) > 1e-9 * std::max(1.0, std::abs(axis.times[k]))) {
            throw std::invalid_argument("propagation and axis trajectory use different grids");
        }
    }
}

}  // namespace

double eigen_residual(const SpinOps& ops, const SteppedPropagation& propagation,
                      const AxisTrajectory& axis, double m_s, Eigen::Index column) {
    check_matching_grid(propagation, axis);
    double worst = 0.0;
    for (std::size_t k = 0; k < axis.times.size(); ++k) {
        const ComplexVector psi = propagation.states[k].col(column);
        worst = std::max(worst, (ops.dot(axis.axis[k]) * psi - m_s * psi).norm());
    }
    return worst;
}

double mean_spin_deviation(const SpinOps& ops, const SteppedPropagation& propagation,
                           const AxisTrajectory& axis, double m_s, Eigen::Index column) {
    check_matching_grid(propagation, axis);
    double worst = 0.0;
    for (std::size_t k = 0; k < axis.times.size(); ++k) {
        const Vec3 v = spin_expectation(ops, propagation.states[k].col(column));
        worst = std::max(worst, (v - m_s * axis.axis[k]).norm());
    }
    return worst;
}

TotalPhaseCheck total_phase_check(const FieldWaveform& field, const SpinOps& ops,
                                  const SteppedPropagation& propagation,
                                  const AxisTrajectory& axis, const CyclicClosure& closure,
                                  double m_s, Eigen::Index column) {
    check_matching_grid(propagation, axis);
    if (axis.alpha.size() != axis.times.size()) {
        throw std::invalid_argument("total_phase_check: axis carries no accumulated phase");
    }
    const std::size_t end = closure.index;
    TotalPhaseCheck out;
    out.delta_alpha = wrap_phase(axis.alpha[end] - axis.alpha[0] - two_pi * m_s * closure.K);
    const ComplexVector psi0 = propagation.states[0].col(column);
    out.delta_overlap = std::arg(psi0.dot(propagation.states[end].col(column)));

    std::vector<double> dynamic(end + 1);
    for (std::size_t k = 0; k <= end; ++k) {
        const double t = axis.times[k];
        const Vec3 v = spin_expectation(ops, propagation.states[k].col(column));
        dynamic[k] = field.rate(t) * v.dot(field.direction(t));
    }
    out.beta = trapezoid(std::span(axis.times).first(end + 1), dynamic);
    out.gamma = wrap_phase(out.delta_alpha - out.beta);
    out.gamma_overlap = wrap_phase(out.delta_overlap - out.beta);
    return out;
}

UnitVector3 axis_from_spin_half_state(const ComplexVector& psi) {
    if (psi.size() != 2) throw std::invalid_argument("axis_from_spin_half_state: state must be two-dimensional");
    const Vec3 v = 2.0 * spin_expectation(spin_operators(SpinQuantum(1)), psi);
    if (std::abs(v.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument("axis_from_spin_half_state: state must be normalized");
    }
    return UnitVector3::normalized(v);
}

UnitVector3 periodic_fixed_axis(const FieldWaveform& field, double T, std::size_t steps,
                                double coupling, const Vec3& hint) {
    if (!(T > 0.0) || steps == 0) throw std::invalid_argument("periodic_fixed_axis: need T > 0 and steps > 0");
    auto generator = [&](double t) {
        const Vec3 w = coupling * field.rate(t) * field.direction(t);
        Mat3 a;
        a << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
        return a;
    };
    Mat3 m = Mat3::Identity();
    const double h = T / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = h * static_cast<double>(k);
        const Mat3 k1 = generator(t) * m;
        const Mat3 k2 = generator(t + 0.5 * h) * (m + 0.5 * h * k1);
        const Mat3 k3 = generator(t + 0.5 * h) * (m + 0.5 * h * k2);
        const Mat3 k4 = generator(t + h) * (m + h * k3);
        m += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    const Eigen::AngleAxisd aa(r);
    if (aa.angle() < 1e-9) return UnitVector3::normalized(hint);  // every axis returns
    Vec3 axis = aa.axis();
    if (axis.dot(hint) < 0.0) axis = -axis;
    return UnitVector3::normalized(axis);
}

}  // namespace geophase
