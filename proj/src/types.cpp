#include "geophase/types.hpp"

#include <algorithm>
#include <cmath>

namespace geophase {

UnitVector3::UnitVector3(double x, double y, double z) : v_(x, y, z) {
    const double n = v_.norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-12) {
        throw std::invalid_argument("UnitVector3: norm differs from 1 by more than 1e-12");
    }
    v_ /= n;
}

UnitVector3 UnitVector3::normalized(const Vec3& v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw std::invalid_argument("UnitVector3: cannot normalize a zero or non-finite vector");
    }
    return UnitVector3(Vec3(v / n), 0);
}

UnitVector3 UnitVector3::from_angles(double theta, double phi) {
    return UnitVector3(Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                            std::cos(theta)),
                       0);
}

double UnitVector3::theta() const { return std::acos(std::clamp(v_.z(), -1.0, 1.0)); }

double UnitVector3::phi() const { return std::atan2(v_.y(), v_.x()); }

double wrap_phase(double angle) {
    double r = std::remainder(angle, two_pi);  // [-pi, pi]
    if (r <= -pi) r += two_pi;
    return r;
}

double phase_distance(double a, double b) { return std::abs(wrap_phase(a - b)); }

double reduce_solid_angle(double omega) {
    double r = std::fmod(omega, 4.0 * pi);
    if (r < 0.0) r += 4.0 * pi;
    return r;
}

double solid_angle_distance(double a, double b) {
    return std::abs(std::remainder(a - b, 4.0 * pi));
}

Mat3 axis_rotation(const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace geophase
