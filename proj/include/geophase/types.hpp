#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace geophase {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr Complex imag_unit{0.0, 1.0};

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A trajectory did not return to its starting point within tolerance.
class NotCyclicError : public Error {
public:
    using Error::Error;
};

// A solid angle was requested for a vanishing mean vector.
class UndefinedSolidAngle : public Error {
public:
    using Error::Error;
};

// A numerical self-consistency check failed.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

// Unit vector in R^3. Construction normalizes; the checked constructor rejects
// inputs whose norm differs from one by more than 1e-12.
class UnitVector3 {
public:
    UnitVector3() : v_(0.0, 0.0, 1.0) {}
    UnitVector3(double x, double y, double z);

    static UnitVector3 normalized(const Vec3& v);
    static UnitVector3 from_angles(double theta, double phi);

    const Vec3& vec() const { return v_; }
    double x() const { return v_.x(); }
    double y() const { return v_.y(); }
    double z() const { return v_.z(); }
    double theta() const;
    double phi() const;

    operator const Vec3&() const { return v_; }

private:
    explicit UnitVector3(const Vec3& v, int) : v_(v) {}
    Vec3 v_;
};

inline const UnitVector3 unit_x{1.0, 0.0, 0.0};
inline const UnitVector3 unit_y{0.0, 1.0, 0.0};
inline const UnitVector3 unit_z{0.0, 0.0, 1.0};

// Maps an angle onto (-pi, pi].
double wrap_phase(double angle);

// Distance between two angles on the circle, in [0, pi].
double phase_distance(double a, double b);

// Reduces a solid angle onto [0, 4*pi).
double reduce_solid_angle(double omega);

// Distance between two solid angles modulo 4*pi, in [0, 2*pi].
double solid_angle_distance(double a, double b);

// Rotation of a 3-vector about `axis` by `angle` (right-handed).
Mat3 axis_rotation(const Vec3& axis, double angle);

}  // namespace geophase
