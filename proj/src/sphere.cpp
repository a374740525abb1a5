#include "geophase/sphere.hpp"

#include <cmath>

namespace geophase {

Vec3 fibonacci_point(int i, int n) {
    static const double golden = pi * (3.0 - std::sqrt(5.0));
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - z * z);
    return Vec3(r * std::cos(golden * i), r * std::sin(golden * i), z);
}

Mat3 frame_with_pole(const Vec3& pole) {
    const Vec3 p = pole.normalized();
    const Vec3 e1 = p.unitOrthogonal();
    const Vec3 e2 = p.cross(e1);
    Mat3 r;
    r.row(0) = e1.transpose();
    r.row(1) = e2.transpose();
    r.row(2) = p.transpose();
    return r;
}

}  // namespace geophase
