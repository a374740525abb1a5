#pragma once

#include "geophase/types.hpp"

namespace geophase {

// Point i of an n-point Fibonacci lattice on the unit sphere.
Vec3 fibonacci_point(int i, int n);

// Rotation whose rows (e1, e2, pole) form a right-handed orthonormal frame, so
// that R * x gives the coordinates of x in a frame with `pole` as its z axis.
Mat3 frame_with_pole(const Vec3& pole);

}  // namespace geophase
