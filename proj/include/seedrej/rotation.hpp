#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "seedrej/rng.hpp"

namespace seedrej {

// 3x3 rotation matrix, row-major. Proper rotations only: orthonormal with
// determinant +1 (checked to 1e-9 by is_rotation / require_rotation).
struct Rotation {
  std::array<std::array<double, 3>, 3> m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

  static Rotation identity() { return Rotation{}; }
};

struct EulerTriple {
  double azimuth = 0.0;
  double elevation = 0.0;
  double tilt = 0.0;  // radians
};

inline Rotation matmul(const Rotation& a, const Rotation& b) {
  Rotation r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a.m[i][k] * b.m[k][j];
      r.m[i][j] = s;
    }
  return r;
}

inline Rotation transpose(const Rotation& a) {
  Rotation r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = a.m[j][i];
  return r;
}

inline double trace(const Rotation& a) { return a.m[0][0] + a.m[1][1] + a.m[2][2]; }

inline double determinant(const Rotation& a) {
  return a.m[0][0] * (a.m[1][1] * a.m[2][2] - a.m[1][2] * a.m[2][1]) -
         a.m[0][1] * (a.m[1][0] * a.m[2][2] - a.m[1][2] * a.m[2][0]) +
         a.m[0][2] * (a.m[1][0] * a.m[2][1] - a.m[1][1] * a.m[2][0]);
}

inline bool is_rotation(const Rotation& a, double tol = 1e-9) {
  // R^T R == I
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a.m[k][i] * a.m[k][j];
      double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(s - want) > tol) return false;
    }
  return std::abs(determinant(a) - 1.0) <= tol;
}

inline void require_rotation(const Rotation& a, const char* what) {
  for (const auto& row : a.m)
    for (double v : row)
      if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite matrix");
  if (!is_rotation(a))
    throw std::invalid_argument(std::string(what) + ": input is not a proper rotation matrix");
}

inline Rotation rot_x(double angle) {
  double c = std::cos(angle), s = std::sin(angle);
  Rotation r;
  r.m = {{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
  return r;
}

inline Rotation rot_z(double angle) {
  double c = std::cos(angle), s = std::sin(angle);
  Rotation r;
  r.m = {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
  return r;
}

// Declared convention: R = Rz(tilt) * Rx(-elevation) * Rz(-azimuth).
// Any fixed convention preserves the relative-rotation distances below.
inline Rotation euler_to_rotation(const EulerTriple& e) {
  if (!std::isfinite(e.azimuth) || !std::isfinite(e.elevation) || !std::isfinite(e.tilt))
    throw std::invalid_argument("euler_to_rotation: angles must be finite");
  return matmul(rot_z(e.tilt), matmul(rot_x(-e.elevation), rot_z(-e.azimuth)));
}

// Rotational displacement ||I - b a^T||_F, in [0, 2*sqrt(2)]. Cheap stand-in
// for the geodesic during training: equals 2*sqrt(2)*sin(geodesic/2).
inline double larochelle_distance(const Rotation& a, const Rotation& b) {
  require_rotation(a, "larochelle_distance");
  require_rotation(b, "larochelle_distance");
  double sum = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double rel = 0.0;
      for (int k = 0; k < 3; ++k) rel += b.m[i][k] * a.m[j][k];  // (b a^T)_{ij}
      double d = (i == j ? 1.0 : 0.0) - rel;
      sum += d * d;
    }
  return std::sqrt(sum);
}

// Geodesic angle between two rotations, in [0, pi]. Computed from the trace
// of the relative rotation with clamping; agrees with ||log(a^T b)||_F/sqrt(2).
inline double geodesic_distance(const Rotation& a, const Rotation& b) {
  require_rotation(a, "geodesic_distance");
  require_rotation(b, "geodesic_distance");
  double tr = 0.0;  // trace(a^T b)
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) tr += a.m[k][i] * b.m[k][i];
  double c = (tr - 1.0) / 2.0;
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return std::acos(c);
}

// Uniform random rotation via a uniform unit quaternion (Shoemake).
inline Rotation random_rotation(Rng& rng) {
  double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double two_pi = 2.0 * 3.14159265358979323846;
  double w = std::sqrt(1.0 - u1) * std::sin(two_pi * u2);
  double x = std::sqrt(1.0 - u1) * std::cos(two_pi * u2);
  double y = std::sqrt(u1) * std::sin(two_pi * u3);
  double z = std::sqrt(u1) * std::cos(two_pi * u3);
  Rotation r;
  r.m = {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
          {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
          {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
  return r;
}

// Rotation by a known angle about a random axis; handy for tests that need a
// ground-truth geodesic angle.
inline Rotation rotation_about_axis(double ax, double ay, double az, double angle) {
  double n = std::sqrt(ax * ax + ay * ay + az * az);
  if (!(n > 0.0)) throw std::invalid_argument("rotation_about_axis: zero axis");
  ax /= n;
  ay /= n;
  az /= n;
  double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
  Rotation r;
  r.m = {{{t * ax * ax + c, t * ax * ay - s * az, t * ax * az + s * ay},
          {t * ax * ay + s * az, t * ay * ay + c, t * ay * az - s * ax},
          {t * ax * az - s * ay, t * ay * az + s * ax, t * az * az + c}}};
  return r;
}

}  // namespace seedrej
