#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace gplhy {

using cdouble = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;

/// Failure of a numerical procedure (quadrature, root finder, ...) as opposed
/// to a precondition violation, which throws std::domain_error.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or unsupported on-disk data (snapshot magic/version, CSV syntax).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double norm2() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(norm2()); }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vec3 normalized(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw std::domain_error("cannot normalize zero vector");
  return {v.x / n, v.y / n, v.z / n};
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::domain_error(msg);
}

inline void require_finite(double v, const std::string& name) {
  if (!std::isfinite(v)) throw std::domain_error(name + " must be finite");
}

inline void require_positive(double v, const std::string& name) {
  require_finite(v, name);
  if (!(v > 0.0)) throw std::domain_error(name + " must be positive");
}

}  // namespace gplhy
