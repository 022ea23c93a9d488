#pragma once

#include <array>
#include <cmath>

namespace rbmc {

// Points live in at most three dimensions; the active dimension travels with
// the Domain / Partition, unused coordinates stay zero.
inline constexpr int kMaxDim = 3;
using Point = std::array<double, kMaxDim>;

inline Point make_point(double x, double y = 0.0, double z = 0.0) { return {x, y, z}; }

inline double dot(const Point& a, const Point& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Point& a, int d) { return dot(a, a, d); }
inline double norm(const Point& a, int d) { return std::sqrt(norm2(a, d)); }

inline Point sub(const Point& a, const Point& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Point add(const Point& a, const Point& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Point scale(const Point& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

inline double dist2(const Point& a, const Point& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}
inline double dist(const Point& a, const Point& b, int d) { return std::sqrt(dist2(a, b, d)); }

// strict lexicographic order on the first d coordinates
inline bool lex_less(const Point& a, const Point& b, int d) {
  for (int i = 0; i < d; ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace rbmc
