#pragma once

#include <array>
#include <cmath>

namespace smoothfbo {

// Forward-mode scalar carrying up to kDualWidth tangent directions.
//
// The tangent block has a fixed compile-time width so expressions never
// allocate; callers differentiating with respect to more directions run the
// computation again per chunk of kDualWidth. Unused lanes stay zero and cost
// a few fused multiply-adds, which is fine at this project's sizes.
inline constexpr int kDualWidth = 8;

struct Dual {
  double v = 0.0;
  std::array<double, kDualWidth> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by design, constants lift

  static Dual seeded(double value, int lane) {
    Dual out(value);
    out.d[lane] = 1.0;
    return out;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < kDualWidth; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < kDualWidth; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < kDualWidth; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }

inline Dual operator-(const Dual& a) {
  Dual out(-a.v);
  for (int i = 0; i < kDualWidth; ++i) out.d[i] = -a.d[i];
  return out;
}

inline Dual operator/(const Dual& a, const Dual& b) {
  Dual out(a.v / b.v);
  const double inv = 1.0 / b.v;
  for (int i = 0; i < kDualWidth; ++i) {
    out.d[i] = (a.d[i] - out.v * b.d[i]) * inv;
  }
  return out;
}

inline Dual tanh(const Dual& a) {
  const double t = std::tanh(a.v);
  Dual out(t);
  const double g = 1.0 - t * t;
  for (int i = 0; i < kDualWidth; ++i) out.d[i] = g * a.d[i];
  return out;
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

}  // namespace smoothfbo
