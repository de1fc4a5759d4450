#pragma once

// Reference computations used only by the tests. They avoid the library's
// quadrature and basis code so that agreement is meaningful.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

// Composite Simpson on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// 1-D cosine mode with its normalizer taken from Simpson integration.
inline double cos_mode(int k, double m, double L) {
  const double h2 = simpson([&](double x) { return std::pow(std::cos(k * std::numbers::pi * x / L), 2); }, 0.0, L);
  return std::cos(k * std::numbers::pi * m / L) / std::sqrt(h2);
}

inline double gauss(double x, double mu, double sd) {
  return std::exp(-0.5 * (x - mu) * (x - mu) / (sd * sd)) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace oracle
