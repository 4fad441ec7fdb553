// Fixed-step Runge-Kutta integration over std::array states.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace perchsim {

template <std::size_t N>
using StateVec = std::array<double, N>;

template <std::size_t N>
constexpr StateVec<N> axpy(const StateVec<N>& y, double a, const StateVec<N>& x) {
  StateVec<N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + a * x[i];
  return out;
}

/// One classical RK4 step. `f(t, y)` returns dy/dt.
template <std::size_t N, class Deriv>
StateVec<N> rk4_step(const StateVec<N>& y, double t, double h, Deriv&& f) {
  const StateVec<N> k1 = f(t, y);
  const StateVec<N> k2 = f(t + 0.5 * h, axpy(y, 0.5 * h, k1));
  const StateVec<N> k3 = f(t + 0.5 * h, axpy(y, 0.5 * h, k2));
  const StateVec<N> k4 = f(t + h, axpy(y, h, k3));
  StateVec<N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

template <std::size_t N>
bool all_finite(const StateVec<N>& y) {
  for (double v : y)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace perchsim
