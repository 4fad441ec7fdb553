// Global-best particle swarm minimizer over a box.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <thread>
#include <utility>
#include <vector>

#include "perchsim/common.hpp"
#include "perchsim/rng.hpp"

namespace perchsim::pso {

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct PsoConfig {
  std::size_t particles = 40;
  std::size_t iterations = 200;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  double max_speed_fraction = 0.5;  // velocity clamp as a fraction of each box width
  std::vector<Bounds> bounds;
  std::uint64_t seed = 1;
  unsigned workers = 1;  // threads for cost evaluation; results do not depend on it
};

struct PsoResult {
  std::vector<double> best_x;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<double> history;  // global best after each iteration
  std::vector<std::vector<double>> best_x_history;  // matching best positions
};

using CostFn = std::function<double(std::span<const double>)>;

inline void validate(const PsoConfig& cfg) {
  if (cfg.particles < 2) throw DomainError("swarm needs at least two particles");
  if (!(cfg.inertia > 0.0 && cfg.inertia < 1.0)) throw DomainError("inertia weight must lie in (0, 1)");
  if (!(cfg.cognitive > 0.0 && cfg.social > 0.0)) throw DomainError("acceleration coefficients must be positive");
  if (cfg.bounds.empty()) throw DomainError("empty search box");
  for (const Bounds& b : cfg.bounds)
    if (!(b.lo < b.hi)) throw DomainError("each bound needs lo < hi");
}

namespace detail {

/// Folds x back into [lo, hi] by mirror reflection; flips v on each bounce.
inline void reflect(double& x, double& v, Bounds b) {
  const double w = b.hi - b.lo;
  for (int guard = 0; (x < b.lo || x > b.hi) && guard < 64; ++guard) {
    if (x < b.lo) x = 2.0 * b.lo - x;
    if (x > b.hi) x = 2.0 * b.hi - x;
    v = -v;
  }
  if (x < b.lo || x > b.hi) x = b.lo + std::fmod(std::abs(x - b.lo), w);
}

inline double checked(const CostFn& cost, std::span<const double> x) {
  const double c = cost(x);
  if (!std::isfinite(c)) {
    std::ostringstream msg;
    msg << "non-finite cost at x = [";
    for (std::size_t i = 0; i < x.size(); ++i) msg << (i ? ", " : "") << x[i];
    msg << "]";
    throw CostError(msg.str());
  }
  return c;
}

/// Costs of all positions, evaluated on up to `workers` threads. The first
/// failure by particle index is rethrown.
inline std::vector<double> evaluate_all(const CostFn& cost, const std::vector<std::vector<double>>& x,
                                        unsigned workers) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  std::vector<std::exception_ptr> errors(n);
  const auto run = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < n; i += stride) {
      try {
        out[i] = checked(cost, x[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(std::max(1u, workers), n);
  if (threads <= 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(run, w, threads);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace detail

/// Each particle draws from its own stream (seed, particle index), so the
/// result does not depend on the order in which particles are evaluated.
/// Ties on cost go to the lower particle index.
inline PsoResult pso_minimize(const CostFn& cost, const PsoConfig& cfg) {
  validate(cfg);
  const std::size_t dim = cfg.bounds.size();
  const std::size_t n = cfg.particles;

  std::vector<RandomStream> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.emplace_back(cfg.seed, i);

  std::vector<std::vector<double>> x(n, std::vector<double>(dim));
  std::vector<std::vector<double>> v(n, std::vector<double>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      const Bounds b = cfg.bounds[d];
      x[i][d] = streams[i].uniform(b.lo, b.hi);
      v[i][d] = streams[i].uniform(-1.0, 1.0) * 0.1 * (b.hi - b.lo);
    }
  }
  std::vector<std::vector<double>> pbest = x;
  std::vector<double> pbest_cost = detail::evaluate_all(cost, x, cfg.workers);

  PsoResult out;
  const auto update_global = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      if (pbest_cost[i] < out.best_cost) {
        out.best_cost = pbest_cost[i];
        out.best_x = pbest[i];
      }
    }
  };
  update_global();

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const std::vector<double> g = out.best_x;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const Bounds b = cfg.bounds[d];
        const double vmax = cfg.max_speed_fraction * (b.hi - b.lo);
        const double r1 = streams[i].uniform();
        const double r2 = streams[i].uniform();
        double vel = cfg.inertia * v[i][d] + cfg.cognitive * r1 * (pbest[i][d] - x[i][d]) +
                     cfg.social * r2 * (g[d] - x[i][d]);
        vel = std::clamp(vel, -vmax, vmax);
        double pos = x[i][d] + vel;
        detail::reflect(pos, vel, b);
        x[i][d] = pos;
        v[i][d] = vel;
      }
    }
    const std::vector<double> c = detail::evaluate_all(cost, x, cfg.workers);
    for (std::size_t i = 0; i < n; ++i) {
      if (c[i] < pbest_cost[i]) {
        pbest_cost[i] = c[i];
        pbest[i] = x[i];
      }
    }
    update_global();
    out.history.push_back(out.best_cost);
    out.best_x_history.push_back(out.best_x);
  }
  return out;
}

}  // namespace perchsim::pso
