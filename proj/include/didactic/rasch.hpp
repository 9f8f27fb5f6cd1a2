#pragma once

// Rasch (one-parameter logistic) solving probability and seeded attempts.
// lambda plays the role of the item discrimination.

#include <cmath>
#include <cstdint>
#include <random>

#include "didactic/integrator.hpp"
#include "didactic/model.hpp"

namespace didactic {

/// p = 1 / (1 + exp(-lambda (z - theta))), evaluated without overflow for
/// arbitrarily large |lambda (z - theta)|.
inline double solve_probability(double z, double theta, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be > 0");
  const double x = lambda * (z - theta);
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Seedable generator with a fixed, documented algorithm (64-bit Mersenne
/// Twister, std::mt19937_64) and a uniform mapping that does not depend on
/// the standard library's distribution implementation.
class Rng {
 public:
  static constexpr const char* name = "mt19937_64/u53-v1";

  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform double in [0, 1) from the top 53 bits of one engine draw.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Bernoulli draw: solved iff u < p.
inline AttemptRecord attempt(double z, double theta, double lambda, Rng& rng, double t = 0.0,
                             std::size_t task_index = 0) {
  AttemptRecord r;
  r.t = t;
  r.task_index = task_index;
  r.theta = theta;
  r.z_at_attempt = z;
  r.probability = solve_probability(z, theta, lambda);
  r.solved = rng.uniform() < r.probability;
  return r;
}

}  // namespace didactic
