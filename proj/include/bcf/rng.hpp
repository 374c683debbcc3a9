#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace bcf {

// All randomness goes through mt19937_64 plus the helpers below. The standard
// distribution adaptors are implementation-defined, so none of them are used:
// identical seeds must give identical draws on every platform.
using Rng = std::mt19937_64;

// Uniform double in [0, 1), 53 bits.
inline double next_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), unbiased via rejection.
inline std::uint64_t next_below(Rng& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

// Standard normal via Box-Muller.
inline double next_gaussian(Rng& rng) {
  const double u1 = 1.0 - next_unit(rng);  // (0, 1]
  const double u2 = next_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Gamma(shape, 1) by Marsaglia-Tsang, with the usual boost for shape < 1.
inline double next_gamma(Rng& rng, double shape) {
  if (shape <= 0.0) throw std::invalid_argument("next_gamma: shape must be positive");
  if (shape < 1.0) {
    double u = next_unit(rng);
    while (u == 0.0) u = next_unit(rng);
    return next_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = next_gaussian(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = next_unit(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// Symmetric Dirichlet draw of dimension n with concentration conc.
inline std::vector<double> next_dirichlet(Rng& rng, double conc, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& x : out) {
    x = next_gamma(rng, conc);
    total += x;
  }
  for (auto& x : out) x /= total;
  return out;
}

// Draw an index proportional to nonnegative weights.
inline int sample_discrete(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::runtime_error("sample_discrete: weights sum to zero");
  const double u = next_unit(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

// Normalize log-domain weights into a probability vector (max-subtracted).
inline std::vector<double> normalize_log_weights(const std::vector<double>& logw) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double w : logw) mx = std::max(mx, w);
  std::vector<double> out(logw.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    out[i] = std::exp(logw[i] - mx);
    total += out[i];
  }
  for (auto& x : out) x /= total;
  return out;
}

// Draw an index proportional to exp(logw), stable for very negative logs.
inline int sample_from_log_weights(Rng& rng, const std::vector<double>& logw) {
  return sample_discrete(rng, normalize_log_weights(logw));
}

}  // namespace bcf
