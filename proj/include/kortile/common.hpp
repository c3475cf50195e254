// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace kortile {

using cplx = std::complex<double>;

/// Tolerance for identities that hold exactly in real arithmetic (group law,
/// dilation algebra, conjugation identities). Relative to the magnitude of the
/// operands; all tests of "exact" identities go through this one constant.
inline constexpr double kAlgebraicTol = 1e-12;

/// Bad input: a precondition of an operation was violated.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numeric procedure failed (non-convergence, degenerate quantity).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const char* what) {
  if (!cond) [[unlikely]] throw ValidationError(what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) [[unlikely]] throw ValidationError(what);
}

inline bool close_rel(double a, double b, double tol = kAlgebraicTol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// A stochastic estimate with its (sample-variance based) standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Real numbers extended by +infinity. Infinity is a flag, not a float
/// sentinel, so it never takes part in arithmetic by accident.
class ExtendedReal {
public:
  constexpr ExtendedReal() = default;
  constexpr explicit ExtendedReal(double v) : value_(v) {}
  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  [[nodiscard]] constexpr bool is_finite() const noexcept { return !infinite_; }
  [[nodiscard]] double value() const {
    if (infinite_) throw NumericError("value() of an infinite ExtendedReal");
    return value_;
  }

  friend constexpr std::partial_ordering operator<=>(const ExtendedReal& a, const ExtendedReal& b) noexcept {
    if (a.infinite_ || b.infinite_) {
      if (a.infinite_ && b.infinite_) return std::partial_ordering::equivalent;
      return a.infinite_ ? std::partial_ordering::greater : std::partial_ordering::less;
    }
    return a.value_ <=> b.value_;
  }
  friend constexpr bool operator==(const ExtendedReal& a, const ExtendedReal& b) noexcept {
    return (a <=> b) == std::partial_ordering::equivalent;
  }

private:
  double value_ = 0.0;
  bool infinite_ = false;
};

/// splitmix64 finalizer; used to derive independent stream seeds.
inline constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Seeded generator. Uniform variates are built from raw engine bits so the
/// stream is identical across standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline unsigned default_thread_count() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1u : n;
}

/// Runs `fn(batch_index)` for every batch, distributing batches over up to
/// `threads` workers. Results come back indexed by batch, so any reduction
/// done in index order is independent of the thread count.
template <class Result, class Fn>
std::vector<Result> run_batches(std::size_t batches, unsigned threads, Fn&& fn) {
  std::vector<Result> out(batches);
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(batches, 1))));
  if (threads == 1) {
    for (std::size_t b = 0; b < batches; ++b) out[b] = fn(b);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t b = t; b < batches; b += threads) out[b] = fn(b);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

/// Per-batch sample moments.
struct Moments {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

/// Plain Monte-Carlo mean of `sample(rng)` over `total` draws, split into
/// deterministic batches (seed derived from `seed` and batch index).
/// Returns the mean and its standard error.
template <class Sampler>
Estimate monte_carlo_mean(std::uint64_t total, std::uint64_t seed, unsigned threads, Sampler&& sample) {
  require(total >= 2, "Monte-Carlo needs at least two samples");
  constexpr std::uint64_t kBatch = 1u << 16;
  const std::size_t batches = static_cast<std::size_t>((total + kBatch - 1) / kBatch);
  auto moments = run_batches<Moments>(batches, threads, [&](std::size_t b) {
    Rng rng(derive_seed(seed, b));
    const std::uint64_t n = std::min<std::uint64_t>(kBatch, total - b * kBatch);
    CompensatedSum s, s2;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double v = sample(rng);
      s += v;
      s2 += v * v;
    }
    return Moments{n, s.value(), s2.value()};
  });
  CompensatedSum s, s2;
  std::uint64_t n = 0;
  for (const auto& m : moments) {
    s += m.sum;
    s2 += m.sum_sq;
    n += m.count;
  }
  const double N = static_cast<double>(n);
  const double mean = s.value() / N;
  const double var = std::max(0.0, (s2.value() / N - mean * mean) * N / (N - 1.0));
  return {mean, std::sqrt(var / N)};
}

}  // namespace kortile
