// SPDX-License-Identifier: MIT
// Prints the lemniscate and bidisc model tables and the P_k gap sequence.
#include <cstdio>

#include "kortile/model_gallery.hpp"
#include "kortile/tilings.hpp"

using namespace kortile;

int main() {
  const auto lem = lemniscate_demo({4, 8, 16, 32}, 1000, 2000);
  std::printf("lemniscate polyhedra P_n in the unit disc\n%6s %14s %14s %8s\n", "n", "area(D\\P_n)", "n*area", "sandwich");
  for (const auto& r : lem.rows) std::printf("%6d %14.6f %14.6f %8s\n", r.n, r.removed_area, r.n * r.removed_area, r.sandwich_ok ? "yes" : "no");
  std::printf("trend: %s (slope %.3f)\n\n", to_string(lem.trend.verdict).c_str(), lem.trend.slope);

  const auto bi = bidisc_demo({2, 4, 8, 16}, BidiscScheme{}, 400'000, 7);
  std::printf("bidisc, n = m^2 diagonal cuts\n%6s %6s %10s %12s %12s\n", "m", "n", "delta", "gap", "sqrt(n)*gap");
  for (const auto& r : bi.rows)
    std::printf("%6d %6lld %10.5f %12.6f %12.4f\n", r.m, r.n, r.delta, r.gap.value, std::sqrt(static_cast<double>(r.n)) * r.gap.value);
  std::printf("trend: %s (slope %.3f)\n\n", to_string(bi.trend.verdict).c_str(), bi.trend.slope);

  std::printf("lattice tilings P_k of the unit box\n%4s %6s %12s %12s %12s\n", "k", "n", "gap", "sqrt(n)*gap", "gap bound");
  IntegrationSpec s;
  s.samples = 400'000;
  for (int k = 1; k <= 4; ++k) {
    const auto rec = AsymptoticRecord::make(sigma_k_count(k), config_gap(pk_configuration(k), s.with_seed(static_cast<std::uint64_t>(k))));
    std::printf("%4d %6lld %12.6f %12.4f %12.4f\n", k, rec.n, rec.gap, rec.sqrt_n_gap, upper_bound_closed(k));
  }
}
