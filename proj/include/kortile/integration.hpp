// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "kortile/common.hpp"

namespace kortile {

enum class IntegrationMethod { monte_carlo, grid };

/// Sample budget and reproducibility settings shared by all integrators.
/// For `grid`, `grid_resolution` points per axis are used in each local box.
struct IntegrationSpec {
  IntegrationMethod method = IntegrationMethod::monte_carlo;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  std::optional<int> grid_resolution;
  unsigned threads = 1;

  void validate(std::uint64_t min_samples = 2) const {
    if (method == IntegrationMethod::grid) {
      require(grid_resolution.has_value() && *grid_resolution >= 1, "grid integration needs grid_resolution >= 1");
    } else {
      if (samples < min_samples) throw ValidationError("sample budget below minimum of " + std::to_string(min_samples));
    }
  }

  [[nodiscard]] IntegrationSpec with_seed(std::uint64_t s) const {
    IntegrationSpec out = *this;
    out.seed = s;
    return out;
  }
};

inline void to_json(nlohmann::json& j, const IntegrationSpec& s) {
  j = nlohmann::json{{"method", s.method == IntegrationMethod::grid ? "grid" : "monte_carlo"},
                     {"samples", s.samples},
                     {"seed", s.seed}};
  if (s.grid_resolution) j["grid_resolution"] = *s.grid_resolution;
}

inline void from_json(const nlohmann::json& j, IntegrationSpec& s) {
  const std::string m = j.value("method", std::string("monte_carlo"));
  if (m == "grid")
    s.method = IntegrationMethod::grid;
  else if (m == "monte_carlo")
    s.method = IntegrationMethod::monte_carlo;
  else
    throw ValidationError("unknown integration method: " + m);
  s.samples = j.value("samples", s.samples);
  s.seed = j.value("seed", s.seed);
  if (j.contains("grid_resolution")) s.grid_resolution = j.at("grid_resolution").get<int>();
}

}  // namespace kortile
