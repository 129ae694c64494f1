#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lrce/schema.hpp"

namespace lrce {

/// Hidden generating factors of a synthetic table: t drives the label,
/// s1 and s2 are label-irrelevant style factors.
struct SyntheticFactors {
  std::vector<double> t;
  std::vector<double> s1;
  std::vector<double> s2;
  std::uint64_t seed = 0;
  double noise = 0.0;
};

struct SyntheticData {
  FeatureSchema declared;  // six continuous features x1..x6, target y; unfitted
  std::vector<RawRow> rows;
  SyntheticFactors factors;

  RawTable to_table() const;
  RawTable factors_table() const;
};

inline constexpr std::size_t kSyntheticFeatures = 6;

/// x = A [ (t - 0.5) * sqrt(12), s1, s2 ] + noise * N(0, 1), y = t with
/// t ~ U(0, 1) and s1, s2 ~ N(0, 1). A is a fixed full-rank 6x3 map whose
/// label column dominates, so label information is spread over every
/// feature.
SyntheticData make_synthetic(std::size_t n, std::uint64_t seed, double noise);

/// The fixed mixing map, row-major 6x3.
const std::array<double, kSyntheticFeatures * 3>& synthetic_mixing();

/// Least-squares inverse of the mixing map applied to one raw feature row:
/// returns {t, s1, s2}. Exact when the row was generated without noise.
std::array<double, 3> recover_factors(std::span<const double> raw_features);

}  // namespace lrce
