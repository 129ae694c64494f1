#include "lrce/synthetic.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace lrce {

namespace {

constexpr std::array<double, kSyntheticFeatures * 3> kMixing = {
    // t     s1     s2
    1.5,  0.8,  0.3,   //
    1.2,  -0.5, 0.9,   //
    -1.0, 0.6,  0.5,   //
    0.8,  1.0,  -0.6,  //
    1.3,  0.0,  0.7,   //
    -1.1, 0.4,  0.0,   //
};

const double kTScale = std::sqrt(12.0);

using Mat63 = Eigen::Matrix<double, 6, 3, Eigen::RowMajor>;
using Mat36 = Eigen::Matrix<double, 3, 6, Eigen::RowMajor>;

const Mat36& pseudo_inverse() {
  static const Mat36 pinv = [] {
    const Mat63 a = Eigen::Map<const Mat63>(kMixing.data());
    return Mat36((a.transpose() * a).inverse() * a.transpose());
  }();
  return pinv;
}

std::string num(double v) { return format_raw(RawValue(v)); }

}  // namespace

const std::array<double, kSyntheticFeatures * 3>& synthetic_mixing() { return kMixing; }

SyntheticData make_synthetic(std::size_t n, std::uint64_t seed, double noise) {
  if (n == 0) throw DataError("make_synthetic: n must be >= 1");
  if (noise < 0.0) throw DataError("make_synthetic: noise must be >= 0");
  SyntheticData out;
  out.declared.target = "y";
  for (std::size_t j = 0; j < kSyntheticFeatures; ++j) {
    out.declared.features.push_back(FeatureSpec{"x" + std::to_string(j + 1), FeatureKind::kContinuous, {}, 0.0, 1.0});
  }
  out.factors.seed = seed;
  out.factors.noise = noise;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = unif(rng);
    const double s1 = gauss(rng);
    const double s2 = gauss(rng);
    const double tc = (t - 0.5) * kTScale;
    RawRow row;
    for (std::size_t j = 0; j < kSyntheticFeatures; ++j) {
      double v = kMixing[3 * j] * tc + kMixing[3 * j + 1] * s1 + kMixing[3 * j + 2] * s2;
      if (noise > 0.0) v += noise * gauss(rng);
      row.features.emplace_back(v);
    }
    row.target = t;
    out.rows.push_back(std::move(row));
    out.factors.t.push_back(t);
    out.factors.s1.push_back(s1);
    out.factors.s2.push_back(s2);
  }
  return out;
}

RawTable SyntheticData::to_table() const {
  RawTable table;
  for (const auto& f : declared.features) table.columns.push_back(f.name);
  table.columns.push_back(declared.target);
  for (const auto& r : rows) {
    std::vector<std::string> rec;
    for (const auto& v : r.features) rec.push_back(format_raw(v));
    rec.push_back(num(*r.target));
    table.cells.push_back(std::move(rec));
  }
  return table;
}

RawTable SyntheticData::factors_table() const {
  RawTable table;
  table.columns = {"t", "s1", "s2"};
  for (std::size_t i = 0; i < factors.t.size(); ++i) {
    table.cells.push_back({num(factors.t[i]), num(factors.s1[i]), num(factors.s2[i])});
  }
  return table;
}

std::array<double, 3> recover_factors(std::span<const double> raw_features) {
  if (raw_features.size() != kSyntheticFeatures) {
    throw DataError("recover_factors: expected 6 raw features, got " + std::to_string(raw_features.size()));
  }
  const Eigen::Map<const Eigen::Matrix<double, 6, 1>> x(raw_features.data());
  const Eigen::Vector3d f = pseudo_inverse() * x;
  return {f[0] / kTScale + 0.5, f[1], f[2]};
}

}  // namespace lrce
