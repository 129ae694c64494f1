#pragma once

#include <span>
#include <vector>

#include "lrce/tensor.hpp"

namespace lrce {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for n < 2
  std::size_t n = 0;
};

MeanSd mean_sd(std::span<const double> values);

/// R^2 of an ordinary least-squares fit (with intercept) of `target` on the
/// columns of `features`.
double linear_probe_r2(const Tensor& features, std::span<const double> target);

double pearson(std::span<const double> a, std::span<const double> b);

double variance(std::span<const double> values);  // population

}  // namespace lrce
