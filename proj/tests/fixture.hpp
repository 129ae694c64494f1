#pragma once
// A small trained pipeline on the synthetic table, built once per test
// binary. Big enough for behavioural checks, far smaller than the
// acceptance run.

#include <array>
#include <vector>

#include "lrce/dataset.hpp"
#include "lrce/disentangle.hpp"
#include "lrce/gdl.hpp"
#include "lrce/regressor.hpp"
#include "lrce/synthetic.hpp"

namespace fixture {

struct Small {
  lrce::SyntheticData synth;
  lrce::FeatureSchema schema;
  std::vector<std::size_t> train_idx, test_idx;
  lrce::Dataset train, test;  // test is relabeled too
  lrce::Dataset dt;
  std::optional<lrce::TrainedRegressor> f;
  lrce::DisentangledModel model;
  lrce::GdlBaseline gdl;

  std::array<double, 3> factors(std::size_t test_row) const {
    const auto i = test_idx[test_row];
    return {synth.factors.t[i], synth.factors.s1[i], synth.factors.s2[i]};
  }
};

inline const Small& small() {
  static const Small s = [] {
    Small s;
    s.synth = lrce::make_synthetic(2000, 11, 0.05);
    std::tie(s.train_idx, s.test_idx) = lrce::split_indices(s.synth.rows.size(), 0.8, 11);
    std::vector<lrce::RawRow> tr;
    for (auto i : s.train_idx) tr.push_back(s.synth.rows[i]);
    s.schema = lrce::fit_schema(s.synth.declared, tr);
    const auto all = lrce::encode_dataset(s.schema, s.synth.rows);
    s.train = all.subset(s.train_idx);
    lrce::RegressorConfig rc;
    rc.epochs = 40;
    rc.seed = 11;
    s.f = lrce::train_regressor(s.train, rc);
    s.dt = lrce::relabel_with_model(s.train, *s.f);
    s.test = lrce::relabel_with_model(all.subset(s.test_idx), *s.f);
    lrce::TrainConfig tc;
    tc.epochs = 40;
    tc.seed = 11;
    s.model = lrce::train_disentangled(s.dt, tc);
    lrce::GdlTrainConfig gc;
    gc.epochs = 30;
    gc.seed = 11;
    s.gdl = lrce::train_gdl_baseline(s.dt, gc);
    return s;
  }();
  return s;
}

inline std::vector<double> row(const lrce::Tensor& x, std::size_t r) { return {x.row(r).begin(), x.row(r).end()}; }

}  // namespace fixture
