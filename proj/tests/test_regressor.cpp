#include <doctest.h>

#include <limits>
#include <numeric>

#include "lrce/dataset.hpp"
#include "lrce/regressor.hpp"
#include "lrce/stats.hpp"
#include "lrce/synthetic.hpp"
#include "lrce/training.hpp"
#include "oracles.hpp"

using namespace lrce;

namespace {

struct Split {
  Dataset train, test;
};

Split synthetic_split(std::size_t n, double noise, std::uint64_t seed) {
  const auto s = make_synthetic(n, seed, noise);
  const auto [tr, te] = split_indices(n, 0.8, seed);
  std::vector<RawRow> rows;
  for (auto i : tr) rows.push_back(s.rows[i]);
  const auto schema = fit_schema(s.declared, rows);
  const auto all = encode_dataset(schema, s.rows);
  return {all.subset(tr), all.subset(te)};
}

}  // namespace

TEST_CASE("config validation and JSON") {
  RegressorConfig c;
  c.hidden = {};
  CHECK_THROWS(c.validate());
  RegressorConfig d;
  d.epochs = 7;
  d.seed = 99;
  const auto back = RegressorConfig::from_json(d.to_json());
  CHECK(back.epochs == 7);
  CHECK(back.seed == 99);
  CHECK(back.hidden == d.hidden);
}

TEST_CASE("zero epochs returns the initialized network") {
  const auto s = synthetic_split(300, 0.05, 1);
  RegressorConfig c;
  c.epochs = 0;
  c.seed = 5;
  const auto f = train_regressor(s.train, c, &s.test);
  CHECK(f.network() == init_mlp(make_spec(s.train.width(), c.hidden, 1), 5));
  REQUIRE(f.metadata().test_mse);
  // An untrained network is no better than predicting the mean.
  CHECK(*f.metadata().test_mse > 0.5 * variance(s.test.y));
}

TEST_CASE("same seed gives identical weights") {
  const auto s = synthetic_split(300, 0.05, 2);
  RegressorConfig c;
  c.epochs = 3;
  c.seed = 8;
  CHECK(train_regressor(s.train, c).network() == train_regressor(s.train, c).network());
  auto c2 = c;
  c2.seed = 9;
  CHECK_FALSE(train_regressor(s.train, c).network() == train_regressor(s.train, c2).network());
}

TEST_CASE("noise-free synthetic is learned to small error") {
  const auto s = synthetic_split(2000, 0.0, 3);
  RegressorConfig c;
  c.seed = 3;
  const auto f = train_regressor(s.train, c, &s.test);
  REQUIRE(f.metadata().test_mse);
  CHECK(*f.metadata().test_mse < 1e-3);
  const auto pred = f.predict(s.test.x);
  double ss_res = 0, ss_tot = 0;
  const double mean = std::accumulate(s.test.y.begin(), s.test.y.end(), 0.0) / static_cast<double>(s.test.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ss_res += (pred[i] - s.test.y[i]) * (pred[i] - s.test.y[i]);
    ss_tot += (s.test.y[i] - mean) * (s.test.y[i] - mean);
  }
  CHECK(1.0 - ss_res / ss_tot > 0.99);
  // The least-squares fit on the same features is exact, so the residual
  // above is the network's approximation error alone.
  CHECK(oracle::ols_r2(s.test.x, s.test.y) == doctest::Approx(1.0).epsilon(1e-9));

  std::size_t clamped = 0;
  const auto dt = relabel_with_model(s.train, f, &clamped);
  for (double v : *dt.y_hat) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("prediction is batch-consistent, order-equivariant and stable") {
  const auto s = synthetic_split(300, 0.05, 4);
  RegressorConfig c;
  c.epochs = 2;
  const auto f = train_regressor(s.train, c);
  const auto all = f.predict(s.test.x);
  CHECK(all.size() == s.test.size());
  for (std::size_t i = 0; i < 10; ++i) CHECK(f.predict_one(s.test.x.row(i)) == all[i]);
  std::vector<std::size_t> rev(s.test.size());
  std::iota(rev.rbegin(), rev.rend(), 0);
  const auto reversed = f.predict(s.test.x.select_rows(rev));
  for (std::size_t i = 0; i < rev.size(); ++i) CHECK(reversed[i] == all[rev[i]]);
  CHECK(f.predict(s.test.x) == all);
  CHECK_THROWS_AS(f.predict(Tensor(2, s.test.width() + 1)), ShapeError);
}

TEST_CASE("non-finite loss aborts training") {
  auto s = synthetic_split(200, 0.05, 6);
  for (std::size_t i = 0; i < s.train.x.size(); ++i) s.train.x[i] = 1e300;
  RegressorConfig c;
  c.epochs = 2;
  CHECK_THROWS_AS(train_regressor(s.train, c), TrainingDiverged);
}

TEST_CASE("metadata round trip") {
  RegressorMetadata m;
  m.train_mse = 0.25;
  m.test_mse = 0.5;
  m.config.epochs = 4;
  const auto back = RegressorMetadata::from_json(m.to_json());
  CHECK(back.train_mse == 0.25);
  CHECK(back.test_mse == 0.5);
  CHECK(back.config.epochs == 4);
}
