#include <doctest.h>

#include <algorithm>
#include <set>

#include "lrce/dataset.hpp"
#include "lrce/schema.hpp"
#include "lrce/synthetic.hpp"
#include "oracles.hpp"

using namespace lrce;

namespace {

FeatureSchema car_schema() {
  FeatureSchema s;
  s.features = {{"km", FeatureKind::kContinuous},
                {"fuel", FeatureKind::kCategorical, {"petrol", "diesel", "CNG"}}};
  s.target = "price";
  return s;
}

std::vector<RawRow> car_rows() {
  return {{{0.0, std::string("petrol")}, 5000.0},
          {{10.0, std::string("diesel")}, 55000.0},
          {{5.0, std::string("CNG")}, 30000.0},
          {{5.0, std::string("diesel")}, 30000.0}};
}

// Predicts whatever was stored for the exact encoded row.
class TablePredictor final : public Predictor {
 public:
  TablePredictor(const Dataset& d, std::vector<double> out) : width_(d.width()), fp_(d.schema_fingerprint) {
    for (std::size_t i = 0; i < d.size(); ++i) table_.emplace_back(std::vector<double>(d.x.row(i).begin(), d.x.row(i).end()), out[i]);
  }
  std::vector<double> predict(const Tensor& x) const override {
    std::vector<double> r;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const std::vector<double> row(x.row(i).begin(), x.row(i).end());
      r.push_back(std::find_if(table_.begin(), table_.end(), [&](const auto& e) { return e.first == row; })->second);
    }
    return r;
  }
  std::size_t input_width() const override { return width_; }
  const std::string& schema_fingerprint() const override { return fp_; }

 private:
  std::size_t width_;
  std::string fp_;
  std::vector<std::pair<std::vector<double>, double>> table_;
};

class ConstantPredictor final : public Predictor {
 public:
  ConstantPredictor(double c, std::size_t w, std::string fp) : c_(c), w_(w), fp_(std::move(fp)) {}
  std::vector<double> predict(const Tensor& x) const override { return std::vector<double>(x.rows(), c_); }
  std::size_t input_width() const override { return w_; }
  const std::string& schema_fingerprint() const override { return fp_; }

 private:
  double c_;
  std::size_t w_;
  std::string fp_;
};

}  // namespace

TEST_CASE("two-point column standardizes to -1 and +1") {
  FeatureSchema s;
  s.features = {{"a", FeatureKind::kContinuous}};
  s.target = "y";
  const std::vector<RawRow> rows = {{{0.0}, 0.0}, {{10.0}, 1.0}};
  const auto fitted = fit_schema(s, rows);
  CHECK(encode_row(fitted, rows[0])[0] == doctest::Approx(-1.0));
  CHECK(encode_row(fitted, rows[1])[0] == doctest::Approx(1.0));
}

TEST_CASE("categorical one-hot and min-max target") {
  const auto fitted = fit_schema(car_schema(), car_rows());
  CHECK(fitted.encoded_width() == 4);
  const auto enc = encode_row(fitted, car_rows()[1]);
  CHECK(std::vector<double>(enc.begin() + 1, enc.end()) == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(fitted.scale_target(5000) == 0.0);
  CHECK(fitted.scale_target(55000) == 1.0);
  CHECK(fitted.scale_target(30000) == doctest::Approx(0.5));
  CHECK(fitted.unscale_target(0.5) == doctest::Approx(30000));
  const auto blocks = fitted.one_hot_blocks();
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].offset == 1);
  CHECK(blocks[0].size == 3);
}

TEST_CASE("encode then decode returns the raw row") {
  const auto fitted = fit_schema(car_schema(), car_rows());
  for (const auto& r : car_rows()) {
    const auto back = decode_row(fitted, encode_row(fitted, r));
    CHECK(std::get<double>(back.features[0]) == doctest::Approx(std::get<double>(r.features[0])).epsilon(1e-9));
    CHECK(std::get<std::string>(back.features[1]) == std::get<std::string>(r.features[1]));
  }
  // decode then encode on an encoded row with a valid one-hot block.
  const std::vector<double> enc = {0.25, 0.0, 0.0, 1.0};
  const auto again = encode_row(fitted, decode_row(fitted, enc));
  for (std::size_t i = 0; i < enc.size(); ++i) CHECK(again[i] == doctest::Approx(enc[i]).epsilon(1e-12));
}

TEST_CASE("encoding errors") {
  const auto fitted = fit_schema(car_schema(), car_rows());
  CHECK_THROWS_AS(encode_row(fitted, RawRow{{1.0, std::string("electric")}, 1.0}), DataError);
  CHECK_THROWS_AS(encode_row(fitted, RawRow{{std::string("x"), std::string("CNG")}, 1.0}), DataError);
  CHECK_THROWS_AS(encode_row(fitted, RawRow{{1.0}, 1.0}), DataError);
  CHECK_THROWS_AS(encode_row(car_schema(), car_rows()[0]), DataError);

  const auto table = parse_csv("km,fuel,price\n1,petrol,10\n,diesel,20\n");
  CHECK_THROWS_AS(parse_rows(car_schema(), table), DataError);
  const auto bad = parse_csv("km,fuel,price\nfast,petrol,10\n");
  CHECK_THROWS_AS(parse_rows(car_schema(), bad), DataError);
}

TEST_CASE("schema validation and fitting guards") {
  auto s = car_schema();
  s.features[1].categories = {"only"};
  CHECK_THROWS_AS(s.validate(), DataError);
  auto dup = car_schema();
  dup.features.push_back({"km"});
  CHECK_THROWS_AS(dup.validate(), DataError);

  const auto one = make_synthetic(1, 3, 0.1);
  CHECK(one.rows.size() == 1);
  CHECK_THROWS_AS(fit_schema(one.declared, one.rows), DataError);
  CHECK_FALSE(car_schema().fitted);
  CHECK(fit_schema(car_schema(), car_rows()).fitted);
}

TEST_CASE("schema JSON round trip keeps the fingerprint") {
  const auto fitted = fit_schema(car_schema(), car_rows());
  const auto back = FeatureSchema::from_json(fitted.to_json());
  CHECK(back.fingerprint() == fitted.fingerprint());
  CHECK(back.features[1].categories == fitted.features[1].categories);
  const auto rows = car_rows();
  CHECK(fitted.fingerprint() != fit_schema(car_schema(), std::span(rows).first(2)).fingerprint());
}

TEST_CASE("inferred schema and CSV parsing") {
  const auto table = parse_csv("a,\"b, quoted\",y\n1.5,x,3\n2,z,4\n");
  CHECK(table.columns[1] == "b, quoted");
  const auto s = infer_schema(table, "y");
  CHECK(s.features[0].kind == FeatureKind::kContinuous);
  CHECK(s.features[1].kind == FeatureKind::kCategorical);
  const auto rows = parse_rows(s, table);
  const auto fitted = fit_schema(s, rows);
  CHECK(fitted.features[1].categories == std::vector<std::string>{"x", "z"});
}

TEST_CASE("trimming drops exactly floor(n*f/2) rows per side") {
  std::vector<RawRow> rows;
  for (int i = 0; i < 100; ++i) rows.push_back({{static_cast<double>(i)}, static_cast<double>((i * 37) % 100)});
  const auto kept = trim_extremes(rows, 0.1);
  CHECK(kept.size() == 90);
  CHECK(std::is_sorted(kept.begin(), kept.end()));
  double lo = 1e9, hi = -1e9;
  for (auto i : kept) {
    lo = std::min(lo, *rows[i].target);
    hi = std::max(hi, *rows[i].target);
  }
  CHECK(lo == 5.0);
  CHECK(hi == 94.0);

  std::vector<RawRow> kept_rows;
  for (auto i : kept) kept_rows.push_back(rows[i]);
  FeatureSchema s;
  s.features = {{"a"}};
  s.target = "y";
  const auto fitted = fit_schema(s, kept_rows);
  CHECK(fitted.target_min == 5.0);
  CHECK(fitted.target_max == 94.0);

  CHECK(trim_extremes(std::span(rows).first(19), 0.1).size() == 19);
  CHECK(trim_extremes(std::span(rows).first(20), 0.1).size() == 18);
}

TEST_CASE("test encoding uses training statistics only") {
  const auto synth = make_synthetic(400, 5, 0.1);
  const auto [tr, te] = split_indices(synth.rows.size(), 0.8, 5);
  std::vector<RawRow> train_rows, test_rows;
  for (auto i : tr) train_rows.push_back(synth.rows[i]);
  for (auto i : te) test_rows.push_back(synth.rows[i]);
  const auto schema = fit_schema(synth.declared, train_rows);
  const auto refit = fit_schema(synth.declared, test_rows);
  CHECK(schema.features[0].mean != refit.features[0].mean);
  CHECK(schema.fingerprint() != refit.fingerprint());
  const auto enc = encode_dataset(schema, test_rows);
  const auto expect = (std::get<double>(test_rows[0].features[0]) - schema.features[0].mean) / schema.features[0].stddev;
  CHECK(enc.x.at(0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("targets outside the training range are clamped") {
  const auto fitted = fit_schema(car_schema(), car_rows());
  std::size_t clamped = 0;
  const auto d = encode_dataset(fitted, std::vector<RawRow>{{{1.0, std::string("CNG")}, 90000.0}}, &clamped);
  CHECK(clamped == 1);
  CHECK(d.y[0] == 1.0);
}

TEST_CASE("one-hot blocks sum to one and the width adds up") {
  const auto fitted = fit_schema(car_schema(), car_rows());
  const auto d = encode_dataset(fitted, car_rows());
  CHECK(d.width() == 1 + 3);
  for (std::size_t r = 0; r < d.size(); ++r) {
    double s = 0;
    for (std::size_t c = 1; c < 4; ++c) s += d.x.at(r, c);
    CHECK(s == 1.0);
    CHECK(d.y[r] >= 0.0);
    CHECK(d.y[r] <= 1.0);
  }
}

TEST_CASE("project_one_hot picks the argmax") {
  const auto fitted = fit_schema(car_schema(), car_rows());
  std::vector<double> row = {0.3, 0.2, -0.1, 0.7};
  project_one_hot(fitted, row);
  CHECK(row == std::vector<double>{0.3, 0.0, 0.0, 1.0});
}

TEST_CASE("split sizes, determinism and disjointness") {
  const auto [a, b] = split_indices(25000, 0.8, 1);
  CHECK(a.size() == 20000);
  CHECK(b.size() == 5000);
  std::set<std::size_t> all(a.begin(), a.end());
  for (auto i : b) CHECK(all.insert(i).second);
  CHECK(all.size() == 25000);
  CHECK(*all.rbegin() == 24999);
  CHECK(split_indices(25000, 0.8, 1) == std::make_pair(a, b));
  CHECK(split_indices(25000, 0.8, 2).first != a);

  const auto [x, y] = split_indices(2, 0.5, 0);
  CHECK(x.size() == 1);
  CHECK(y.size() == 1);
  CHECK_THROWS_AS(split_indices(1, 0.5, 0), DataError);
  CHECK_THROWS_AS(split_indices(10, 1.0, 0), DataError);
  CHECK_THROWS_AS(split_indices(10, 0.0, 0), DataError);
}

TEST_CASE("relabeling with perfect and constant regressors") {
  const auto fitted = fit_schema(car_schema(), car_rows());
  const auto d = encode_dataset(fitted, car_rows());
  const TablePredictor perfect(d, d.y);
  const auto dt = relabel_with_model(d, perfect);
  REQUIRE(dt.y_hat);
  CHECK(*dt.y_hat == d.y);
  CHECK(dt.y == d.y);
  CHECK(&dt.labels() == &*dt.y_hat);

  const ConstantPredictor c(0.37, d.width(), d.schema_fingerprint);
  const auto dc = relabel_with_model(d, c);
  for (double v : *dc.y_hat) CHECK(v == 0.37);

  std::size_t clamped = 0;
  const ConstantPredictor over(1.4, d.width(), d.schema_fingerprint);
  const auto dover = relabel_with_model(d, over, &clamped);
  CHECK(clamped == d.size());
  for (double v : *dover.y_hat) CHECK(v == 1.0);

  const ConstantPredictor other(0.5, d.width(), "not-this-schema");
  CHECK_THROWS_AS(relabel_with_model(d, other), SchemaMismatch);
}

TEST_CASE("synthetic generator") {
  const auto a = make_synthetic(300, 9, 0.05);
  const auto b = make_synthetic(300, 9, 0.05);
  CHECK(a.factors.t == b.factors.t);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].features == b.rows[i].features);
  CHECK(a.declared.features.size() == kSyntheticFeatures);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(*a.rows[i].target == a.factors.t[i]);
  CHECK_THROWS_AS(make_synthetic(0, 1, 0.0), DataError);
}

TEST_CASE("noise-free synthetic rows determine t linearly") {
  const auto s = make_synthetic(500, 4, 0.0);
  Tensor x(s.rows.size(), kSyntheticFeatures);
  for (std::size_t r = 0; r < s.rows.size(); ++r) {
    for (std::size_t c = 0; c < kSyntheticFeatures; ++c) x.at(r, c) = std::get<double>(s.rows[r].features[c]);
  }
  CHECK(oracle::ols_r2(x, s.factors.t) == doctest::Approx(1.0).epsilon(1e-10));
  for (std::size_t r = 0; r < 20; ++r) {
    const auto f = recover_factors(x.row(r));
    CHECK(f[0] == doctest::Approx(s.factors.t[r]).epsilon(1e-9));
    CHECK(f[1] == doctest::Approx(s.factors.s1[r]).epsilon(1e-9));
    CHECK(f[2] == doctest::Approx(s.factors.s2[r]).epsilon(1e-9));
  }
}

TEST_CASE("synthetic tables round-trip through CSV") {
  const auto s = make_synthetic(20, 2, 0.1);
  const auto table = parse_csv([&] {
    std::string text;
    const auto t = s.to_table();
    for (std::size_t c = 0; c < t.columns.size(); ++c) text += (c ? "," : "") + t.columns[c];
    text += "\n";
    for (const auto& row : t.cells) {
      for (std::size_t c = 0; c < row.size(); ++c) text += (c ? "," : "") + row[c];
      text += "\n";
    }
    return text;
  }());
  const auto rows = parse_rows(infer_schema(table, "y"), table);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].features == s.rows[i].features);
    CHECK(*rows[i].target == *s.rows[i].target);
  }
}
