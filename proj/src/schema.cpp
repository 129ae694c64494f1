#include "lrce/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "lrce/hash.hpp"

namespace lrce {

namespace {

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && issp(s.back())) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && issp(s[b])) ++b;
  return s.substr(b);
}

const char* kind_name(FeatureKind k) { return k == FeatureKind::kContinuous ? "continuous" : "categorical"; }

}  // namespace

void FeatureSchema::validate() const {
  std::set<std::string> names;
  for (const auto& f : features) {
    if (f.name.empty()) throw DataError("feature with empty name");
    if (!names.insert(f.name).second) throw DataError("duplicate feature name '" + f.name + "'");
    if (f.kind == FeatureKind::kCategorical && (fitted || !f.categories.empty()) && f.categories.size() < 2) {
      throw DataError("categorical feature '" + f.name + "' needs at least 2 categories");
    }
  }
  if (target.empty()) throw DataError("schema has no target column");
  if (names.count(target)) throw DataError("target '" + target + "' is also listed as a feature");
  if (features.empty()) throw DataError("schema has no features");
}

std::size_t FeatureSchema::encoded_width() const {
  std::size_t w = 0;
  for (const auto& f : features) w += f.kind == FeatureKind::kContinuous ? 1 : f.categories.size();
  return w;
}

std::vector<OneHotBlock> FeatureSchema::one_hot_blocks() const {
  std::vector<OneHotBlock> blocks;
  std::size_t offset = 0;
  for (const auto& f : features) {
    if (f.kind == FeatureKind::kContinuous) {
      ++offset;
    } else {
      blocks.push_back({offset, f.categories.size()});
      offset += f.categories.size();
    }
  }
  return blocks;
}

std::size_t FeatureSchema::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  throw DataError("unknown feature '" + name + "'");
}

double FeatureSchema::scale_target(double raw) const {
  const double span = target_max - target_min;
  return span > 0.0 ? (raw - target_min) / span : 0.0;
}

double FeatureSchema::unscale_target(double scaled) const {
  return target_min + scaled * (target_max - target_min);
}

std::string FeatureSchema::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json().dump())));
  return buf;
}

nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json j;
  j["target"] = target;
  j["fitted"] = fitted;
  if (fitted) {
    j["target_min"] = target_min;
    j["target_max"] = target_max;
  }
  nlohmann::json fs = nlohmann::json::array();
  for (const auto& f : features) {
    nlohmann::json jf{{"name", f.name}, {"kind", kind_name(f.kind)}};
    if (f.kind == FeatureKind::kCategorical) {
      jf["categories"] = f.categories;
    } else if (fitted) {
      jf["mean"] = f.mean;
      jf["std"] = f.stddev;
    }
    fs.push_back(std::move(jf));
  }
  j["features"] = std::move(fs);
  return j;
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& j) {
  FeatureSchema s;
  try {
    s.target = j.at("target").get<std::string>();
    s.fitted = j.value("fitted", false);
    if (s.fitted) {
      s.target_min = j.at("target_min").get<double>();
      s.target_max = j.at("target_max").get<double>();
    }
    for (const auto& jf : j.at("features")) {
      FeatureSpec f;
      f.name = jf.at("name").get<std::string>();
      const auto kind = jf.value("kind", std::string("continuous"));
      if (kind == "continuous") {
        f.kind = FeatureKind::kContinuous;
        if (s.fitted) {
          f.mean = jf.at("mean").get<double>();
          f.stddev = jf.at("std").get<double>();
        }
      } else if (kind == "categorical") {
        f.kind = FeatureKind::kCategorical;
        f.categories = jf.value("categories", std::vector<std::string>{});
      } else {
        throw DataError("feature '" + f.name + "' has unknown kind '" + kind + "'");
      }
      s.features.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed schema JSON: ") + e.what());
  }
  s.validate();
  return s;
}

std::size_t RawTable::column_index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw DataError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

RawTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(trim(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    if (!record.empty() || field_started || !field.empty()) {
      end_field();
      records.push_back(std::move(record));
    }
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
      field_started = true;
    } else if (c == '\n') {
      end_record();
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw DataError("CSV ends inside a quoted field");
  end_record();

  if (records.empty()) throw DataError("CSV is empty (no header row)");
  RawTable table;
  table.columns = std::move(records.front());
  if (!table.columns.empty() && table.columns[0].rfind("\xEF\xBB\xBF", 0) == 0) {
    table.columns[0].erase(0, 3);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.columns.size()) {
      throw DataError("CSV row " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                      " fields, header has " + std::to_string(table.columns.size()));
    }
    table.cells.push_back(std::move(records[r]));
  }
  return table;
}

RawTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open CSV '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

void write_csv(const std::string& path, const RawTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  auto emit = [&](const std::vector<std::string>& rec) {
    for (std::size_t i = 0; i < rec.size(); ++i) {
      if (i) out << ',';
      const auto& f = rec[i];
      if (f.find_first_of(",\"\n") != std::string::npos) {
        out << '"';
        for (char c : f) {
          if (c == '"') out << '"';
          out << c;
        }
        out << '"';
      } else {
        out << f;
      }
    }
    out << '\n';
  };
  emit(table.columns);
  for (const auto& rec : table.cells) emit(rec);
}

FeatureSchema infer_schema(const RawTable& table, const std::string& target) {
  FeatureSchema schema;
  schema.target = target;
  table.column_index(target);
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (table.columns[c] == target) continue;
    FeatureSpec f;
    f.name = table.columns[c];
    const bool numeric = std::all_of(table.cells.begin(), table.cells.end(),
                                     [&](const auto& row) { return parse_number(row[c]).has_value(); });
    f.kind = numeric && !table.cells.empty() ? FeatureKind::kContinuous : FeatureKind::kCategorical;
    schema.features.push_back(std::move(f));
  }
  schema.validate();
  return schema;
}

std::vector<RawRow> parse_rows(const FeatureSchema& schema, const RawTable& table, bool require_target) {
  std::vector<std::size_t> cols;
  for (const auto& f : schema.features) cols.push_back(table.column_index(f.name));
  std::optional<std::size_t> target_col;
  if (require_target) {
    target_col = table.column_index(schema.target);
  } else if (std::find(table.columns.begin(), table.columns.end(), schema.target) != table.columns.end()) {
    target_col = table.column_index(schema.target);
  }

  std::vector<RawRow> rows;
  rows.reserve(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& rec = table.cells[r];
    RawRow row;
    for (std::size_t i = 0; i < schema.features.size(); ++i) {
      const auto& f = schema.features[i];
      const std::string& cell = rec[cols[i]];
      if (cell.empty()) {
        throw DataError("row " + std::to_string(r + 1) + ": missing value for '" + f.name + "'");
      }
      if (f.kind == FeatureKind::kContinuous) {
        auto v = parse_number(cell);
        if (!v) {
          throw DataError("row " + std::to_string(r + 1) + ": non-numeric value '" + cell +
                          "' for continuous feature '" + f.name + "'");
        }
        row.features.emplace_back(*v);
      } else {
        row.features.emplace_back(cell);
      }
    }
    if (target_col) {
      const std::string& cell = rec[*target_col];
      auto v = parse_number(cell);
      if (!v) throw DataError("row " + std::to_string(r + 1) + ": target '" + cell + "' is not numeric");
      row.target = *v;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

FeatureSchema fit_schema(const FeatureSchema& declared, std::span<const RawRow> rows) {
  declared.validate();
  if (rows.size() < 2) throw DataError("fit_schema needs at least 2 rows, got " + std::to_string(rows.size()));
  FeatureSchema s = declared;
  const double n = static_cast<double>(rows.size());
  for (std::size_t i = 0; i < s.features.size(); ++i) {
    auto& f = s.features[i];
    if (f.kind == FeatureKind::kContinuous) {
      double sum = 0.0;
      for (const auto& r : rows) sum += std::get<double>(r.features.at(i));
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto& r : rows) {
        const double d = std::get<double>(r.features.at(i)) - mean;
        ss += d * d;
      }
      const double sd = std::sqrt(ss / n);
      f.mean = mean;
      f.stddev = sd > 0.0 ? sd : 1.0;
    } else if (f.categories.empty()) {
      std::set<std::string> seen;
      for (const auto& r : rows) seen.insert(std::get<std::string>(r.features.at(i)));
      f.categories.assign(seen.begin(), seen.end());
    }
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& r : rows) {
    if (!r.target) throw DataError("fit_schema: row without target");
    lo = std::min(lo, *r.target);
    hi = std::max(hi, *r.target);
  }
  s.target_min = lo;
  s.target_max = hi;
  s.fitted = true;
  s.validate();
  return s;
}

std::vector<std::size_t> trim_extremes(std::span<const RawRow> rows, double fraction) {
  if (fraction < 0.0 || fraction >= 1.0) throw DataError("trim fraction must be in [0,1)");
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  for (const auto& r : rows) {
    if (!r.target) throw DataError("trim_extremes: row without target");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return *rows[a].target < *rows[b].target; });
  const auto per_side = static_cast<std::size_t>(std::floor(static_cast<double>(rows.size()) * fraction / 2.0));
  std::vector<std::size_t> kept(order.begin() + static_cast<std::ptrdiff_t>(per_side),
                                order.end() - static_cast<std::ptrdiff_t>(per_side));
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<double> encode_row(const FeatureSchema& schema, const RawRow& row) {
  if (!schema.fitted) throw DataError("encode: schema has not been fitted");
  if (row.features.size() != schema.features.size()) {
    throw DataError("encode: row has " + std::to_string(row.features.size()) + " features, schema has " +
                    std::to_string(schema.features.size()));
  }
  std::vector<double> out;
  out.reserve(schema.encoded_width());
  for (std::size_t i = 0; i < schema.features.size(); ++i) {
    const auto& f = schema.features[i];
    if (f.kind == FeatureKind::kContinuous) {
      const double* v = std::get_if<double>(&row.features[i]);
      if (!v) throw DataError("encode: feature '" + f.name + "' expects a number");
      if (!std::isfinite(*v)) throw DataError("encode: feature '" + f.name + "' is not finite");
      out.push_back((*v - f.mean) / f.stddev);
    } else {
      const std::string* c = std::get_if<std::string>(&row.features[i]);
      if (!c) throw DataError("encode: feature '" + f.name + "' expects a category label");
      auto it = std::find(f.categories.begin(), f.categories.end(), *c);
      if (it == f.categories.end()) {
        throw DataError("encode: unknown category '" + *c + "' for feature '" + f.name + "'");
      }
      for (std::size_t k = 0; k < f.categories.size(); ++k) {
        out.push_back(static_cast<std::size_t>(it - f.categories.begin()) == k ? 1.0 : 0.0);
      }
    }
  }
  return out;
}

RawRow decode_row(const FeatureSchema& schema, std::span<const double> encoded) {
  if (encoded.size() != schema.encoded_width()) {
    throw DataError("decode: encoded row has width " + std::to_string(encoded.size()) + ", schema expects " +
                    std::to_string(schema.encoded_width()));
  }
  RawRow row;
  std::size_t offset = 0;
  for (const auto& f : schema.features) {
    if (f.kind == FeatureKind::kContinuous) {
      row.features.emplace_back(encoded[offset] * f.stddev + f.mean);
      ++offset;
    } else {
      const auto block = encoded.subspan(offset, f.categories.size());
      const auto best = std::max_element(block.begin(), block.end()) - block.begin();
      row.features.emplace_back(f.categories[static_cast<std::size_t>(best)]);
      offset += f.categories.size();
    }
  }
  return row;
}

void project_one_hot(const FeatureSchema& schema, std::span<double> encoded) {
  for (const auto& b : schema.one_hot_blocks()) {
    auto block = encoded.subspan(b.offset, b.size);
    const auto best = std::max_element(block.begin(), block.end()) - block.begin();
    for (std::size_t k = 0; k < b.size; ++k) block[k] = static_cast<std::ptrdiff_t>(k) == best ? 1.0 : 0.0;
  }
}

std::string format_raw(const RawValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(v));
  return buf;
}

}  // namespace lrce
