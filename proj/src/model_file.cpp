#include "lrce/model_file.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace lrce {

namespace {

constexpr std::array<char, 8> kMagic = {'L', 'R', 'C', 'E', 'M', 'D', 'L', '\0'};
constexpr std::size_t kPreambleSize = 8 + 4 + 4 + 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

void put_tensor(std::vector<std::uint8_t>& out, const Tensor& t) {
  for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

Tensor get_tensor(const std::uint8_t*& p, const std::uint8_t* end, Shape shape) {
  const std::size_t n = shape_numel(shape);
  if (static_cast<std::size_t>(end - p) < n * 8) {
    throw ModelFormatError(ModelFormatError::Kind::kTruncated, "model file truncated in weight payload");
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i, p += 8) data[i] = std::bit_cast<double>(get_u64(p));
  return Tensor::from_data(std::move(shape), std::move(data));
}

}  // namespace

bool ModelParams::has(std::string_view name) const {
  return std::any_of(sections.begin(), sections.end(), [&](const auto& s) { return s.name == name; });
}

const Mlp& ModelParams::section(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return s.net;
  }
  throw ModelFormatError(ModelFormatError::Kind::kMissingSection,
                         "model file has no section '" + std::string(name) + "'");
}

void ModelParams::put(std::string name, Mlp net) {
  for (auto& s : sections) {
    if (s.name == name) {
      s.net = std::move(net);
      return;
    }
  }
  sections.push_back(ModelSection{std::move(name), std::move(net)});
}

std::vector<std::uint8_t> serialize_params(const ModelParams& params) {
  nlohmann::json header;
  header["format"] = kModelFormatName;
  header["version"] = kModelFormatVersion;
  header["schema_fingerprint"] = params.schema_fingerprint;
  header["metadata"] = params.metadata;
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& s : params.sections) {
    sections.push_back({{"name", s.name},
                        {"widths", s.net.spec.widths},
                        {"output", to_string(s.net.spec.output)},
                        {"values", s.net.parameter_count()}});
  }
  header["sections"] = sections;
  const std::string header_text = header.dump();

  std::vector<std::uint8_t> payload;
  for (const auto& s : params.sections) {
    for (std::size_t l = 0; l < s.net.weights.size(); ++l) {
      put_tensor(payload, s.net.weights[l]);
      put_tensor(payload, s.net.biases[l]);
    }
  }

  std::vector<std::uint8_t> out;
  out.reserve(kPreambleSize + header_text.size() + payload.size() + 8);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u32(out, kModelFormatVersion);
  put_u32(out, 0);
  put_u64(out, header_text.size());
  out.insert(out.end(), header_text.begin(), header_text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  const std::string_view payload_view(reinterpret_cast<const char*>(payload.data()), payload.size());
  put_u64(out, fnv1a64(payload_view));
  return out;
}

ModelParams deserialize_params(const std::vector<std::uint8_t>& bytes) {
  using Kind = ModelFormatError::Kind;
  if (bytes.size() < kPreambleSize) throw ModelFormatError(Kind::kTruncated, "model file truncated in preamble");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw ModelFormatError(Kind::kBadMagic, "not an lrce model file (bad magic)");
  }
  const std::uint32_t version = get_u32(bytes.data() + 8);
  if (version != kModelFormatVersion) {
    throw ModelFormatError(Kind::kVersion, "unsupported model format version " + std::to_string(version) +
                                               " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  const std::uint64_t header_len = get_u64(bytes.data() + 16);
  if (bytes.size() - kPreambleSize < header_len) {
    throw ModelFormatError(Kind::kTruncated, "model file truncated in header");
  }
  const auto* header_begin = bytes.data() + kPreambleSize;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_begin, header_begin + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(Kind::kCorrupt, std::string("model header is not valid JSON: ") + e.what());
  }
  if (header.value("format", "") != kModelFormatName || header.value("version", 0u) != version) {
    throw ModelFormatError(Kind::kCorrupt, "model header does not match preamble");
  }

  ModelParams params;
  params.schema_fingerprint = header.at("schema_fingerprint").get<std::string>();
  params.metadata = header.at("metadata");

  const std::uint8_t* p = header_begin + header_len;
  const std::uint8_t* end = bytes.data() + bytes.size();
  if (end - p < 8) throw ModelFormatError(Kind::kTruncated, "model file truncated before checksum");
  end -= 8;
  const std::uint8_t* payload_begin = p;
  for (const auto& s : header.at("sections")) {
    Mlp net;
    net.spec.widths = s.at("widths").get<std::vector<std::size_t>>();
    net.spec.output = activation_from_string(s.at("output").get<std::string>());
    net.spec.validate();
    for (std::size_t l = 0; l + 1 < net.spec.widths.size(); ++l) {
      net.weights.push_back(get_tensor(p, end, {net.spec.widths[l], net.spec.widths[l + 1]}));
      net.biases.push_back(get_tensor(p, end, {1, net.spec.widths[l + 1]}));
    }
    if (net.parameter_count() != s.at("values").get<std::size_t>()) {
      throw ModelFormatError(Kind::kCorrupt, "section value count mismatch");
    }
    params.sections.push_back(ModelSection{s.at("name").get<std::string>(), std::move(net)});
  }
  if (p != end) throw ModelFormatError(Kind::kCorrupt, "trailing bytes after weight payload");
  const std::string_view payload_view(reinterpret_cast<const char*>(payload_begin),
                                      static_cast<std::size_t>(end - payload_begin));
  if (fnv1a64(payload_view) != get_u64(end)) {
    throw ModelFormatError(Kind::kCorrupt, "weight payload checksum mismatch");
  }
  return params;
}

void save_params(const ModelParams& params, const std::filesystem::path& path) {
  const auto bytes = serialize_params(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelFormatError(ModelFormatError::Kind::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelFormatError(ModelFormatError::Kind::kIo, "failed writing '" + path.string() + "'");
}

ModelParams load_params(const std::filesystem::path& path, const std::optional<std::string>& expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError(ModelFormatError::Kind::kIo, "cannot open model file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ModelParams params = deserialize_params(bytes);
  if (expected_fingerprint && *expected_fingerprint != params.schema_fingerprint) {
    throw ModelFormatError(ModelFormatError::Kind::kFingerprint,
                           "schema fingerprint mismatch: model has " + params.schema_fingerprint + ", expected " +
                               *expected_fingerprint);
  }
  return params;
}

}  // namespace lrce
