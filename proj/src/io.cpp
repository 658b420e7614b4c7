#include "gmg/io.hpp"

#include "gmg/error.hpp"

#include <png.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

namespace gmg {

namespace fs = std::filesystem;

namespace {

class ByteWriter {
 public:
  void magic(const char (&tag)[5]) { out_.insert(out_.end(), tag, tag + 4); }
  void u8(std::uint8_t x) { out_.push_back(x); }
  void u16(std::uint16_t x) {
    out_.push_back(static_cast<std::uint8_t>(x));
    out_.push_back(static_cast<std::uint8_t>(x >> 8));
  }
  void u32(std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  void f32(float x) { u32(std::bit_cast<std::uint32_t>(x)); }
  void reserve(std::size_t n) { out_.reserve(n); }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, const char *format)
      : bytes_(bytes), format_(format) {}

  void expect_header(const char (&tag)[5]) {
    need(6);
    if (std::memcmp(bytes_.data(), tag, 4) != 0) {
      throw Error(ErrorCode::kFormat, std::string("bad magic, expected ") + format_);
    }
    pos_ = 4;
    const std::uint16_t version = u16();
    if (version != kFormatVersion) {
      throw Error(ErrorCode::kFormat, std::string(format_) + " version " +
                                          std::to_string(version) +
                                          " is not supported");
    }
  }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto x = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return x;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return x;
  }
  float f32() { return std::bit_cast<float>(u32()); }

  // Payload must fill the remainder exactly.
  void expect_payload(std::uint64_t count, std::uint64_t elem_size) {
    const std::uint64_t remaining = bytes_.size() - pos_;
    if (count != 0 && elem_size > std::numeric_limits<std::uint64_t>::max() / count) {
      throw Error(ErrorCode::kFormat, std::string(format_) + " header sizes overflow");
    }
    if (count * elem_size != remaining) {
      throw Error(ErrorCode::kFormat,
                  std::string(format_) + " payload has " + std::to_string(remaining) +
                      " bytes, header declares " + std::to_string(count * elem_size));
    }
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::kFormat, std::string(format_) + " file is truncated");
    }
  }

  std::span<const std::uint8_t> bytes_;
  const char *format_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t n, const char *what) {
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kDimension, std::string(what) + " exceeds 32 bits");
  }
  return static_cast<std::uint32_t>(n);
}

template <class F>
auto with_path(const fs::path &path, F &&decode) {
  try {
    return decode(read_file(path));
  } catch (const Error &e) {
    if (e.code() == ErrorCode::kMissingArtifact) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view field, std::size_t line, const char *what) {
  T value{};
  const auto *end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw Error(ErrorCode::kFormat, "line " + std::to_string(line) + ": " + what +
                                        " '" + std::string(field) +
                                        "' is not a valid number");
  }
  return value;
}

// Calls fn(line_number, content) for each non-blank, non-comment line.
template <class F>
void for_each_content_line(const std::string &text, F &&fn) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const auto t = trim(raw);
    if (t.empty() || t.front() == '#') continue;
    fn(line_no, std::string_view(raw));
  }
}

std::string read_text(const fs::path &path) {
  const Bytes bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace

Bytes encode_fgrd(const FeatureGrid &grid) {
  ByteWriter w;
  w.reserve(18 + grid.values().size() * 4);
  w.magic("FGRD");
  w.u16(kFormatVersion);
  w.u32(checked_u32(grid.rows(), "grid height"));
  w.u32(checked_u32(grid.cols(), "grid width"));
  w.u32(checked_u32(grid.depth(), "grid depth"));
  for (float x : grid.values()) w.f32(x);
  return w.take();
}

FeatureGrid decode_fgrd(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "FGRD");
  r.expect_header("FGRD");
  const std::uint64_t h = r.u32(), w = r.u32(), d = r.u32();
  r.expect_payload(h * w * d, 4);
  std::vector<float> values(h * w * d);
  for (auto &x : values) x = r.f32();
  return FeatureGrid(h, w, d, std::move(values));
}

Bytes encode_lmsk(const LabelMask &mask) {
  ByteWriter w;
  w.reserve(16 + mask.size());
  w.magic("LMSK");
  w.u16(kFormatVersion);
  w.u32(checked_u32(mask.rows(), "mask height"));
  w.u32(checked_u32(mask.cols(), "mask width"));
  w.u16(mask.num_classes());
  for (std::uint8_t l : mask.labels()) w.u8(l);
  return w.take();
}

LabelMask decode_lmsk(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "LMSK");
  r.expect_header("LMSK");
  const std::uint64_t h = r.u32(), w = r.u32();
  const std::uint16_t c = r.u16();
  r.expect_payload(h * w, 1);
  std::vector<std::uint8_t> labels(h * w);
  for (auto &l : labels) l = r.u8();
  return LabelMask(h, w, c, std::move(labels));
}

Bytes encode_pmap(const ProbabilityMap &probs) {
  ByteWriter w;
  w.reserve(16 + probs.values().size() * 4);
  w.magic("PMAP");
  w.u16(kFormatVersion);
  w.u32(checked_u32(probs.rows(), "map height"));
  w.u32(checked_u32(probs.cols(), "map width"));
  w.u16(probs.num_classes());
  for (float x : probs.values()) w.f32(x);
  return w.take();
}

ProbabilityMap decode_pmap(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "PMAP");
  r.expect_header("PMAP");
  const std::uint64_t h = r.u32(), w = r.u32();
  const std::uint16_t c = r.u16();
  r.expect_payload(h * w * c, 4);
  std::vector<float> values(h * w * c);
  for (auto &x : values) x = r.f32();
  return ProbabilityMap(h, w, c, std::move(values));
}

Bytes encode_tpsp(const TpsParams &params) {
  params.validate();
  ByteWriter w;
  w.magic("TPSP");
  w.u16(kFormatVersion);
  w.u16(static_cast<std::uint16_t>(params.grid_size));
  w.f32(static_cast<float>(params.lambda));
  for (double d : params.displacements) w.f32(static_cast<float>(d));
  return w.take();
}

TpsParams decode_tpsp(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "TPSP");
  r.expect_header("TPSP");
  const std::uint16_t k = r.u16();
  if (k < kMinTpsGridSize || k > kMaxTpsGridSize) {
    throw Error(ErrorCode::kFormat,
                "TPSP grid size " + std::to_string(k) + " outside [2,8]");
  }
  const float lambda = r.f32();
  r.expect_payload(2ull * k * k, 4);
  TpsParams params;
  params.grid_size = k;
  params.lambda = lambda;
  params.displacements.resize(2ull * k * k);
  for (auto &d : params.displacements) d = r.f32();
  try {
    params.validate();
  } catch (const Error &e) {
    throw Error(ErrorCode::kFormat, e.what());
  }
  return params;
}

Bytes encode_conf(const ConfidenceMap &map) {
  map.validate();
  ByteWriter w;
  w.magic("CONF");
  w.u16(kFormatVersion);
  w.u32(checked_u32(map.rows, "map height"));
  w.u32(checked_u32(map.cols, "map width"));
  for (std::uint8_t v : map.valid) w.u8(v);
  for (float z : map.scores) w.f32(z);
  return w.take();
}

ConfidenceMap decode_conf(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "CONF");
  r.expect_header("CONF");
  ConfidenceMap map;
  map.rows = r.u32();
  map.cols = r.u32();
  r.expect_payload(static_cast<std::uint64_t>(map.rows) * map.cols, 5);
  map.valid.resize(map.rows * map.cols);
  map.scores.resize(map.rows * map.cols);
  for (auto &v : map.valid) v = r.u8();
  for (auto &z : map.scores) z = r.f32();
  map.validate();
  return map;
}

Bytes read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingArtifact, "cannot open " + path.string());
  }
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kMissingArtifact, "cannot read " + path.string());
  return bytes;
}

void write_file_atomic(const fs::path &path, std::span<const std::uint8_t> bytes) {
  static std::atomic<unsigned> counter{0};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kMissingArtifact, "cannot write " + tmp.string());
    out.write(reinterpret_cast<const char *>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error(ErrorCode::kMissingArtifact, "short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::kMissingArtifact,
                "cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void write_text_atomic(const fs::path &path, const std::string &text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t *>(text.data()),
                                    text.size()));
}

FeatureGrid read_fgrd(const fs::path &path) {
  return with_path(path, [](const Bytes &b) { return decode_fgrd(b); });
}
LabelMask read_lmsk(const fs::path &path) {
  return with_path(path, [](const Bytes &b) { return decode_lmsk(b); });
}
ProbabilityMap read_pmap(const fs::path &path) {
  return with_path(path, [](const Bytes &b) { return decode_pmap(b); });
}
TpsParams read_tpsp(const fs::path &path) {
  return with_path(path, [](const Bytes &b) { return decode_tpsp(b); });
}
ConfidenceMap read_conf(const fs::path &path) {
  return with_path(path, [](const Bytes &b) { return decode_conf(b); });
}
void write_fgrd(const fs::path &path, const FeatureGrid &grid) {
  write_file_atomic(path, encode_fgrd(grid));
}
void write_lmsk(const fs::path &path, const LabelMask &mask) {
  write_file_atomic(path, encode_lmsk(mask));
}
void write_pmap(const fs::path &path, const ProbabilityMap &probs) {
  write_file_atomic(path, encode_pmap(probs));
}
void write_tpsp(const fs::path &path, const TpsParams &params) {
  write_file_atomic(path, encode_tpsp(params));
}
void write_conf(const fs::path &path, const ConfidenceMap &map) {
  write_file_atomic(path, encode_conf(map));
}

Bytes encode_ppm(const RgbImage &image) {
  const std::string header = "P6\n" + std::to_string(image.cols) + " " +
                             std::to_string(image.rows) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  const auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  const auto number = [&]() -> std::size_t {
    skip_space();
    std::size_t value = 0, digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos]) && digits < 9) {
      value = value * 10 + (bytes[pos++] - '0');
      ++digits;
    }
    if (digits == 0) throw Error(ErrorCode::kFormat, "malformed PPM header");
    return value;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw Error(ErrorCode::kFormat, "not a binary PPM (P6) image");
  }
  pos = 2;
  const std::size_t cols = number(), rows = number(), maxval = number();
  if (maxval != 255) throw Error(ErrorCode::kFormat, "only 8-bit PPM is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(ErrorCode::kFormat, "malformed PPM header");
  }
  ++pos;
  if (bytes.size() - pos != rows * cols * 3) {
    throw Error(ErrorCode::kFormat, "PPM pixel data does not match its header");
  }
  RgbImage image(rows, cols);
  std::copy(bytes.begin() + static_cast<long>(pos), bytes.end(), image.pixels.begin());
  return image;
}

RgbImage read_image(const fs::path &path) {
  return with_path(path, [&](const Bytes &bytes) {
    static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) {
      png_image png{};
      png.version = PNG_IMAGE_VERSION;
      if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
        throw Error(ErrorCode::kFormat, std::string("PNG: ") + png.message);
      }
      png.format = PNG_FORMAT_RGB;
      RgbImage image(png.height, png.width);
      png_color background{0, 0, 0};
      if (!png_image_finish_read(&png, &background, image.pixels.data(), 0, nullptr)) {
        png_image_free(&png);
        throw Error(ErrorCode::kFormat, std::string("PNG: ") + png.message);
      }
      return image;
    }
    return decode_ppm(bytes);
  });
}

void write_image(const fs::path &path, const RgbImage &image) {
  if (image.pixels.size() != image.rows * image.cols * 3 || image.rows == 0 ||
      image.cols == 0) {
    throw Error(ErrorCode::kDimension, "image buffer does not match its shape");
  }
  if (path.extension() == ".ppm") {
    write_file_atomic(path, encode_ppm(image));
    return;
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.cols);
  png.height = static_cast<png_uint_32>(image.rows);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0,
                                 nullptr)) {
    throw Error(ErrorCode::kFormat, std::string("PNG: ") + png.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0,
                                 nullptr)) {
    throw Error(ErrorCode::kFormat, std::string("PNG: ") + png.message);
  }
  out.resize(size);
  write_file_atomic(path, out);
}

std::array<std::uint8_t, 3> palette_color(std::uint8_t label) {
  if (label == kIgnoreLabel) return {255, 255, 224};
  // Bit-interleaved colour map common to segmentation benchmarks.
  std::array<std::uint8_t, 3> rgb{0, 0, 0};
  unsigned id = label;
  for (int shift = 7; shift >= 0 && id; --shift) {
    for (int ch = 0; ch < 3; ++ch) {
      rgb[ch] |= static_cast<std::uint8_t>(((id >> ch) & 1u) << shift);
    }
    id >>= 3;
  }
  return rgb;
}

std::vector<PoolManifestRow> parse_pool_manifest(const std::string &text,
                                                 const fs::path &base_dir) {
  std::vector<PoolManifestRow> rows;
  std::set<std::uint64_t> ids;
  for_each_content_line(text, [&](std::size_t line, std::string_view content) {
    const auto fields = split(content, '\t');
    if (fields.size() != 6) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(line) +
                                          ": expected 6 tab-separated fields, got " +
                                          std::to_string(fields.size()));
    }
    PoolManifestRow row;
    row.entry_id = parse_number<std::uint64_t>(trim(fields[0]), line, "entry id");
    row.prototype = std::string(trim(fields[1]));
    row.azimuth = parse_number<int>(trim(fields[2]), line, "azimuth");
    row.elevation = parse_number<int>(trim(fields[3]), line, "elevation");
    if (row.prototype.empty()) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(line) + ": empty prototype");
    }
    const auto resolve = [&](std::string_view field) {
      const fs::path p{std::string(trim(field))};
      if (p.empty()) {
        throw Error(ErrorCode::kFormat, "line " + std::to_string(line) + ": empty path");
      }
      return p.is_absolute() ? p : base_dir / p;
    };
    row.features = resolve(fields[4]);
    row.labels = resolve(fields[5]);
    if (!ids.insert(row.entry_id).second) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(line) +
                                          ": duplicate entry id " +
                                          std::to_string(row.entry_id));
    }
    rows.push_back(std::move(row));
  });
  return rows;
}

std::vector<PoolManifestRow> read_pool_manifest(const fs::path &path) {
  const std::string text = read_text(path);
  try {
    return parse_pool_manifest(text, path.parent_path());
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string format_pool_manifest(std::span<const PoolManifestRow> rows) {
  std::ostringstream out;
  out << "# entry_id\tprototype\tazimuth\televation\tfeatures\tlabels\n";
  for (const auto &r : rows) {
    out << r.entry_id << '\t' << r.prototype << '\t' << r.azimuth << '\t'
        << r.elevation << '\t' << r.features.generic_string() << '\t'
        << r.labels.generic_string() << '\n';
  }
  return out.str();
}

CategorySpec parse_category_spec(const std::string &text) {
  std::vector<std::string> lines;
  for_each_content_line(text, [&](std::size_t, std::string_view content) {
    lines.emplace_back(trim(content));
  });
  if (lines.empty()) throw Error(ErrorCode::kFormat, "category spec is empty");
  std::string name = lines.front();
  lines.erase(lines.begin());
  try {
    return CategorySpec(std::move(name), std::move(lines));
  } catch (const Error &e) {
    throw Error(ErrorCode::kFormat, e.what());
  }
}

CategorySpec read_category_spec(const fs::path &path) {
  const std::string text = read_text(path);
  try {
    return parse_category_spec(text);
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

LabelRemap parse_label_remap(const std::string &text) {
  std::map<unsigned, unsigned> table;
  for_each_content_line(text, [&](std::size_t line, std::string_view content) {
    std::vector<std::string_view> fields;
    for (auto f : split(trim(content), '\t')) {
      if (!trim(f).empty()) fields.push_back(trim(f));
    }
    if (fields.size() != 2) {
      throw Error(ErrorCode::kFormat,
                  "line " + std::to_string(line) + ": expected from<TAB>to");
    }
    const auto from = parse_number<unsigned>(fields[0], line, "source class");
    const auto to = parse_number<unsigned>(fields[1], line, "target class");
    if (from >= kIgnoreLabel || to >= kIgnoreLabel) {
      throw Error(ErrorCode::kFormat,
                  "line " + std::to_string(line) + ": class index out of range");
    }
    if (!table.emplace(from, to).second) {
      throw Error(ErrorCode::kFormat, "line " + std::to_string(line) +
                                          ": class " + std::to_string(from) +
                                          " mapped twice");
    }
  });
  if (table.empty()) throw Error(ErrorCode::kFormat, "remap file is empty");
  std::vector<std::uint8_t> flat;
  unsigned max_to = 0;
  for (const auto &[from, to] : table) {
    if (from != flat.size()) {
      throw Error(ErrorCode::kFormat,
                  "remap has no entry for class " + std::to_string(flat.size()));
    }
    flat.push_back(static_cast<std::uint8_t>(to));
    max_to = std::max(max_to, to);
  }
  const auto from_classes = static_cast<std::uint16_t>(flat.size());
  return LabelRemap(from_classes, static_cast<std::uint16_t>(max_to + 1),
                    std::move(flat));
}

LabelRemap read_label_remap(const fs::path &path) {
  const std::string text = read_text(path);
  try {
    return parse_label_remap(text);
  } catch (const Error &e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace gmg
