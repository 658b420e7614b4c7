#pragma once

#include "gmg/features.hpp"
#include "gmg/metrics.hpp"
#include "gmg/pseudolabel.hpp"
#include "gmg/tps.hpp"
#include "gmg/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gmg {

// Binary containers: 4-byte magic, u16 version, then a fixed header and a
// little-endian payload. Decoders demand the exact byte length.
inline constexpr std::uint16_t kFormatVersion = 1;

using Bytes = std::vector<std::uint8_t>;

Bytes encode_fgrd(const FeatureGrid &grid);
FeatureGrid decode_fgrd(std::span<const std::uint8_t> bytes);

Bytes encode_lmsk(const LabelMask &mask);
LabelMask decode_lmsk(std::span<const std::uint8_t> bytes);

Bytes encode_pmap(const ProbabilityMap &probs);
ProbabilityMap decode_pmap(std::span<const std::uint8_t> bytes);

// Displacements and lambda are stored as f32; encoding a TpsParams rounds
// them, decoding widens exactly.
Bytes encode_tpsp(const TpsParams &params);
TpsParams decode_tpsp(std::span<const std::uint8_t> bytes);

// "CONF", version, H u32, W u32, H*W validity bytes, H*W f32 scores.
Bytes encode_conf(const ConfidenceMap &map);
ConfidenceMap decode_conf(std::span<const std::uint8_t> bytes);

// Missing files raise kMissingArtifact; the path is prefixed to any decode
// error detail.
Bytes read_file(const std::filesystem::path &path);
// Writes a sibling temp file and renames it over `path`, creating parent
// directories as needed.
void write_file_atomic(const std::filesystem::path &path,
                       std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path &path,
                       const std::string &text);

FeatureGrid read_fgrd(const std::filesystem::path &path);
LabelMask read_lmsk(const std::filesystem::path &path);
ProbabilityMap read_pmap(const std::filesystem::path &path);
TpsParams read_tpsp(const std::filesystem::path &path);
ConfidenceMap read_conf(const std::filesystem::path &path);
void write_fgrd(const std::filesystem::path &path, const FeatureGrid &grid);
void write_lmsk(const std::filesystem::path &path, const LabelMask &mask);
void write_pmap(const std::filesystem::path &path, const ProbabilityMap &probs);
void write_tpsp(const std::filesystem::path &path, const TpsParams &params);
void write_conf(const std::filesystem::path &path, const ConfidenceMap &map);

// PNG (8-bit RGB, alpha dropped) or binary PPM, chosen by file signature
// when reading and by extension (.ppm) when writing.
RgbImage read_image(const std::filesystem::path &path);
void write_image(const std::filesystem::path &path, const RgbImage &image);
Bytes encode_ppm(const RgbImage &image);
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);

// Colour per label index; IGNORE is light yellow.
std::array<std::uint8_t, 3> palette_color(std::uint8_t label);

struct PoolManifestRow {
  std::uint64_t entry_id = 0;
  std::string prototype;
  int azimuth = 0;
  int elevation = 0;
  std::filesystem::path features;  // resolved against the manifest's folder
  std::filesystem::path labels;
};

// entry_id<TAB>prototype<TAB>azimuth<TAB>elevation<TAB>features<TAB>labels,
// '#' starts a comment line, blank lines are skipped.
std::vector<PoolManifestRow> parse_pool_manifest(
    const std::string &text, const std::filesystem::path &base_dir);
std::vector<PoolManifestRow> read_pool_manifest(
    const std::filesystem::path &path);
std::string format_pool_manifest(std::span<const PoolManifestRow> rows);

// First non-comment line is the category name, each following line one part
// (background first).
CategorySpec parse_category_spec(const std::string &text);
CategorySpec read_category_spec(const std::filesystem::path &path);

// Lines `from<TAB>to`, one per source class 0..n-1. The target space has
// max(to)+1 classes.
LabelRemap parse_label_remap(const std::string &text);
LabelRemap read_label_remap(const std::filesystem::path &path);

}  // namespace gmg
