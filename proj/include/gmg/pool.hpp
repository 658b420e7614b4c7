#pragma once

#include "gmg/optimizer.hpp"
#include "gmg/types.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace gmg {

inline constexpr int kAzimuthStep = 30;
inline constexpr int kAzimuthBins = 12;
inline constexpr int kElevations[] = {5, 20};
inline constexpr std::size_t kViewpointsPerPrototype = 24;

bool is_pool_azimuth(int degrees);
bool is_pool_elevation(int degrees);

struct PoolEntry {
  std::uint64_t id = 0;
  std::string prototype;
  int azimuth = 0;
  int elevation = 5;
  std::filesystem::path features_path;
  std::filesystem::path labels_path;
  // Preloaded grid; when null the grid is read from features_path on use.
  std::shared_ptr<const FeatureGrid> features;
};

struct Pool {
  std::vector<PoolEntry> entries;
  // Some prototype has fewer than the full set of viewpoints.
  bool partial = false;
  std::vector<std::string> warnings;

  const PoolEntry *find(std::uint64_t id) const;
};

// Validates ids, viewpoints and (prototype, azimuth, elevation) uniqueness.
Pool make_pool(std::vector<PoolEntry> entries);

// Reads a pool manifest; every referenced file must exist.
Pool build_pool(const std::filesystem::path &manifest);

struct RankedCandidate {
  std::uint64_t entry_id = 0;
  double phi = 0.0;
};

struct SearchResult {
  std::uint64_t winner_id = 0;
  MatchResult winner;
  // Every searched entry, Phi descending, ties by ascending id.
  std::vector<RankedCandidate> ranking;
};

// Optimizes the target against each entry (up to `jobs` at a time) and keeps
// the best Phi; ties go to the smallest entry id. Results do not depend on
// `jobs`.
SearchResult select_best_source(const FeatureGrid &target, const Pool &pool,
                                const OptimConfig &config, unsigned jobs = 1);

struct ViewpointBin {
  int azimuth = 0;
  int elevation = 5;

  friend bool operator==(const ViewpointBin &, const ViewpointBin &) = default;
};

// Nearest pool azimuth by circular distance and nearest pool elevation;
// equidistant cases go to the smaller angle.
ViewpointBin nearest_viewpoint_bin(double azimuth, double elevation);

SearchResult select_best_source_with_viewpoint(const FeatureGrid &target,
                                               const Pool &pool, double azimuth,
                                               double elevation,
                                               const OptimConfig &config,
                                               unsigned jobs = 1);

}  // namespace gmg
