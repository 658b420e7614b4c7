#include "gmg/pool.hpp"

#include "gmg/error.hpp"
#include "gmg/io.hpp"
#include "gmg/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

namespace gmg {

namespace fs = std::filesystem;

namespace {

std::string describe(const PoolEntry &e) {
  return "pool entry " + std::to_string(e.id) + " (" + e.prototype + ", az " +
         std::to_string(e.azimuth) + ", el " + std::to_string(e.elevation) + ")";
}

}  // namespace

bool is_pool_azimuth(int degrees) {
  return degrees >= 0 && degrees < 360 && degrees % kAzimuthStep == 0;
}

bool is_pool_elevation(int degrees) {
  return std::find(std::begin(kElevations), std::end(kElevations), degrees) !=
         std::end(kElevations);
}

const PoolEntry *Pool::find(std::uint64_t id) const {
  for (const auto &e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

Pool make_pool(std::vector<PoolEntry> entries) {
  if (entries.empty()) throw Error(ErrorCode::kFormat, "pool has no entries");
  std::set<std::uint64_t> ids;
  std::map<std::tuple<std::string, int, int>, std::uint64_t> views;
  std::map<std::string, std::size_t> per_prototype;
  for (const auto &e : entries) {
    if (!ids.insert(e.id).second) {
      throw Error(ErrorCode::kFormat, "duplicate entry id " + std::to_string(e.id));
    }
    if (!is_pool_azimuth(e.azimuth)) {
      throw Error(ErrorCode::kFormat, describe(e) + ": azimuth must be one of 0,30,...,330");
    }
    if (!is_pool_elevation(e.elevation)) {
      throw Error(ErrorCode::kFormat, describe(e) + ": elevation must be 5 or 20");
    }
    const auto [it, fresh] =
        views.emplace(std::make_tuple(e.prototype, e.azimuth, e.elevation), e.id);
    if (!fresh) {
      throw Error(ErrorCode::kFormat, "duplicate viewpoint: " + describe(e) +
                                          " repeats entry " +
                                          std::to_string(it->second));
    }
    ++per_prototype[e.prototype];
  }
  Pool pool;
  pool.entries = std::move(entries);
  for (const auto &[proto, count] : per_prototype) {
    if (count < kViewpointsPerPrototype) {
      pool.partial = true;
      pool.warnings.push_back("prototype " + proto + " has " + std::to_string(count) +
                              " of " + std::to_string(kViewpointsPerPrototype) +
                              " viewpoints");
    }
  }
  return pool;
}

Pool build_pool(const fs::path &manifest) {
  const auto rows = read_pool_manifest(manifest);
  if (rows.empty()) {
    throw Error(ErrorCode::kFormat, manifest.string() + ": manifest has no entries");
  }
  std::vector<PoolEntry> entries;
  entries.reserve(rows.size());
  for (const auto &row : rows) {
    PoolEntry e;
    e.id = row.entry_id;
    e.prototype = row.prototype;
    e.azimuth = row.azimuth;
    e.elevation = row.elevation;
    e.features_path = row.features;
    e.labels_path = row.labels;
    for (const auto *p : {&e.features_path, &e.labels_path}) {
      if (!fs::is_regular_file(*p)) {
        throw Error(ErrorCode::kMissingArtifact,
                    describe(e) + ": cannot find " + p->string());
      }
    }
    entries.push_back(std::move(e));
  }
  try {
    return make_pool(std::move(entries));
  } catch (const Error &e) {
    throw Error(e.code(), manifest.string() + ": " + e.what());
  }
}

SearchResult select_best_source(const FeatureGrid &target, const Pool &pool,
                                const OptimConfig &config, unsigned jobs) {
  config.validate();
  if (pool.entries.empty()) throw Error(ErrorCode::kUsage, "pool is empty");
  const auto basis = std::make_shared<const TpsBasis>(config.grid_size, config.tps_lambda);
  std::vector<MatchResult> results(pool.entries.size());

  parallel_for(pool.entries.size(), jobs, [&](std::size_t i) {
    const PoolEntry &entry = pool.entries[i];
    try {
      std::shared_ptr<const FeatureGrid> grid = entry.features;
      if (!grid) grid = std::make_shared<const FeatureGrid>(read_fgrd(entry.features_path));
      const MatchingProblem problem(*grid, target, basis);
      results[i] = optimize_transform(problem, config);
    } catch (const Error &e) {
      throw Error(e.code(), describe(entry) + ": " + e.what());
    }
  });

  SearchResult out;
  out.ranking.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    out.ranking.push_back({pool.entries[i].id, results[i].phi});
  }
  std::sort(out.ranking.begin(), out.ranking.end(),
            [](const RankedCandidate &a, const RankedCandidate &b) {
              if (a.phi != b.phi) return a.phi > b.phi;
              return a.entry_id < b.entry_id;
            });
  out.winner_id = out.ranking.front().entry_id;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (pool.entries[i].id == out.winner_id) {
      out.winner = std::move(results[i]);
      break;
    }
  }
  return out;
}

ViewpointBin nearest_viewpoint_bin(double azimuth, double elevation) {
  if (!std::isfinite(azimuth) || !std::isfinite(elevation)) {
    throw Error(ErrorCode::kUsage, "viewpoint angles must be finite");
  }
  double az = std::fmod(azimuth, 360.0);
  if (az < 0.0) az += 360.0;
  ViewpointBin bin;
  double best = 1e300;
  for (int k = 0; k < kAzimuthBins; ++k) {
    const int candidate = k * kAzimuthStep;
    const double diff = std::abs(az - candidate);
    const double dist = std::min(diff, 360.0 - diff);
    // Candidates run in increasing angle, so strict < keeps the smaller on ties.
    if (dist < best) {
      best = dist;
      bin.azimuth = candidate;
    }
  }
  best = 1e300;
  for (int candidate : kElevations) {
    const double dist = std::abs(elevation - candidate);
    if (dist < best) {
      best = dist;
      bin.elevation = candidate;
    }
  }
  return bin;
}

SearchResult select_best_source_with_viewpoint(const FeatureGrid &target,
                                               const Pool &pool, double azimuth,
                                               double elevation,
                                               const OptimConfig &config,
                                               unsigned jobs) {
  const ViewpointBin bin = nearest_viewpoint_bin(azimuth, elevation);
  Pool subset;
  for (const auto &e : pool.entries) {
    if (e.azimuth == bin.azimuth && e.elevation == bin.elevation) {
      subset.entries.push_back(e);
    }
  }
  if (subset.entries.empty()) {
    throw Error(ErrorCode::kMissingArtifact,
                "pool has no entry in viewpoint bin (azimuth " +
                    std::to_string(bin.azimuth) + ", elevation " +
                    std::to_string(bin.elevation) + ")");
  }
  return select_best_source(target, subset, config, jobs);
}

}  // namespace gmg
