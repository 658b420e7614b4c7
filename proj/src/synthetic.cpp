#include "gmg/synthetic.hpp"

#include "gmg/io.hpp"
#include "gmg/pool.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace gmg::synthetic {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 operator+(Vec3 a, Vec3 b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator-(Vec3 a, Vec3 b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(double s, Vec3 a) { return {s * a[0], s * a[1], s * a[2]}; }
double dot(Vec3 a, Vec3 b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

struct Ellipsoid {
  Vec3 centre;
  Vec3 radii;
  std::uint8_t part;
};

std::vector<Ellipsoid> wheels(double x, double y, double radius, double width) {
  std::vector<Ellipsoid> out;
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      out.push_back({{sx * x, sy * y, radius}, {radius, width, radius}, 3});
    }
  }
  return out;
}

std::vector<Ellipsoid> prototype_parts(int prototype) {
  std::vector<Ellipsoid> parts;
  switch (prototype) {
    case 0:  // saloon
      parts = {{{0.0, 0.0, 0.36}, {1.0, 0.45, 0.24}, 1},
               {{-0.08, 0.0, 0.62}, {0.5, 0.38, 0.2}, 2}};
      for (const auto &w : wheels(0.6, 0.4, 0.17, 0.08)) parts.push_back(w);
      break;
    case 1:  // van
      parts = {{{0.0, 0.0, 0.46}, {0.92, 0.46, 0.34}, 1},
               {{0.12, 0.0, 0.82}, {0.72, 0.42, 0.22}, 2}};
      for (const auto &w : wheels(0.58, 0.41, 0.16, 0.08)) parts.push_back(w);
      break;
    default:  // coupe
      parts = {{{0.0, 0.0, 0.3}, {1.06, 0.48, 0.18}, 1},
               {{-0.28, 0.0, 0.5}, {0.4, 0.35, 0.16}, 2}};
      for (const auto &w : wheels(0.66, 0.43, 0.19, 0.09)) parts.push_back(w);
      break;
  }
  return parts;
}

// Nearest positive ray parameter, or NaN.
double intersect(const Ellipsoid &e, Vec3 origin, Vec3 dir) {
  Vec3 o = origin - e.centre, d = dir;
  for (int i = 0; i < 3; ++i) {
    o[i] /= e.radii[i];
    d[i] /= e.radii[i];
  }
  const double a = dot(d, d), b = 2.0 * dot(o, d), c = dot(o, o) - 1.0;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double t = (-b - std::sqrt(disc)) / (2.0 * a);
  return t > 0.0 ? t : std::numeric_limits<double>::quiet_NaN();
}

struct Palette {
  std::array<Vec3, kClasses> base;
  double stripe_phase;
  double stripe_frequency;
  Vec3 backdrop_top, backdrop_bottom;
};

Palette make_palette(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-18.0, 18.0), unit(0.0, 1.0);
  const auto j = [&](Vec3 c) { return Vec3{c[0] + jitter(rng), c[1] + jitter(rng), c[2] + jitter(rng)}; };
  Palette p;
  p.base = {Vec3{0, 0, 0}, j({175, 45, 40}), j({70, 105, 170}), j({35, 35, 38})};
  p.stripe_phase = 2.0 * std::numbers::pi * unit(rng);
  p.stripe_frequency = 9.0 + 3.0 * unit(rng);
  p.backdrop_top = j({205, 210, 200});
  p.backdrop_bottom = j({150, 145, 130});
  return p;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

}  // namespace

CategorySpec category() { return CategorySpec("vehicle", {"background", "body", "cabin", "wheel"}); }

Rendering render(const View &view, std::size_t size, std::uint64_t texture_seed,
                 const TpsSolved *warp) {
  const auto parts = prototype_parts(view.prototype);
  const Palette palette = make_palette(texture_seed);
  const double az = view.azimuth * std::numbers::pi / 180.0;
  const double el = view.elevation * std::numbers::pi / 180.0;
  const Vec3 towards_camera{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                            std::sin(el)};
  const Vec3 right{-std::sin(az), std::cos(az), 0.0};
  const Vec3 up{-std::sin(el) * std::cos(az), -std::sin(el) * std::sin(az), std::cos(el)};
  const Vec3 ray = -1.0 * towards_camera;
  const Vec3 light{0.45, 0.35, 0.82};  // camera frame: right, up, towards camera
  constexpr double kHalfExtent = 1.15;
  constexpr double kCentreHeight = 0.42;

  RgbImage image(size, size);
  std::vector<std::uint8_t> labels(size * size, 0);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      NormCoord p = pixel_to_norm(r, c, size, size);
      if (warp) p = tps_map(*warp, p);
      const Vec3 origin = (p.u * kHalfExtent) * right +
                          (kCentreHeight - p.v * kHalfExtent) * up + 10.0 * towards_camera;
      double best = std::numeric_limits<double>::infinity();
      const Ellipsoid *hit = nullptr;
      for (const auto &e : parts) {
        const double t = intersect(e, origin, ray);
        if (t < best) {
          best = t;
          hit = &e;
        }
      }
      Vec3 colour;
      if (!hit) {
        const double s = 0.5 * (p.v + 1.0);
        colour = (1.0 - s) * palette.backdrop_top + s * palette.backdrop_bottom;
      } else {
        const Vec3 x = origin + best * ray;
        Vec3 n = x - hit->centre;
        for (int i = 0; i < 3; ++i) n[i] /= hit->radii[i] * hit->radii[i];
        n = (1.0 / std::sqrt(dot(n, n))) * n;
        const Vec3 n_cam{dot(n, right), dot(n, up), dot(n, towards_camera)};
        const double shade = 0.35 + 0.65 * std::max(0.0, dot(n_cam, light));
        const double stripes =
            1.0 + 0.18 * std::sin(palette.stripe_frequency * (x[0] + 0.5 * x[2]) +
                                  palette.stripe_phase);
        colour = (shade * stripes) * palette.base[hit->part];
        labels[r * size + c] = hit->part;
      }
      for (int k = 0; k < 3; ++k) image.at(r, c)[k] = to_byte(colour[k]);
    }
  }
  return {std::move(image), LabelMask(size, size, kClasses, std::move(labels))};
}

void add_pixel_noise(RgbImage &image, std::mt19937_64 &rng, double sigma) {
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto &v : image.pixels) v = to_byte(v + noise(rng));
}

ProbabilityMap simulate_probabilities(const LabelMask &truth, std::mt19937_64 &rng,
                                      double sharpness, int blur_radius, double logit_noise) {
  const std::size_t rows = truth.rows(), cols = truth.cols(), classes = truth.num_classes();
  std::normal_distribution<double> noise(0.0, logit_noise);
  std::vector<float> values(rows * cols * classes);
  std::vector<double> logits(classes);
  const long rad = blur_radius;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::fill(logits.begin(), logits.end(), 0.0);
      std::size_t counted = 0;
      for (long dr = -rad; dr <= rad; ++dr) {
        for (long dc = -rad; dc <= rad; ++dc) {
          const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(rows) || cc >= static_cast<long>(cols)) {
            continue;
          }
          const auto l = truth.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
          if (l == kIgnoreLabel) continue;
          logits[l] += 1.0;
          ++counted;
        }
      }
      double peak = -std::numeric_limits<double>::infinity();
      for (auto &z : logits) {
        z = (counted ? sharpness * z / static_cast<double>(counted) : 0.0) + noise(rng);
        peak = std::max(peak, z);
      }
      double sum = 0.0;
      for (auto &z : logits) sum += (z = std::exp(z - peak));
      float *dst = values.data() + (r * cols + c) * classes;
      for (std::size_t k = 0; k < classes; ++k) dst[k] = static_cast<float>(logits[k] / sum);
    }
  }
  return ProbabilityMap(rows, cols, truth.num_classes(), std::move(values));
}

Dataset write_dataset(const std::filesystem::path &root, const DatasetConfig &config) {
  Dataset ds{root, {}, {}, {}};
  const CategorySpec cat = category();
  std::string category_text = cat.name + "\n";
  for (const auto &p : cat.parts) category_text += p + "\n";
  write_text_atomic(root / "category.txt", category_text);

  static const std::array<const char *, kPrototypes> kNames{"saloon", "van", "coupe"};
  std::vector<PoolManifestRow> rows;
  for (int proto = 0; proto < kPrototypes; ++proto) {
    for (std::size_t e = 0; e < std::size(kElevations); ++e) {
      for (int a = 0; a < kAzimuthBins; ++a) {
        const std::uint64_t id = rows.size();
        const View view{proto, static_cast<double>(a * kAzimuthStep),
                        static_cast<double>(kElevations[e])};
        const Rendering rend = render(view, config.image_size, config.seed * 100003 + id);
        const std::string stem = std::to_string(id);
        write_image(root / "pool/images" / (stem + ".png"), rend.image);
        write_lmsk(root / "pool/labels" / (stem + ".lmsk"), rend.labels);
        rows.push_back({id, kNames[proto], a * kAzimuthStep, kElevations[e],
                        "pool/features/" + stem + ".fgrd", "pool/labels/" + stem + ".lmsk"});
        ds.pool_ids.push_back(id);
      }
    }
  }
  write_text_atomic(root / "pool.tsv", format_pool_manifest(rows));

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, rows.size() / kPrototypes - 1);
  std::uniform_real_distribution<double> displacement(-config.target_warp, config.target_warp);
  for (int t = 0; t < config.targets; ++t) {
    const std::size_t index = static_cast<std::size_t>(t % kPrototypes) * (rows.size() / kPrototypes) + pick(rng);
    const PoolManifestRow &src = rows[index];
    TpsParams theta = TpsParams::identity();
    for (auto &d : theta.displacements) d = displacement(rng);
    const TpsSolved warp = solve(theta);
    // A fresh render (new texture, backdrop and noise) of the source's view.
    Rendering rend = render({t % kPrototypes, static_cast<double>(src.azimuth),
                             static_cast<double>(src.elevation)},
                            config.image_size, config.seed * 7919 + 1000003 + t, &warp);
    add_pixel_noise(rend.image, rng, config.pixel_noise);
    char name[16];
    std::snprintf(name, sizeof name, "t%02d", t);
    write_image(root / "targets/images" / (std::string(name) + ".png"), rend.image);
    write_lmsk(root / "targets/gt" / (std::string(name) + ".lmsk"), rend.labels);
    write_pmap(root / "targets/probs" / (std::string(name) + ".pmap"),
               simulate_probabilities(rend.labels, rng));
    ds.targets.emplace_back(name);
    ds.target_sources.push_back(src.entry_id);
  }
  return ds;
}

}  // namespace gmg::synthetic
