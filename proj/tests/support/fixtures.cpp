#include "support/fixtures.hpp"

#include "gmg/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

namespace gmg::testing {

FeatureGrid random_unit_grid(Rng &rng, std::size_t rows, std::size_t cols,
                             std::size_t depth) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> values;
  values.reserve(rows * cols * depth);
  std::vector<double> v(depth);
  for (std::size_t p = 0; p < rows * cols; ++p) {
    double sq = 0.0;
    do {
      sq = 0.0;
      for (auto &x : v) {
        x = normal(rng);
        sq += x * x;
      }
    } while (sq < 1e-6);
    const double inv = 1.0 / std::sqrt(sq);
    for (double x : v) values.push_back(static_cast<float>(x * inv));
  }
  return FeatureGrid(rows, cols, depth, std::move(values));
}

FeatureGrid smooth_grid(Rng &rng, std::size_t rows, std::size_t cols,
                        std::size_t depth, double max_frequency) {
  constexpr int kWaves = 3;
  std::uniform_real_distribution<double> freq(0.5, max_frequency);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  struct Wave {
    double kx, ky, phase, amplitude;
  };
  std::vector<Wave> waves;
  for (std::size_t ch = 0; ch < depth * kWaves; ++ch) {
    const double f = freq(rng);
    const double a = angle(rng);
    waves.push_back({f * std::cos(a), f * std::sin(a), angle(rng), amp(rng)});
  }
  std::vector<float> values;
  values.reserve(rows * cols * depth);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const NormCoord p = pixel_to_norm(r, c, rows, cols);
      for (std::size_t ch = 0; ch < depth; ++ch) {
        double x = 0.0;
        for (int k = 0; k < kWaves; ++k) {
          const Wave &w = waves[ch * kWaves + k];
          x += w.amplitude * std::sin(w.kx * p.u + w.ky * p.v + w.phase);
        }
        values.push_back(static_cast<float>(x));
      }
    }
  }
  return FeatureGrid(rows, cols, depth, std::move(values));
}

FeatureGrid constant_grid(std::size_t rows, std::size_t cols,
                          std::size_t depth, float value) {
  return FeatureGrid(rows, cols, depth,
                     std::vector<float>(rows * cols * depth, value));
}

TpsParams random_params(Rng &rng, int grid_size, double max_abs) {
  std::uniform_real_distribution<double> dist(-max_abs, max_abs);
  TpsParams params = TpsParams::identity(grid_size);
  for (auto &d : params.displacements) d = dist(rng);
  return params;
}

FeatureGrid warp_grid(const FeatureGrid &source, const TpsSolved &theta,
                      std::size_t rows, std::size_t cols) {
  std::vector<float> values;
  values.reserve(rows * cols * source.depth());
  std::vector<double> sample(source.depth());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      sample_features_into(source, tps_map(theta, pixel_to_norm(r, c, rows, cols)),
                           sample, {}, {});
      for (double x : sample) values.push_back(static_cast<float>(x));
    }
  }
  return FeatureGrid(rows, cols, source.depth(), std::move(values));
}

std::vector<long> cell_signature(const FeatureGrid &source,
                                 const FeatureGrid &target,
                                 const TpsSolved &theta) {
  std::vector<long> out;
  for (std::size_t r = 0; r < target.rows(); ++r) {
    for (std::size_t c = 0; c < target.cols(); ++c) {
      const NormCoord w =
          tps_map(theta, pixel_to_norm(r, c, target.rows(), target.cols()));
      if (!w.in_bounds()) {
        out.push_back(-1);
        continue;
      }
      const PixelCoord px = norm_to_pixel(w, source.rows(), source.cols());
      const long row = std::min(static_cast<long>(std::floor(px.row)),
                                static_cast<long>(source.rows()) - 2);
      const long col = std::min(static_cast<long>(std::floor(px.col)),
                                static_cast<long>(source.cols()) - 2);
      out.push_back(row * static_cast<long>(source.cols()) + col);
    }
  }
  return out;
}

std::vector<double> frozen_stencil_fd(const FeatureGrid &source,
                                      const FeatureGrid &target,
                                      const TpsParams &theta, double step) {
  struct Frozen {
    bool valid;
    long row;
    long col;
  };
  const auto locate = [&](const TpsSolved &s, std::size_t r, std::size_t c) {
    const NormCoord w =
        tps_map(s, pixel_to_norm(r, c, target.rows(), target.cols()));
    return std::pair{w, norm_to_pixel(w, source.rows(), source.cols())};
  };
  const TpsSolved centre = solve(theta);
  std::vector<Frozen> frozen;
  for (std::size_t r = 0; r < target.rows(); ++r) {
    for (std::size_t c = 0; c < target.cols(); ++c) {
      const auto [w, px] = locate(centre, r, c);
      const long row = std::clamp(static_cast<long>(std::floor(px.row)), 0L,
                                  static_cast<long>(source.rows()) - 2);
      const long col = std::clamp(static_cast<long>(std::floor(px.col)), 0L,
                                  static_cast<long>(source.cols()) - 2);
      frozen.push_back({w.in_bounds(), row, col});
    }
  }
  const std::size_t depth = source.depth();
  const auto phi = [&](const TpsParams &p) {
    const TpsSolved s = solve(p, centre.shared_basis());
    double total = 0.0;
    for (std::size_t r = 0; r < target.rows(); ++r) {
      for (std::size_t c = 0; c < target.cols(); ++c) {
        const Frozen &f = frozen[r * target.cols() + c];
        if (!f.valid) continue;
        const auto [w, px] = locate(s, r, c);
        const double sr = px.row - static_cast<double>(f.row);
        const double tc = px.col - static_cast<double>(f.col);
        const auto r0 = static_cast<std::size_t>(f.row);
        const auto c0 = static_cast<std::size_t>(f.col);
        double dot = 0.0, aa = 0.0, bb = 0.0;
        for (std::size_t ch = 0; ch < depth; ++ch) {
          const double a = (1 - sr) * (1 - tc) * source.at(r0, c0)[ch] +
                           (1 - sr) * tc * source.at(r0, c0 + 1)[ch] +
                           sr * (1 - tc) * source.at(r0 + 1, c0)[ch] +
                           sr * tc * source.at(r0 + 1, c0 + 1)[ch];
          const double b = target.at(r, c)[ch];
          dot += a * b;
          aa += a * a;
          bb += b * b;
        }
        if (aa > 1e-16 && bb > 1e-16) total += dot / std::sqrt(aa * bb);
      }
    }
    return total;
  };
  std::vector<double> gradient(theta.num_params());
  TpsParams probe = theta;
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    probe.displacements[i] = theta.displacements[i] + step;
    const double plus = phi(probe);
    probe.displacements[i] = theta.displacements[i] - step;
    const double minus = phi(probe);
    probe.displacements[i] = theta.displacements[i];
    gradient[i] = (plus - minus) / (2 * step);
  }
  return gradient;
}

LabelMask random_mask(Rng &rng, std::size_t rows, std::size_t cols,
                      std::uint16_t classes) {
  std::uniform_int_distribution<int> label(0, classes - 1);
  std::vector<std::uint8_t> labels(rows * cols);
  for (auto &l : labels) l = static_cast<std::uint8_t>(label(rng));
  return LabelMask(rows, cols, classes, std::move(labels));
}

TempDir::TempDir() {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("gmg-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace gmg::testing
