#include "gmg/cli.hpp"

#include "gmg/error.hpp"
#include "gmg/features.hpp"
#include "gmg/io.hpp"
#include "gmg/metrics.hpp"
#include "gmg/optimizer.hpp"
#include "gmg/parallel.hpp"
#include "gmg/pool.hpp"
#include "gmg/pseudolabel.hpp"
#include "gmg/warp.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstring>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace gmg::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double x, int precision = 10) {
  std::ostringstream s;
  s << std::setprecision(precision) << x;
  return s.str();
}

// Full round-trip precision for values other tools compare exactly.
std::string exact(double x) { return num(x, 17); }

std::vector<fs::path> list_with_extension(const fs::path &dir, const std::string &ext) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kMissingArtifact, "directory " + dir.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void require_file(const fs::path &p, const std::string &what) {
  if (!fs::is_regular_file(p)) {
    throw Error(ErrorCode::kMissingArtifact, what + " " + p.string() + " is missing");
  }
}

unsigned default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

void add_optimizer_flags(CLI::App *cmd, OptimConfig &c) {
  cmd->add_option("--max-iters", c.max_iters, "Iteration cap")->capture_default_str();
  cmd->add_option("--step", c.step, "Initial ascent step")->capture_default_str();
  cmd->add_option("--beta1", c.beta1, "First-moment decay")->capture_default_str();
  cmd->add_option("--beta2", c.beta2, "Second-moment decay")->capture_default_str();
  cmd->add_option("--rel-tol", c.rel_tol, "Relative improvement tolerance")
      ->capture_default_str();
  cmd->add_option("--patience", c.patience, "Iterations below tolerance before stopping")
      ->capture_default_str();
  cmd->add_option("--max-halvings", c.max_halvings, "Step halvings per iteration")
      ->capture_default_str();
  cmd->add_option("--max-displacement", c.max_displacement,
                  "Clamp on each control displacement")
      ->capture_default_str();
  cmd->add_option("--grid-size", c.grid_size, "TPS control grid K (K x K sites)")
      ->capture_default_str();
  cmd->add_option("--tps-lambda", c.tps_lambda, "TPS regularization")->capture_default_str();
}

// ---- match ---------------------------------------------------------------

struct MatchArgs {
  fs::path source, target, out, simmap;
  OptimConfig config;
};

FeatureGrid similarity_grid(const SimilarityMap &map) {
  std::vector<float> v(map.values.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = map.valid[i] ? static_cast<float>(map.values[i]) : 0.0f;
  }
  return FeatureGrid(map.rows, map.cols, 1, std::move(v));
}

int run_match(const MatchArgs &a, std::ostream &out) {
  const FeatureGrid source = read_fgrd(a.source);
  const FeatureGrid target = read_fgrd(a.target);
  const MatchResult r = optimize_transform(source, target, a.config);
  write_tpsp(a.out, r.theta_hat);
  if (!a.simmap.empty()) write_fgrd(a.simmap, similarity_grid(r.map));
  out << "phi=" << exact(r.phi) << "\n"
      << "iterations=" << r.iterations << "\n"
      << "converged=" << (r.converged ? 1 : 0) << "\n"
      << "valid=" << r.map.valid_count << "\n"
      << "positions=" << target.positions() << "\n";
  return 0;
}

// ---- search --------------------------------------------------------------

struct SearchArgs {
  fs::path target, pool, out;
  std::optional<double> azimuth, elevation;
  OptimConfig config;
  unsigned jobs = default_jobs();
};

fs::path tpsp_beside(const fs::path &result) {
  fs::path p = result;
  p.replace_extension(".tpsp");
  return p;
}

int run_search(const SearchArgs &a, std::ostream &out, std::ostream &err) {
  if (a.azimuth.has_value() != a.elevation.has_value()) {
    throw Error(ErrorCode::kUsage, "--azimuth and --elevation must be given together");
  }
  const Pool pool = build_pool(a.pool);
  for (const auto &w : pool.warnings) err << "warning: partial pool: " << w << "\n";
  const FeatureGrid target = read_fgrd(a.target);
  const SearchResult r =
      a.azimuth ? select_best_source_with_viewpoint(target, pool, *a.azimuth, *a.elevation,
                                                    a.config, a.jobs)
                : select_best_source(target, pool, a.config, a.jobs);

  std::ostringstream tsv;
  tsv << "# target\t" << a.target.generic_string() << "\n"
      << "# winner\t" << r.winner_id << "\n"
      << "# iterations\t" << r.winner.iterations << "\n"
      << "# converged\t" << (r.winner.converged ? 1 : 0) << "\n"
      << "rank\tentry_id\tprototype\tazimuth\televation\tphi\n";
  for (std::size_t i = 0; i < r.ranking.size(); ++i) {
    const PoolEntry &e = *pool.find(r.ranking[i].entry_id);
    tsv << i + 1 << '\t' << e.id << '\t' << e.prototype << '\t' << e.azimuth << '\t'
        << e.elevation << '\t' << exact(r.ranking[i].phi) << "\n";
  }
  write_tpsp(tpsp_beside(a.out), r.winner.theta_hat);
  write_text_atomic(a.out, tsv.str());
  const PoolEntry &w = *pool.find(r.winner_id);
  out << "winner=" << r.winner_id << "\n"
      << "prototype=" << w.prototype << "\n"
      << "azimuth=" << w.azimuth << "\n"
      << "elevation=" << w.elevation << "\n"
      << "phi=" << exact(r.winner.phi) << "\n"
      << "candidates=" << r.ranking.size() << "\n";
  return 0;
}

// Winner id from a search result file (the rank-1 row).
std::uint64_t read_search_winner(const fs::path &path) {
  const Bytes bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("rank\t", 0) == 0) continue;
    std::istringstream row(line);
    std::size_t rank = 0;
    std::uint64_t id = 0;
    if (!(row >> rank >> id)) {
      throw Error(ErrorCode::kFormat, path.string() + ": malformed ranking row");
    }
    if (rank == 1) return id;
  }
  throw Error(ErrorCode::kFormat, path.string() + ": no rank-1 row");
}

// ---- pseudolabel ---------------------------------------------------------

struct ScoreArgs {
  fs::path search_results, pool, probs, out;
  unsigned jobs = default_jobs();
};

int run_score(const ScoreArgs &a, std::ostream &out, std::ostream &err) {
  const auto results = list_with_extension(a.search_results, ".tsv");
  if (results.empty()) {
    throw Error(ErrorCode::kMissingArtifact,
                "no search results (*.tsv) in " + a.search_results.string());
  }
  const Pool pool = build_pool(a.pool);
  for (const auto &w : pool.warnings) err << "warning: partial pool: " << w << "\n";
  std::vector<std::string> lines(results.size());
  parallel_for(results.size(), a.jobs, [&](std::size_t i) {
    const fs::path &result = results[i];
    const std::string name = result.stem().string();
    const std::uint64_t winner = read_search_winner(result);
    const PoolEntry *entry = pool.find(winner);
    if (!entry) {
      throw Error(ErrorCode::kMissingArtifact,
                  result.string() + ": winner " + std::to_string(winner) +
                      " is not in the pool manifest");
    }
    const TpsSolved theta = solve(read_tpsp(tpsp_beside(result)));
    const fs::path probs_path = a.probs / (name + ".pmap");
    require_file(probs_path, "probability map");
    const ProbabilityMap probs = read_pmap(probs_path);
    const LabelMask source_label = read_lmsk(entry->labels_path);
    if (source_label.num_classes() != probs.num_classes()) {
      throw Error(ErrorCode::kDimension,
                  name + ": source label has C=" + std::to_string(source_label.num_classes()) +
                      " but the probability map has C=" +
                      std::to_string(probs.num_classes()));
    }
    const LabelMask warped = warp_source_label(source_label, theta, probs.rows(), probs.cols());
    const ConfidenceMap z = confidence_scores(warped, probs);
    write_lmsk(a.out / (name + ".warp.lmsk"), warped);
    write_conf(a.out / (name + ".conf"), z);
    double sum = 0.0;
    for (std::size_t k = 0; k < z.scores.size(); ++k) sum += z.scores[k];
    const std::size_t valid = z.valid_count();
    lines[i] = name + "\tsource=" + std::to_string(winner) +
               "\tvalid=" + std::to_string(valid) + "/" + std::to_string(z.scores.size()) +
               "\tmean_z=" + num(valid ? sum / static_cast<double>(valid) : 0.0, 6);
  });
  for (const auto &l : lines) out << l << "\n";
  out << "scored=" << results.size() << "\n";
  return 0;
}

struct EmitArgs {
  fs::path scores, out;
  double percentile = kDefaultPercentile;
  bool per_image = false;
  unsigned jobs = default_jobs();
};

int run_emit(const EmitArgs &a, std::ostream &out) {
  if (!fs::is_directory(a.scores)) {
    throw Error(ErrorCode::kMissingArtifact,
                "scores directory " + a.scores.string() +
                    " does not exist; run `pseudolabel score` first");
  }
  const auto confs = list_with_extension(a.scores, ".conf");
  if (confs.empty()) {
    throw Error(ErrorCode::kMissingArtifact,
                "no confidence maps in " + a.scores.string() +
                    "; run `pseudolabel score` first");
  }
  std::vector<std::string> names;
  for (const auto &c : confs) {
    names.push_back(c.stem().string());
    require_file(a.scores / (names.back() + ".warp.lmsk"), "warped label");
  }
  std::vector<ConfidenceMap> maps(confs.size());
  parallel_for(confs.size(), a.jobs, [&](std::size_t i) { maps[i] = read_conf(confs[i]); });

  std::vector<Threshold> gammas;
  if (a.per_image) {
    for (const auto &m : maps) {
      gammas.push_back(percentile_threshold(std::span(&m, 1), a.percentile));
    }
  } else {
    gammas.assign(maps.size(), percentile_threshold(maps, a.percentile));
  }

  std::vector<double> coverage(maps.size());
  parallel_for(maps.size(), a.jobs, [&](std::size_t i) {
    const LabelMask warped = read_lmsk(a.scores / (names[i] + ".warp.lmsk"));
    const PseudoLabel p = threshold_labels(warped, maps[i], gammas[i]);
    write_lmsk(a.out / (names[i] + ".lmsk"), p.mask);
    coverage[i] = p.coverage;
  });

  std::ostringstream record;
  record << "pooling=" << (a.per_image ? "image" : "category") << "\n"
         << "percentile=" << exact(a.percentile) << "\n";
  if (!a.per_image) {
    record << "gamma=" << exact(gammas[0].gamma) << "\n"
           << "samples=" << gammas[0].sample_count << "\n";
  } else {
    for (std::size_t i = 0; i < names.size(); ++i) {
      record << "gamma." << names[i] << "=" << exact(gammas[i].gamma) << "\n";
    }
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    out << names[i] << "\tcoverage=" << num(coverage[i], 6) << "\n";
    mean += coverage[i];
  }
  mean /= static_cast<double>(names.size());
  record << "images=" << names.size() << "\n"
         << "coverage_mean=" << exact(mean) << "\n"
         << "coverage_min=" << exact(*std::min_element(coverage.begin(), coverage.end()))
         << "\n"
         << "coverage_max=" << exact(*std::max_element(coverage.begin(), coverage.end()))
         << "\n";
  write_text_atomic(a.out / "threshold.txt", record.str());
  if (!a.per_image) out << "gamma=" << num(gammas[0].gamma) << "\n";
  out << "coverage_mean=" << num(mean, 6) << "\n";
  return 0;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  fs::path pred, gt, category, remap, report, summary;
  bool include_background = false;
  unsigned jobs = default_jobs();
};

int run_eval(const EvalArgs &a, std::ostream &out) {
  const CategorySpec spec = read_category_spec(a.category);
  std::optional<LabelRemap> remap;
  if (!a.remap.empty()) remap = read_label_remap(a.remap);

  const auto preds = list_with_extension(a.pred, ".lmsk");
  const auto gts = list_with_extension(a.gt, ".lmsk");
  std::map<std::string, int> seen;
  for (const auto &p : preds) seen[p.filename().string()] |= 1;
  for (const auto &g : gts) seen[g.filename().string()] |= 2;
  std::vector<std::string> names, unmatched;
  for (const auto &[name, mask] : seen) {
    if (mask == 3) {
      names.push_back(name);
    } else {
      unmatched.push_back(name + (mask == 1 ? " (prediction only)" : " (ground truth only)"));
    }
  }
  if (!unmatched.empty()) {
    std::string list;
    for (const auto &u : unmatched) list += (list.empty() ? "" : ", ") + u;
    throw Error(ErrorCode::kMissingArtifact, "unmatched files: " + list);
  }
  if (names.empty()) throw Error(ErrorCode::kMissingArtifact, "no label files to evaluate");

  std::vector<IouAccumulator> accs(names.size(), IouAccumulator(spec.num_classes()));
  std::vector<PseudoLabelQuality> quality(names.size());
  std::vector<std::size_t> pixels(names.size());
  parallel_for(names.size(), a.jobs, [&](std::size_t i) {
    LabelMask pred = read_lmsk(a.pred / names[i]);
    LabelMask gt = read_lmsk(a.gt / names[i]);
    if (remap) {
      pred = remap->apply(pred);
      gt = remap->apply(gt);
    }
    if (gt.num_classes() != spec.num_classes() || pred.num_classes() != spec.num_classes()) {
      throw Error(ErrorCode::kDimension,
                  names[i] + ": masks have C=" + std::to_string(pred.num_classes()) + "/" +
                      std::to_string(gt.num_classes()) + " but category " + spec.name +
                      " has " + std::to_string(spec.num_classes()) + " parts");
    }
    accs[i].add(pred, gt);
    quality[i] = pseudolabel_quality(pred, gt);
    pixels[i] = pred.size();
  });
  IouAccumulator total(spec.num_classes());
  std::uint64_t covered = 0, evaluated = 0, correct = 0, all_pixels = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    total.merge(accs[i]);
    covered += quality[i].covered;
    evaluated += quality[i].evaluated;
    correct += quality[i].correct;
    all_pixels += pixels[i];
  }
  const IoUReport report = total.finalize(a.include_background);

  std::ostringstream table, summary;
  table << "part\tiou\tintersection\tunion\tgt\tpred\n";
  summary << "category=" << spec.name << "\n"
          << "images=" << names.size() << "\n"
          << "include_background=" << (a.include_background ? 1 : 0) << "\n";
  for (std::size_t c = 0; c < report.parts.size(); ++c) {
    const PartIou &p = report.parts[c];
    table << spec.parts[c] << '\t' << (p.iou ? num(*p.iou, 6) : "-") << '\t'
          << p.intersection << '\t' << p.union_count << '\t' << p.gt << '\t' << p.predicted
          << "\n";
    if (p.iou) summary << "iou." << spec.parts[c] << "=" << exact(*p.iou) << "\n";
  }
  table << "mIoU\t" << (report.miou ? num(*report.miou, 6) : "-") << "\n";
  if (report.miou) summary << "miou=" << exact(*report.miou) << "\n";
  const double coverage = static_cast<double>(covered) / static_cast<double>(all_pixels);
  summary << "coverage=" << exact(coverage) << "\n";
  if (evaluated > 0) {
    summary << "accuracy=" << exact(static_cast<double>(correct) / static_cast<double>(evaluated))
            << "\n";
  }
  out << table.str();
  out << "coverage\t" << num(coverage, 6) << "\n";
  out << "accuracy_covered\t"
      << (evaluated ? num(static_cast<double>(correct) / static_cast<double>(evaluated), 6) : "-")
      << "\n";
  if (!a.report.empty()) write_text_atomic(a.report, table.str());
  if (!a.summary.empty()) write_text_atomic(a.summary, summary.str());
  return 0;
}

// ---- warp ----------------------------------------------------------------

struct WarpArgs {
  fs::path theta, input, out, overlay;
  std::size_t rows = 0, cols = 0;
};

std::string sniff_magic(const fs::path &p) {
  const Bytes b = read_file(p);
  return b.size() >= 4 ? std::string(b.begin(), b.begin() + 4) : std::string();
}

int run_warp(const WarpArgs &a, std::ostream &out) {
  const TpsSolved theta = solve(read_tpsp(a.theta));
  const std::string magic = sniff_magic(a.input);
  const auto shape = [&](std::size_t r, std::size_t c) {
    return std::make_pair(a.rows ? a.rows : r, a.cols ? a.cols : c);
  };
  if (!a.overlay.empty() && magic != "LMSK") {
    throw Error(ErrorCode::kUsage, "--overlay needs a label mask (LMSK) input");
  }
  if (magic == "LMSK") {
    const LabelMask mask = read_lmsk(a.input);
    const auto [r, c] = shape(mask.rows(), mask.cols());
    const LabelMask warped = warp_source_label(mask, theta, r, c);
    if (!a.overlay.empty()) {
      write_image(a.out, blend_overlay(read_image(a.overlay), warped, 0.5));
    } else {
      write_lmsk(a.out, warped);
    }
    out << "kind=labels\nrows=" << r << "\ncols=" << c << "\n";
  } else if (magic == "FGRD") {
    const FeatureGrid grid = read_fgrd(a.input);
    const auto [r, c] = shape(grid.rows(), grid.cols());
    write_fgrd(a.out, warp_features(grid, theta, r, c));
    out << "kind=features\nrows=" << r << "\ncols=" << c << "\n";
  } else {
    const RgbImage image = read_image(a.input);
    const auto [r, c] = shape(image.rows, image.cols);
    write_image(a.out, warp_image(image, theta, r, c));
    out << "kind=image\nrows=" << r << "\ncols=" << c << "\n";
  }
  return 0;
}

// ---- features ------------------------------------------------------------

struct FeaturesArgs {
  fs::path image, out;
  DescriptorConfig config;
};

int run_features(const FeaturesArgs &a, std::ostream &out, std::ostream &err) {
  const FeatureGrid grid = extract_descriptors(read_image(a.image), a.config);
  const FeatureGridReport report = validate_feature_grid(grid);
  if (report.flagged) {
    err << "warning: " << num(100.0 * report.near_zero_fraction, 4)
        << "% of descriptors are near zero\n";
  }
  write_fgrd(a.out, grid);
  out << "rows=" << grid.rows() << "\ncols=" << grid.cols() << "\ndepth=" << grid.depth()
      << "\nnear_zero_fraction=" << num(report.near_zero_fraction, 6) << "\n";
  return 0;
}

// ---- gradcheck -----------------------------------------------------------

struct GradcheckArgs {
  fs::path source, target;
  std::uint64_t seed = 0;
  int draws = 5;
  int grid_size = kDefaultTpsGridSize;
  double max_displacement = 0.1;
  double step = 1e-4;
  double inject = 0.0;
};

int run_gradcheck(const GradcheckArgs &a, std::ostream &out) {
  const FeatureGrid source = read_fgrd(a.source);
  const FeatureGrid target = read_fgrd(a.target);
  if (a.draws < 1) throw Error(ErrorCode::kUsage, "--draws must be >= 1");
  if (!(a.step > 0.0)) throw Error(ErrorCode::kUsage, "--step must be > 0");
  std::mt19937_64 rng(a.seed);
  std::uniform_real_distribution<double> unit(-a.max_displacement, a.max_displacement);
  double max_rel = 0.0, max_abs = 0.0;
  std::size_t compared = 0, skipped = 0;
  bool passed = true;
  for (int d = 0; d < a.draws; ++d) {
    TpsParams theta = TpsParams::identity(a.grid_size);
    for (auto &x : theta.displacements) x = unit(rng);
    std::vector<double> analytic = matching_score_gradient(source, target, solve(theta));
    for (auto &g : analytic) g *= 1.0 + a.inject;
    const auto numeric = finite_diff_gradient(source, target, theta, a.step);
    const auto stable = fd_stencil_stability(source, target, theta, a.step);
    const GradientComparison c = compare_gradients(analytic, numeric, stable.cells_stable);
    max_rel = std::max(max_rel, c.max_rel_error);
    max_abs = std::max(max_abs, c.max_abs_error_small);
    compared += c.compared;
    skipped += analytic.size() - c.compared;
    passed = passed && c.passed;
  }
  out << "draws=" << a.draws << "\ncompared=" << compared << "\nskipped_unstable=" << skipped
      << "\nmax_rel_error=" << num(max_rel, 6) << "\nmax_abs_error_small=" << num(max_abs, 6)
      << "\n";
  if (compared == 0) {
    throw Error(ErrorCode::kNumerical,
                "every component's stencil crosses a sampling kink; nothing to compare");
  }
  if (!passed) {
    throw Error(ErrorCode::kNumerical,
                "analytic gradient disagrees with finite differences (max relative error " +
                    num(max_rel, 6) + ")");
  }
  out << "status=pass\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Geometric matching of synthetic part-label sources onto target images"};
  app.name("gmg");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  MatchArgs match;
  auto *match_cmd = app.add_subcommand("match", "Estimate the TPS aligning one source to a target");
  match_cmd->add_option("--source", match.source, "Source FGRD")->required();
  match_cmd->add_option("--target", match.target, "Target FGRD")->required();
  match_cmd->add_option("--out", match.out, "Output TPSP")->required();
  match_cmd->add_option("--simmap", match.simmap, "Optional per-position similarity FGRD");
  add_optimizer_flags(match_cmd, match.config);

  SearchArgs search;
  auto *search_cmd = app.add_subcommand("search", "Pick the best-matching pool entry for a target");
  search_cmd->add_option("--target", search.target, "Target FGRD")->required();
  search_cmd->add_option("--pool", search.pool, "Pool manifest")->required();
  search_cmd->add_option("--out", search.out, "Ranking TSV; the winner's TPSP goes beside it")
      ->required();
  search_cmd->add_option("--azimuth", search.azimuth, "Known azimuth in degrees");
  search_cmd->add_option("--elevation", search.elevation, "Known elevation in degrees");
  search_cmd->add_option("-j,--jobs", search.jobs, "Parallel pool entries")->capture_default_str();
  add_optimizer_flags(search_cmd, search.config);

  auto *pseudo_cmd = app.add_subcommand("pseudolabel", "Two-pass pseudo-label generation");
  pseudo_cmd->require_subcommand(1);
  ScoreArgs score;
  auto *score_cmd = pseudo_cmd->add_subcommand("score", "Pass 1: warp labels and score them");
  score_cmd->add_option("--search-results", score.search_results, "Directory of search TSVs")
      ->required();
  score_cmd->add_option("--pool", score.pool, "Pool manifest")->required();
  score_cmd->add_option("--probs", score.probs, "Directory of <name>.pmap")->required();
  score_cmd->add_option("--out", score.out, "Scores directory")->required();
  score_cmd->add_option("-j,--jobs", score.jobs, "Parallel images")->capture_default_str();
  EmitArgs emit;
  auto *emit_cmd = pseudo_cmd->add_subcommand("emit", "Pass 2: threshold and write labels");
  emit_cmd->add_option("--scores", emit.scores, "Scores directory from pass 1")->required();
  emit_cmd->add_option("--percentile", emit.percentile, "Threshold percentile in (0,100)")
      ->capture_default_str();
  emit_cmd->add_option("--out", emit.out, "Labels directory")->required();
  emit_cmd->add_flag("--per-image", emit.per_image,
                     "Threshold each image on its own scores instead of the category pool");
  emit_cmd->add_option("-j,--jobs", emit.jobs, "Parallel images")->capture_default_str();

  EvalArgs eval;
  auto *eval_cmd = app.add_subcommand("eval", "Per-part IoU and mIoU against ground truth");
  eval_cmd->add_option("--pred", eval.pred, "Directory of predicted LMSK")->required();
  eval_cmd->add_option("--gt", eval.gt, "Directory of ground-truth LMSK")->required();
  eval_cmd->add_option("--category", eval.category, "Category spec file")->required();
  eval_cmd->add_option("--remap", eval.remap, "Class remap file (from<TAB>to)");
  eval_cmd->add_flag("--include-background", eval.include_background,
                     "Average class 0 into the mIoU");
  eval_cmd->add_option("--report", eval.report, "Write the IoU table as TSV");
  eval_cmd->add_option("--summary", eval.summary, "Write key=value summary");
  eval_cmd->add_option("-j,--jobs", eval.jobs, "Parallel images")->capture_default_str();

  WarpArgs warp;
  auto *warp_cmd = app.add_subcommand("warp", "Apply a TPSP to labels, features or an image");
  warp_cmd->add_option("--theta", warp.theta, "TPSP file")->required();
  warp_cmd->add_option("--input", warp.input, "LMSK, FGRD, PNG or PPM")->required();
  warp_cmd->add_option("--out", warp.out, "Output path")->required();
  warp_cmd->add_option("--overlay", warp.overlay,
                       "Blend the warped mask at 50% over this image (PNG output)");
  warp_cmd->add_option("--rows", warp.rows, "Output height (default: input)");
  warp_cmd->add_option("--cols", warp.cols, "Output width (default: input)");

  FeaturesArgs features;
  auto *features_cmd = app.add_subcommand("features", "Descriptor grid of an image");
  features_cmd->add_option("--image", features.image, "PNG or PPM")->required();
  features_cmd->add_option("--cell", features.config.cell_size, "Cell size in pixels")
      ->capture_default_str();
  features_cmd->add_option("--bins", features.config.bins, "Orientation bins")
      ->capture_default_str();
  features_cmd->add_option("--out", features.out, "Output FGRD")->required();

  GradcheckArgs grad;
  auto *grad_cmd =
      app.add_subcommand("gradcheck", "Compare the analytic gradient with finite differences");
  grad_cmd->add_option("--source", grad.source, "Source FGRD")->required();
  grad_cmd->add_option("--target", grad.target, "Target FGRD")->required();
  grad_cmd->add_option("--seed", grad.seed, "Seed for the random warps")->capture_default_str();
  grad_cmd->add_option("--draws", grad.draws, "Random warps to check")->capture_default_str();
  grad_cmd->add_option("--grid-size", grad.grid_size, "TPS control grid K")
      ->capture_default_str();
  grad_cmd->add_option("--max-displacement", grad.max_displacement,
                       "Range of the random displacements")
      ->capture_default_str();
  grad_cmd->add_option("--step", grad.step, "Central difference step")->capture_default_str();
  grad_cmd->add_option("--inject-gradient-error", grad.inject,
                       "Scale the analytic gradient by (1 + x); negative control")
      ->capture_default_str();

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back("gmg");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char *> argv;
  for (const auto &s : storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "error: usage: " << e.what() << "\n";
    return static_cast<int>(ErrorCode::kUsage);
  }

  try {
    if (*match_cmd) return run_match(match, out);
    if (*search_cmd) return run_search(search, out, err);
    if (*score_cmd) return run_score(score, out, err);
    if (*emit_cmd) return run_emit(emit, out);
    if (*eval_cmd) return run_eval(eval, out);
    if (*warp_cmd) return run_warp(warp, out);
    if (*features_cmd) return run_features(features, out, err);
    if (*grad_cmd) return run_gradcheck(grad, out);
  } catch (const Error &e) {
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return e.exit_status();
  } catch (const fs::filesystem_error &e) {
    err << "error: " << error_code_name(ErrorCode::kMissingArtifact) << ": " << e.what() << "\n";
    return static_cast<int>(ErrorCode::kMissingArtifact);
  } catch (const std::exception &e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
  err << "error: usage: no subcommand\n";
  return static_cast<int>(ErrorCode::kUsage);
}

}  // namespace gmg::cli
