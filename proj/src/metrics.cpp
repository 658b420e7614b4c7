#include "gmg/metrics.hpp"

#include "gmg/error.hpp"

#include <string>

namespace gmg {

namespace {

void require_same_shape(const LabelMask &a, const LabelMask &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kDimension,
                "mask shapes differ: " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

}  // namespace

IouAccumulator::IouAccumulator(std::uint16_t num_classes)
    : num_classes_(num_classes),
      intersection_(num_classes, 0),
      gt_(num_classes, 0),
      pred_(num_classes, 0) {
  if (num_classes == 0) {
    throw Error(ErrorCode::kUsage, "accumulator needs at least one class");
  }
}

void IouAccumulator::add(const LabelMask &pred, const LabelMask &gt) {
  require_same_shape(pred, gt);
  if (pred.num_classes() != num_classes_ || gt.num_classes() != num_classes_) {
    throw Error(ErrorCode::kDimension,
                "mask class count does not match the accumulator's " +
                    std::to_string(num_classes_));
  }
  const auto p = pred.labels();
  const auto g = gt.labels();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == kIgnoreLabel) continue;
    const std::uint8_t q = p[i] == kIgnoreLabel ? 0 : p[i];
    ++gt_[g[i]];
    ++pred_[q];
    if (q == g[i]) ++intersection_[q];
  }
}

void IouAccumulator::merge(const IouAccumulator &other) {
  if (other.num_classes_ != num_classes_) {
    throw Error(ErrorCode::kDimension, "cannot merge accumulators of different C");
  }
  for (std::size_t c = 0; c < num_classes_; ++c) {
    intersection_[c] += other.intersection_[c];
    gt_[c] += other.gt_[c];
    pred_[c] += other.pred_[c];
  }
}

IoUReport IouAccumulator::finalize(bool include_background) const {
  IoUReport report;
  report.includes_background = include_background;
  report.parts.resize(num_classes_);
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t c = 0; c < num_classes_; ++c) {
    PartIou &part = report.parts[c];
    part.intersection = intersection_[c];
    part.gt = gt_[c];
    part.predicted = pred_[c];
    part.union_count = gt_[c] + pred_[c] - intersection_[c];
    if (part.union_count > 0) {
      part.iou = static_cast<double>(part.intersection) /
                 static_cast<double>(part.union_count);
      if (c > 0 || include_background) {
        sum += *part.iou;
        ++defined;
      }
    }
  }
  if (defined > 0) report.miou = sum / static_cast<double>(defined);
  return report;
}

IouAccumulator &accumulate_iou(const LabelMask &pred, const LabelMask &gt,
                               IouAccumulator &acc) {
  acc.add(pred, gt);
  return acc;
}

PseudoLabelQuality pseudolabel_quality(const LabelMask &pseudo,
                                       const LabelMask &gt) {
  require_same_shape(pseudo, gt);
  const std::size_t classes =
      std::max<std::size_t>(pseudo.num_classes(), gt.num_classes());
  std::vector<std::uint64_t> hits(classes, 0), claimed(classes, 0);
  PseudoLabelQuality q;
  const auto p = pseudo.labels();
  const auto g = gt.labels();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == kIgnoreLabel) continue;
    ++q.covered;
    if (g[i] == kIgnoreLabel) continue;
    ++q.evaluated;
    ++claimed[p[i]];
    if (p[i] == g[i]) {
      ++q.correct;
      ++hits[p[i]];
    }
  }
  q.coverage = static_cast<double>(q.covered) / static_cast<double>(p.size());
  if (q.evaluated > 0) {
    q.accuracy = static_cast<double>(q.correct) / static_cast<double>(q.evaluated);
  }
  q.precision.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    if (claimed[c] > 0) {
      q.precision[c] =
          static_cast<double>(hits[c]) / static_cast<double>(claimed[c]);
    }
  }
  return q;
}

LabelRemap::LabelRemap(std::uint16_t from_classes, std::uint16_t to_classes,
                       std::vector<std::uint8_t> table)
    : from_classes_(from_classes),
      to_classes_(to_classes),
      table_(std::move(table)) {
  if (from_classes == 0 || to_classes == 0 || to_classes > kIgnoreLabel) {
    throw Error(ErrorCode::kFormat, "remap class counts out of range");
  }
  if (table_.size() != from_classes) {
    throw Error(ErrorCode::kFormat, "remap table must cover every source class");
  }
  for (std::size_t c = 0; c < table_.size(); ++c) {
    if (table_[c] >= to_classes) {
      throw Error(ErrorCode::kFormat, "remap target for class " +
                                          std::to_string(c) + " out of range");
    }
  }
}

LabelMask LabelRemap::apply(const LabelMask &mask) const {
  if (mask.num_classes() != from_classes_) {
    throw Error(ErrorCode::kDimension,
                "remap expects " + std::to_string(from_classes_) +
                    " classes, mask has " + std::to_string(mask.num_classes()));
  }
  std::vector<std::uint8_t> out(mask.labels().begin(), mask.labels().end());
  for (auto &l : out) {
    if (l != kIgnoreLabel) l = table_[l];
  }
  return LabelMask(mask.rows(), mask.cols(), to_classes_, std::move(out));
}

}  // namespace gmg
