#pragma once

#include "gmg/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace gmg {

struct PartIou {
  std::uint64_t intersection = 0;
  std::uint64_t union_count = 0;
  std::uint64_t gt = 0;
  std::uint64_t predicted = 0;
  std::optional<double> iou;  // absent when the part never occurs
};

struct IoUReport {
  std::vector<PartIou> parts;  // indexed by class
  std::optional<double> miou;
  bool includes_background = false;
};

// Exact integer pixel counts per class. GT IGNORE pixels are skipped,
// predicted IGNORE counts as background. Merging is associative and
// commutative, so split evaluations combine to the same counts.
class IouAccumulator {
 public:
  explicit IouAccumulator(std::uint16_t num_classes);

  std::uint16_t num_classes() const { return num_classes_; }
  void add(const LabelMask &pred, const LabelMask &gt);
  void merge(const IouAccumulator &other);
  IoUReport finalize(bool include_background = false) const;

  std::uint64_t intersection(std::size_t c) const { return intersection_[c]; }
  std::uint64_t gt_count(std::size_t c) const { return gt_[c]; }
  std::uint64_t pred_count(std::size_t c) const { return pred_[c]; }

  friend bool operator==(const IouAccumulator &, const IouAccumulator &) = default;

 private:
  std::uint16_t num_classes_;
  std::vector<std::uint64_t> intersection_;
  std::vector<std::uint64_t> gt_;
  std::vector<std::uint64_t> pred_;
};

IouAccumulator &accumulate_iou(const LabelMask &pred, const LabelMask &gt,
                               IouAccumulator &acc);

struct PseudoLabelQuality {
  std::optional<double> accuracy;  // over covered pixels with known GT
  double coverage = 0.0;
  std::vector<std::optional<double>> precision;  // per class
  std::uint64_t covered = 0;
  std::uint64_t evaluated = 0;
  std::uint64_t correct = 0;
};

PseudoLabelQuality pseudolabel_quality(const LabelMask &pseudo,
                                       const LabelMask &gt);

// Many-to-one class merge (fine part labels onto a coarser label space).
// IGNORE always maps to IGNORE.
class LabelRemap {
 public:
  LabelRemap(std::uint16_t from_classes, std::uint16_t to_classes,
             std::vector<std::uint8_t> table);

  std::uint16_t from_classes() const { return from_classes_; }
  std::uint16_t to_classes() const { return to_classes_; }
  LabelMask apply(const LabelMask &mask) const;

 private:
  std::uint16_t from_classes_;
  std::uint16_t to_classes_;
  std::vector<std::uint8_t> table_;
};

}  // namespace gmg
