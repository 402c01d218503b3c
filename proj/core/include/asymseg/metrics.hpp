/*
 * Copyright 2026 The asymseg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Segmentation evaluation for heavily unbalanced masks: voxel overlap
// scores, lesion-wise detection rates over 26-connected components,
// symmetric surface distance and precision-recall analysis.
//
// A metric whose denominator is zero is undefined and is returned as an
// empty optional; it is never folded into 0.

#ifndef ASYMSEG_METRICS_HPP_
#define ASYMSEG_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asymseg/patching.hpp"
#include "asymseg/volume.hpp"

namespace asymseg {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&,
                         const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const Mask& prediction, const Mask& truth);

struct VoxelMetrics {
  std::optional<double> dsc;
  std::optional<double> jaccard;
  std::optional<double> ppv;
  std::optional<double> tpr;
  std::optional<double> specificity;
  std::optional<double> f2;
  // |predicted volume - true volume| / true volume.
  std::optional<double> vd;
};

VoxelMetrics voxel_metrics(const ConfusionCounts& c);

struct ComponentLabeling {
  Dims dims;
  // 0 is background; components are 1..count in first-encounter scan order.
  std::vector<std::int32_t> labels;
  std::int32_t count = 0;
  // sizes[id - 1] is the voxel count of component id.
  std::vector<std::size_t> sizes;
};

// 26-connected components.
ComponentLabeling connected_components(const Mask& m);

struct LesionMetrics {
  std::optional<double> ltpr;
  std::optional<double> lfpr;
  std::size_t truth_lesions = 0;
  std::size_t predicted_lesions = 0;
  std::size_t detected = 0;
  std::size_t spurious = 0;
};

// A true lesion is detected when it shares at least one voxel with the
// prediction; a predicted lesion is spurious when it shares none with the
// truth. ltpr = detected / truth lesions, lfpr = spurious / predicted.
LesionMetrics lesion_metrics(const Mask& prediction, const Mask& truth);

// Voxel-count reading of the lesion rates: TP/(TP+FN) and FP/(FP+TN).
struct VoxelLesionRates {
  std::optional<double> ltpr;
  std::optional<double> lfpr;
};
VoxelLesionRates voxel_lesion_rates(const ConfusionCounts& c);

// Set voxels with an unset 6-neighbour or touching the volume border.
std::vector<Index3> boundary_voxels(const Mask& m);

// Mean Euclidean distance (mm) from each predicted boundary voxel to the
// nearest true boundary voxel, averaged with the reverse direction.
// Undefined when either mask is empty.
std::optional<double> surface_distance(const Mask& prediction,
                                       const Mask& truth,
                                       const Spacing& spacing);

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct PrCurve {
  // Ordered by threshold ascending; thresholds with no positive
  // predictions are omitted.
  std::vector<PrPoint> points;
  double apr = 0.0;
};

inline constexpr int kDefaultPrThresholds = 100;

// Thresholds k / n_thresholds for k = 0..n_thresholds; a voxel is positive
// when its probability is >= the threshold. Throws on empty truth.
PrCurve pr_curve(const ProbabilityMap& prob, const Mask& truth,
                 int n_thresholds = kDefaultPrThresholds);

// Thresholds at every distinct probability value.
PrCurve pr_curve_exhaustive(const ProbabilityMap& prob, const Mask& truth);

// Trapezoidal area under precision(recall). Points are sorted by recall,
// equal recalls keep their largest precision, and the curve is extended
// flat from the lowest-recall point to recall 0.
double area_under_pr(std::vector<PrPoint> points);

struct MetricsReport {
  ConfusionCounts counts;
  std::optional<double> dsc;
  std::optional<double> jaccard;
  std::optional<double> ppv;
  std::optional<double> tpr;
  std::optional<double> specificity;
  std::optional<double> f2;
  std::optional<double> ltpr;
  std::optional<double> lfpr;
  std::optional<double> ltpr_voxel;
  std::optional<double> lfpr_voxel;
  std::optional<double> vd;
  std::optional<double> sd_mm;
  std::optional<double> apr;
  std::vector<PrPoint> pr_curve;
  std::size_t seg_volume = 0;
};

// Full report for a binary prediction. When `prob` is given the PR curve
// and APR are filled in as well.
MetricsReport evaluate(const Mask& prediction, const Mask& truth,
                       const Spacing& spacing,
                       const ProbabilityMap* prob = nullptr,
                       int n_thresholds = kDefaultPrThresholds);

// Flat JSON object; undefined metrics are null.
std::string to_json(const MetricsReport& r);
// Header line plus one value line; undefined metrics are written as null.
std::string to_csv(const MetricsReport& r);
// threshold,precision,recall rows.
std::string pr_curve_csv(const std::vector<PrPoint>& points);

}  // namespace asymseg

#endif  // ASYMSEG_METRICS_HPP_
