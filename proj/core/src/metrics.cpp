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

#include "asymseg/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace asymseg {
namespace {

void check_dims(const Dims& a, const Dims& b) {
  if (a != b) {
    throw std::invalid_argument("dimension mismatch: " + to_string(a) +
                                " vs " + to_string(b));
  }
}

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

struct Point3 {
  double x, y, z;
};

double dist2(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

// Exact nearest-neighbour lookup over a uniform grid of buckets. Buckets
// are searched in growing Chebyshev rings until the next ring cannot hold
// anything closer than the best hit so far.
class BucketIndex {
 public:
  static constexpr std::int64_t kBucket = 8;

  BucketIndex(const std::vector<Index3>& voxels, const Dims& dims,
              const Spacing& spacing)
      : spacing_(spacing),
        grid_{(dims.nx + kBucket - 1) / kBucket,
              (dims.ny + kBucket - 1) / kBucket,
              (dims.nz + kBucket - 1) / kBucket},
        buckets_(grid_.count()) {
    for (const auto& v : voxels) {
      buckets_[grid_.index(v.x / kBucket, v.y / kBucket, v.z / kBucket)]
          .push_back(physical(v));
    }
    min_spacing_ = std::min({spacing.sx, spacing.sy, spacing.sz});
  }

  Point3 physical(const Index3& v) const {
    return {v.x * spacing_.sx, v.y * spacing_.sy, v.z * spacing_.sz};
  }

  double nearest(const Index3& q) const {
    const Point3 qp = physical(q);
    const std::int64_t bx = q.x / kBucket, by = q.y / kBucket,
                       bz = q.z / kBucket;
    const std::int64_t max_ring =
        std::max({grid_.nx, grid_.ny, grid_.nz});
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t r = 0; r <= max_ring; ++r) {
      for (std::int64_t i = bx - r; i <= bx + r; ++i) {
        for (std::int64_t j = by - r; j <= by + r; ++j) {
          for (std::int64_t k = bz - r; k <= bz + r; ++k) {
            if (std::max({std::abs(i - bx), std::abs(j - by),
                          std::abs(k - bz)}) != r) {
              continue;
            }
            if (!grid_.contains(i, j, k)) continue;
            for (const auto& p : buckets_[grid_.index(i, j, k)]) {
              best = std::min(best, dist2(qp, p));
            }
          }
        }
      }
      // Anything in ring r+1 is at least r*kBucket+1 voxels away on some
      // axis.
      const double bound = static_cast<double>(r * kBucket + 1) * min_spacing_;
      if (best <= bound * bound) break;
    }
    return std::sqrt(best);
  }

 private:
  Spacing spacing_;
  Dims grid_;
  std::vector<std::vector<Point3>> buckets_;
  double min_spacing_ = 1.0;
};

// Pair count above which the bucket index replaces the all-pairs scan.
constexpr double kBruteForcePairs = 5e7;

double mean_nearest(const std::vector<Index3>& from,
                    const std::vector<Index3>& to, const Dims& dims,
                    const Spacing& spacing) {
  double sum = 0.0;
  if (static_cast<double>(from.size()) * static_cast<double>(to.size()) <=
      kBruteForcePairs) {
    std::vector<Point3> targets;
    targets.reserve(to.size());
    for (const auto& v : to) {
      targets.push_back({v.x * spacing.sx, v.y * spacing.sy, v.z * spacing.sz});
    }
    for (const auto& v : from) {
      const Point3 q{v.x * spacing.sx, v.y * spacing.sy, v.z * spacing.sz};
      double best = std::numeric_limits<double>::infinity();
      for (const auto& t : targets) best = std::min(best, dist2(q, t));
      sum += std::sqrt(best);
    }
  } else {
    const BucketIndex index(to, dims, spacing);
    for (const auto& v : from) sum += index.nearest(v);
  }
  return sum / static_cast<double>(from.size());
}

PrPoint pr_point(double t, std::uint64_t tp, std::uint64_t predicted,
                 std::uint64_t positives) {
  return {t, static_cast<double>(tp) / static_cast<double>(predicted),
          static_cast<double>(tp) / static_cast<double>(positives)};
}

std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt_number(*v) : std::string("null");
}

nlohmann::ordered_json json_optional(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

ConfusionCounts confusion(const Mask& prediction, const Mask& truth) {
  check_dims(prediction.dims(), truth.dims());
  ConfusionCounts c;
  const auto p = prediction.data();
  const auto g = truth.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i]) {
      g[i] ? ++c.tp : ++c.fp;
    } else {
      g[i] ? ++c.fn : ++c.tn;
    }
  }
  return c;
}

VoxelMetrics voxel_metrics(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double fn = static_cast<double>(c.fn);
  const double tn = static_cast<double>(c.tn);
  VoxelMetrics m;
  m.dsc = ratio(2.0 * tp, 2.0 * tp + fp + fn);
  m.jaccard = ratio(tp, tp + fp + fn);
  m.ppv = ratio(tp, tp + fp);
  m.tpr = ratio(tp, tp + fn);
  m.specificity = ratio(tn, tn + fp);
  m.f2 = ratio(5.0 * tp, 5.0 * tp + 4.0 * fn + fp);
  m.vd = ratio(std::abs((tp + fp) - (tp + fn)), tp + fn);
  return m;
}

ComponentLabeling connected_components(const Mask& m) {
  const Dims& d = m.dims();
  ComponentLabeling out;
  out.dims = d;
  out.labels.assign(d.count(), 0);
  std::vector<Index3> stack;
  for (std::int64_t x = 0; x < d.nx; ++x) {
    for (std::int64_t y = 0; y < d.ny; ++y) {
      for (std::int64_t z = 0; z < d.nz; ++z) {
        const std::size_t seed = d.index(x, y, z);
        if (!m[seed] || out.labels[seed] != 0) continue;
        const std::int32_t id = ++out.count;
        std::size_t size = 0;
        out.labels[seed] = id;
        stack.push_back({x, y, z});
        while (!stack.empty()) {
          const Index3 v = stack.back();
          stack.pop_back();
          ++size;
          for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
              for (std::int64_t dz = -1; dz <= 1; ++dz) {
                const std::int64_t a = v.x + dx, b = v.y + dy, c = v.z + dz;
                if (!d.contains(a, b, c)) continue;
                const std::size_t n = d.index(a, b, c);
                if (m[n] && out.labels[n] == 0) {
                  out.labels[n] = id;
                  stack.push_back({a, b, c});
                }
              }
            }
          }
        }
        out.sizes.push_back(size);
      }
    }
  }
  return out;
}

LesionMetrics lesion_metrics(const Mask& prediction, const Mask& truth) {
  check_dims(prediction.dims(), truth.dims());
  const auto truth_cc = connected_components(truth);
  const auto pred_cc = connected_components(prediction);
  std::vector<char> hit(static_cast<std::size_t>(truth_cc.count), 0);
  std::vector<char> touches(static_cast<std::size_t>(pred_cc.count), 0);
  for (std::size_t i = 0; i < truth_cc.labels.size(); ++i) {
    const auto t = truth_cc.labels[i];
    const auto p = pred_cc.labels[i];
    if (t && p) {
      hit[static_cast<std::size_t>(t - 1)] = 1;
      touches[static_cast<std::size_t>(p - 1)] = 1;
    }
  }
  LesionMetrics r;
  r.truth_lesions = static_cast<std::size_t>(truth_cc.count);
  r.predicted_lesions = static_cast<std::size_t>(pred_cc.count);
  r.detected = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
  r.spurious = r.predicted_lesions -
               static_cast<std::size_t>(
                   std::count(touches.begin(), touches.end(), 1));
  r.ltpr = ratio(static_cast<double>(r.detected),
                 static_cast<double>(r.truth_lesions));
  r.lfpr = ratio(static_cast<double>(r.spurious),
                 static_cast<double>(r.predicted_lesions));
  return r;
}

VoxelLesionRates voxel_lesion_rates(const ConfusionCounts& c) {
  return {ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn)),
          ratio(static_cast<double>(c.fp), static_cast<double>(c.fp + c.tn))};
}

std::vector<Index3> boundary_voxels(const Mask& m) {
  const Dims& d = m.dims();
  static constexpr std::array<std::array<int, 3>, 6> kFaces{
      {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};
  std::vector<Index3> out;
  for (std::int64_t x = 0; x < d.nx; ++x) {
    for (std::int64_t y = 0; y < d.ny; ++y) {
      for (std::int64_t z = 0; z < d.nz; ++z) {
        if (!m.at(x, y, z)) continue;
        for (const auto& f : kFaces) {
          const std::int64_t a = x + f[0], b = y + f[1], c = z + f[2];
          if (!d.contains(a, b, c) || !m.at(a, b, c)) {
            out.push_back({x, y, z});
            break;
          }
        }
      }
    }
  }
  return out;
}

std::optional<double> surface_distance(const Mask& prediction,
                                       const Mask& truth,
                                       const Spacing& spacing) {
  check_dims(prediction.dims(), truth.dims());
  const auto pb = boundary_voxels(prediction);
  const auto gb = boundary_voxels(truth);
  if (pb.empty() || gb.empty()) return std::nullopt;
  const double forward = mean_nearest(pb, gb, prediction.dims(), spacing);
  const double backward = mean_nearest(gb, pb, prediction.dims(), spacing);
  return 0.5 * (forward + backward);
}

double area_under_pr(std::vector<PrPoint> points) {
  if (points.empty()) return 0.0;
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.recall < b.recall ||
           (a.recall == b.recall && a.precision > b.precision);
  });
  std::vector<PrPoint> curve;
  for (const auto& p : points) {
    if (curve.empty() || curve.back().recall != p.recall) curve.push_back(p);
  }
  double area = curve.front().recall * curve.front().precision;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].recall - curve[i - 1].recall) *
            (curve[i].precision + curve[i - 1].precision) / 2.0;
  }
  return area;
}

PrCurve pr_curve(const ProbabilityMap& prob, const Mask& truth,
                 int n_thresholds) {
  check_dims(prob.dims(), truth.dims());
  if (n_thresholds < 1) throw std::invalid_argument("n_thresholds must be >= 1");
  const std::uint64_t positives = truth.count();
  if (positives == 0) {
    throw std::invalid_argument("PR curve undefined for empty ground truth");
  }
  // Bucket each voxel by the highest threshold index it passes, then sweep
  // from the top: counts at threshold k are suffix sums over buckets >= k.
  const auto n = static_cast<std::size_t>(n_thresholds);
  std::vector<std::uint64_t> lesion(n + 1, 0), all(n + 1, 0);
  const auto p = prob.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    // Largest k with k/n <= p[i]; guarded against rounding of k/n.
    auto k = static_cast<std::size_t>(std::floor(p[i] * n_thresholds));
    k = std::min(k, n);
    while (k < n && static_cast<double>(k + 1) / n_thresholds <= p[i]) ++k;
    while (k > 0 && static_cast<double>(k) / n_thresholds > p[i]) --k;
    ++all[k];
    if (truth[i]) ++lesion[k];
  }
  PrCurve out;
  std::uint64_t tp = 0, predicted = 0;
  std::vector<PrPoint> reversed;
  for (std::size_t k = n + 1; k-- > 0;) {
    tp += lesion[k];
    predicted += all[k];
    if (predicted == 0) continue;
    reversed.push_back(pr_point(static_cast<double>(k) / n_thresholds, tp,
                                predicted, positives));
  }
  out.points.assign(reversed.rbegin(), reversed.rend());
  out.apr = area_under_pr(out.points);
  return out;
}

PrCurve pr_curve_exhaustive(const ProbabilityMap& prob, const Mask& truth) {
  check_dims(prob.dims(), truth.dims());
  const std::uint64_t positives = truth.count();
  if (positives == 0) {
    throw std::invalid_argument("PR curve undefined for empty ground truth");
  }
  std::vector<std::pair<double, std::uint8_t>> scored;
  scored.reserve(prob.data().size());
  for (std::size_t i = 0; i < prob.data().size(); ++i) {
    scored.emplace_back(prob[i], truth[i]);
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  PrCurve out;
  std::uint64_t tp = 0, predicted = 0;
  std::vector<PrPoint> reversed;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    tp += scored[i].second;
    ++predicted;
    if (i + 1 < scored.size() && scored[i + 1].first == scored[i].first) {
      continue;
    }
    reversed.push_back(pr_point(scored[i].first, tp, predicted, positives));
  }
  out.points.assign(reversed.rbegin(), reversed.rend());
  out.apr = area_under_pr(out.points);
  return out;
}

MetricsReport evaluate(const Mask& prediction, const Mask& truth,
                       const Spacing& spacing, const ProbabilityMap* prob,
                       int n_thresholds) {
  MetricsReport r;
  r.counts = confusion(prediction, truth);
  const auto v = voxel_metrics(r.counts);
  r.dsc = v.dsc;
  r.jaccard = v.jaccard;
  r.ppv = v.ppv;
  r.tpr = v.tpr;
  r.specificity = v.specificity;
  r.f2 = v.f2;
  r.vd = v.vd;
  const auto lesion = lesion_metrics(prediction, truth);
  r.ltpr = lesion.ltpr;
  r.lfpr = lesion.lfpr;
  const auto voxel_rates = voxel_lesion_rates(r.counts);
  r.ltpr_voxel = voxel_rates.ltpr;
  r.lfpr_voxel = voxel_rates.lfpr;
  r.sd_mm = surface_distance(prediction, truth, spacing);
  r.seg_volume = prediction.count();
  if (prob != nullptr && truth.count() > 0) {
    auto curve = pr_curve(*prob, truth, n_thresholds);
    r.apr = curve.apr;
    r.pr_curve = std::move(curve.points);
  }
  return r;
}

std::string to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["tp"] = r.counts.tp;
  j["fp"] = r.counts.fp;
  j["fn"] = r.counts.fn;
  j["tn"] = r.counts.tn;
  j["dsc"] = json_optional(r.dsc);
  j["jaccard"] = json_optional(r.jaccard);
  j["ppv"] = json_optional(r.ppv);
  j["tpr"] = json_optional(r.tpr);
  j["specificity"] = json_optional(r.specificity);
  j["f2"] = json_optional(r.f2);
  j["ltpr"] = json_optional(r.ltpr);
  j["lfpr"] = json_optional(r.lfpr);
  j["ltpr_voxel"] = json_optional(r.ltpr_voxel);
  j["lfpr_voxel"] = json_optional(r.lfpr_voxel);
  j["vd"] = json_optional(r.vd);
  j["sd_mm"] = json_optional(r.sd_mm);
  j["apr"] = json_optional(r.apr);
  j["seg_volume"] = r.seg_volume;
  return j.dump(2) + "\n";
}

std::string to_csv(const MetricsReport& r) {
  std::string header =
      "tp,fp,fn,tn,dsc,jaccard,ppv,tpr,specificity,f2,ltpr,lfpr,ltpr_voxel,"
      "lfpr_voxel,vd,sd_mm,apr,seg_volume\n";
  std::string row = std::to_string(r.counts.tp) + "," +
                    std::to_string(r.counts.fp) + "," +
                    std::to_string(r.counts.fn) + "," +
                    std::to_string(r.counts.tn);
  for (const auto* v : {&r.dsc, &r.jaccard, &r.ppv, &r.tpr, &r.specificity,
                        &r.f2, &r.ltpr, &r.lfpr, &r.ltpr_voxel, &r.lfpr_voxel,
                        &r.vd, &r.sd_mm, &r.apr}) {
    row += "," + fmt_optional(*v);
  }
  row += "," + std::to_string(r.seg_volume) + "\n";
  return header + row;
}

std::string pr_curve_csv(const std::vector<PrPoint>& points) {
  std::string out = "threshold,precision,recall\n";
  for (const auto& p : points) {
    out += fmt_number(p.threshold) + "," + fmt_number(p.precision) + "," +
           fmt_number(p.recall) + "\n";
  }
  return out;
}

}  // namespace asymseg
