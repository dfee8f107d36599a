#include "g4d/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace g4d {

namespace {

constexpr float kInf = std::numeric_limits<float>::infinity();

}  // namespace

ConsistencyMap dual_consistency(const GaussianFrame& frame_a, const GaussianFrame& frame_b,
                                const MotionField& motion_a, MotionDirection direction,
                                const FlowField& flow_a_to_b) {
  require(motion_a.view >= 0 && std::size_t(motion_a.view) < frame_a.views.size() &&
              std::size_t(motion_a.view) < frame_b.views.size(),
          ErrorCode::ShapeMismatch, "motion view index out of range");
  const ViewMaps& maps_a = frame_a.views[motion_a.view];
  const ViewMaps& maps_b = frame_b.views[motion_a.view];
  require(maps_a.height == maps_b.height && maps_a.width == maps_b.width &&
              motion_a.height == maps_a.height && motion_a.width == maps_a.width &&
              flow_a_to_b.height == maps_a.height && flow_a_to_b.width == maps_a.width,
          ErrorCode::ShapeMismatch, "frames, motion and flow must share H x W");

  const int H = maps_a.height, W = maps_a.width;
  const std::size_t n = maps_a.pixel_count();
  ConsistencyMap map;
  map.view = motion_a.view;
  map.height = H;
  map.width = W;
  map.distance.assign(n, kInf);
  map.target.assign(n, -1);

  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = std::size_t(y) * W + x;
      if (!maps_a.valid[i]) continue;
      const Eigen::Vector2f mu = flow_a_to_b.at(i);
      const long tx = std::lround(x + double(mu.x()));
      const long ty = std::lround(y + double(mu.y()));
      if (tx < 0 || tx >= W || ty < 0 || ty >= H) continue;  // left the image: occluded
      const std::size_t j = std::size_t(ty) * W + tx;
      if (!maps_b.valid[j]) continue;  // no Gaussian there: occluded
      const Eigen::Vector3f m = direction == MotionDirection::Backward
                                    ? motion_a.backward_at(i)
                                    : motion_a.forward_at(i);
      const Eigen::Vector3d deformed = (maps_a.position_at(i) + m).cast<double>();
      const Eigen::Vector3d retrieved = maps_b.position_at(j).cast<double>();
      map.distance[i] = static_cast<float>((deformed - retrieved).norm());
      map.target[i] = static_cast<std::int32_t>(j);
    }
  }
  return map;
}

ConsistencyMap dual_consistency(const GaussianFrame& frame_a, const GaussianFrame& frame_b,
                                const MotionField& motion_a, MotionDirection direction,
                                const Camera& camera) {
  const ProjectedFlow projected = project_scene_flow(frame_a, motion_a, camera, direction);
  return dual_consistency(frame_a, frame_b, motion_a, direction, projected.flow);
}

OcclusionSplit split_by_occlusion(const GaussianCloud& cloud, const ConsistencyMap& map,
                                  double tau) {
  require(tau > 0.0, ErrorCode::BadConfig, "tau must be positive");
  const std::size_t n = std::size_t(map.height) * std::size_t(map.width);
  OcclusionSplit split;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const SourceTag& tag = cloud.source[i];
    if (tag.view != map.view) continue;
    require(tag.pixel >= 0 && std::size_t(tag.pixel) < n, ErrorCode::ShapeMismatch,
            "source pixel outside the consistency map");
    const float d = map.distance[std::size_t(tag.pixel)];
    if (d > tau) {
      split.occluded.append(cloud, i);
    } else {
      split.matched.append(cloud, i);
      split.pair_target.push_back(map.target[std::size_t(tag.pixel)]);
    }
  }
  return split;
}

OcclusionSplit split_by_occlusion(const GaussianFrame& frame, const ConsistencyMap& map,
                                  double tau) {
  return split_by_occlusion(flatten(frame), map, tau);
}

FusionFunction FusionFunction::average() { return FusionFunction(); }

FusionFunction FusionFunction::perceptron(MlpWeights weights) {
  require(weights.input == kFusionFeatureSize && weights.output == kFusionOutputSize,
          ErrorCode::WeightFileMismatch,
          "fusion perceptron expects input 29 and output 14");
  require(weights.hidden >= 1, ErrorCode::WeightFileMismatch, "hidden width must be >= 1");
  require(weights.w1.size() == std::size_t(weights.hidden) * weights.input &&
              weights.b1.size() == weights.hidden &&
              weights.w2.size() == std::size_t(weights.output) * weights.hidden &&
              weights.b2.size() == weights.output,
          ErrorCode::WeightFileMismatch, "weight array sizes disagree with the layer shapes");
  require(all_finite(weights.w1) && all_finite(weights.b1) && all_finite(weights.w2) &&
              all_finite(weights.b2),
          ErrorCode::NonFiniteValue, "weights must be finite");
  FusionFunction fn;
  fn.average_ = false;
  fn.weights_ = std::move(weights);
  return fn;
}

namespace {

// Pair feature layout, also recorded in the weight-file note:
//   [0:3)   position of the member minus the pair midpoint
//   [3]     opacity
//   [4:7)   color
//   [7:11)  quaternion (member b sign-aligned to member a)
//   [11:14) scale
// for member a, then the same 14 values for member b, then the consistency
// distance. The output uses the first layout block; the position block is an
// offset from the pair midpoint.
void build_features(const GaussianCloud& a, const GaussianCloud& b, std::size_t i,
                    float distance, float* features, Eigen::Vector3f& midpoint,
                    float* qb_aligned) {
  const Eigen::Vector3f pa = a.position_at(i);
  const Eigen::Vector3f pb = b.position_at(i);
  midpoint = 0.5f * (pa + pb);

  double dot = 0.0;
  for (int c = 0; c < 4; ++c) dot += double(a.rotation[4 * i + c]) * b.rotation[4 * i + c];
  const float sign = dot < 0.0 ? -1.0f : 1.0f;
  for (int c = 0; c < 4; ++c) qb_aligned[c] = sign * b.rotation[4 * i + c];

  for (int c = 0; c < 3; ++c) features[c] = pa[c] - midpoint[c];
  features[3] = a.opacity[i];
  for (int c = 0; c < 3; ++c) features[4 + c] = a.color[3 * i + c];
  for (int c = 0; c < 4; ++c) features[7 + c] = a.rotation[4 * i + c];
  for (int c = 0; c < 3; ++c) features[11 + c] = a.scale[3 * i + c];

  for (int c = 0; c < 3; ++c) features[14 + c] = pb[c] - midpoint[c];
  features[17] = b.opacity[i];
  for (int c = 0; c < 3; ++c) features[18 + c] = b.color[3 * i + c];
  for (int c = 0; c < 4; ++c) features[21 + c] = qb_aligned[c];
  for (int c = 0; c < 3; ++c) features[25 + c] = b.scale[3 * i + c];
  features[28] = distance;
}

// Clamps raw attribute outputs so the fused cloud always validates.
void emit_gaussian(GaussianCloud& out, const float* attrs, const Eigen::Vector3f& midpoint,
                   const SourceTag& tag) {
  for (int c = 0; c < 3; ++c) out.position.push_back(midpoint[c] + attrs[c]);
  out.opacity.push_back(std::clamp(attrs[3], 0.0f, 1.0f));
  for (int c = 0; c < 3; ++c) out.color.push_back(std::clamp(attrs[4 + c], 0.0f, 1.0f));
  float q[4] = {attrs[7], attrs[8], attrs[9], attrs[10]};
  normalize_quaternion(q);
  for (int c = 0; c < 4; ++c) out.rotation.push_back(q[c]);
  for (int c = 0; c < 3; ++c) out.scale.push_back(std::max(attrs[11 + c], 1e-12f));
  out.source.push_back(tag);
}

}  // namespace

GaussianCloud fuse(const GaussianCloud& a, const GaussianCloud& b,
                   std::span<const float> pair_distance, const FusionFunction& fn) {
  require(a.size() == b.size(), ErrorCode::LengthMismatch, "pair clouds differ in size");
  require(pair_distance.empty() || pair_distance.size() == a.size(), ErrorCode::LengthMismatch,
          "pair distances must match the pair count");

  GaussianCloud out;
  out.reserve(a.size());
  std::vector<float> hidden;
  if (!fn.is_average()) hidden.resize(fn.weights().hidden);

  for (std::size_t i = 0; i < a.size(); ++i) {
    float features[kFusionFeatureSize];
    float qb[4];
    Eigen::Vector3f midpoint;
    const float d = pair_distance.empty() ? 0.0f : pair_distance[i];
    build_features(a, b, i, d, features, midpoint, qb);

    float attrs[kFusionOutputSize];
    if (fn.is_average()) {
      for (std::uint32_t k = 0; k < kFusionOutputSize; ++k) {
        attrs[k] = 0.5f * (features[k] + features[14 + k]);
      }
    } else {
      const MlpWeights& w = fn.weights();
      for (std::uint32_t h = 0; h < w.hidden; ++h) {
        float acc = w.b1[h];
        const float* row = &w.w1[std::size_t(h) * w.input];
        for (std::uint32_t k = 0; k < w.input; ++k) acc += row[k] * features[k];
        hidden[h] = acc > 0.0f ? acc : 0.0f;  // ReLU
      }
      for (std::uint32_t o = 0; o < w.output; ++o) {
        float acc = w.b2[o];
        const float* row = &w.w2[std::size_t(o) * w.hidden];
        for (std::uint32_t h = 0; h < w.hidden; ++h) acc += row[h] * hidden[h];
        attrs[o] = acc;
      }
    }
    emit_gaussian(out, attrs, midpoint, a.source[i]);
  }
  out.validate();
  return out;
}

Interpolation interpolate_time(const GaussianFrame& frame_t, const GaussianFrame& frame_tm1,
                               std::span<const MotionField> motions_t,
                               std::span<const MotionField> motions_tm1, double t_prime,
                               double tau, const FusionFunction& fn, const CameraSet& cameras) {
  require(tau > 0.0, ErrorCode::BadConfig, "tau must be positive");
  require(cameras.size() == frame_t.views.size(), ErrorCode::LengthMismatch,
          "need one camera per view");

  WarpedClouds warped = warp_to_time(frame_t, frame_tm1, motions_t, motions_tm1, t_prime);

  // Per-view compact index: pixel -> row in the flattened warped clouds.
  const auto build_index = [](const GaussianCloud& cloud, std::size_t n_views, std::size_t n) {
    std::vector<std::vector<std::int64_t>> index(n_views,
                                                 std::vector<std::int64_t>(n, -1));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      index[cloud.source[i].view][std::size_t(cloud.source[i].pixel)] = std::int64_t(i);
    }
    return index;
  };
  const std::size_t n = std::size_t(frame_t.height()) * std::size_t(frame_t.width());
  const auto index_t = build_index(warped.from_current, frame_t.views.size(), n);
  const auto index_tm1 = build_index(warped.from_previous, frame_tm1.views.size(), n);

  Interpolation result;
  GaussianCloud matched_a, matched_b;
  std::vector<float> pair_distance;

  for (std::size_t v = 0; v < frame_t.views.size(); ++v) {
    const ConsistencyMap map_t = dual_consistency(frame_t, frame_tm1, motions_t[v],
                                                  MotionDirection::Backward, cameras[v]);
    const ConsistencyMap map_tm1 = dual_consistency(frame_tm1, frame_t, motions_tm1[v],
                                                    MotionDirection::Forward, cameras[v]);
    for (std::size_t i = 0; i < n; ++i) {
      if (index_t[v][i] >= 0) {
        const std::size_t row = std::size_t(index_t[v][i]);
        if (map_t.distance[i] > tau) {
          result.cloud.append(warped.from_current, row);
          ++result.occluded_from_current;
        } else {
          const std::int64_t row_b = index_tm1[v][std::size_t(map_t.target[i])];
          require(row_b >= 0, ErrorCode::InternalError,
                  "matched retrieval target missing from the warped counterpart");
          matched_a.append(warped.from_current, row);
          matched_b.append(warped.from_previous, std::size_t(row_b));
          pair_distance.push_back(map_t.distance[i]);
        }
      }
      if (index_tm1[v][i] >= 0 && map_tm1.distance[i] > tau) {
        result.cloud.append(warped.from_previous, std::size_t(index_tm1[v][i]));
        ++result.occluded_from_previous;
      }
    }
  }

  const GaussianCloud fused = fuse(matched_a, matched_b, pair_distance, fn);
  result.fused_pairs = fused.size();
  result.cloud.append_all(fused);
  result.cloud.validate();
  return result;
}

PhotometricLoss fusion_loss(std::span<const Image> rendered, std::span<const Image> gt,
                            const LossWeights& weights, const PerceptualScorer& scorer) {
  require(rendered.size() == gt.size(), ErrorCode::ShapeMismatch,
          "rendered and GT image counts differ");
  PhotometricLoss loss;
  for (std::size_t v = 0; v < rendered.size(); ++v) {
    PhotometricBreakdown terms = photometric_terms(rendered[v], gt[v], scorer);
    loss.l2 += terms.l2;
    loss.ssim += terms.ssim;
    loss.lpips += terms.lpips;
    loss.per_view.push_back(terms);
  }
  loss.total = loss.l2 + weights.lambda_ssim * loss.ssim + weights.lambda_lpips * loss.lpips;
  return loss;
}

}  // namespace g4d
