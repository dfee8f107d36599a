#include "g4d/motion.hpp"

#include <cmath>

#include "g4d/metrics.hpp"

namespace g4d {

namespace {

void check_motions_match(const GaussianFrame& frame, std::span<const MotionField> motions) {
  require(motions.size() == frame.views.size(), ErrorCode::ShapeMismatch,
          "need one motion field per view");
  for (std::size_t v = 0; v < motions.size(); ++v) {
    require(motions[v].height == frame.height() && motions[v].width == frame.width(),
            ErrorCode::ShapeMismatch, "motion field shape must match the frame");
  }
}

// Displaces one view's positions in place by factor * motion. A factor of
// exactly zero copies positions verbatim so the t' = t endpoint is bitwise.
void displace_positions(ViewMaps& maps, const MotionField& motion, MotionDirection direction,
                        double factor) {
  if (factor == 0.0) return;
  const std::size_t n = maps.pixel_count();
  const std::vector<float>& m =
      direction == MotionDirection::Backward ? motion.backward : motion.forward;
  const float f = static_cast<float>(factor);
  for (std::size_t i = 0; i < 3 * n; ++i) maps.position[i] += f * m[i];
}

}  // namespace

PhotometricBreakdown photometric_terms(const Image& a, const Image& b,
                                       const PerceptualScorer& scorer) {
  PhotometricBreakdown out;
  require(a.height == b.height && a.width == b.width, ErrorCode::ShapeMismatch,
          "images differ in shape");
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = double(a.values[i]) - double(b.values[i]);
    sum_sq += d * d;
  }
  out.l2 = sum_sq / double(a.values.size());
  out.ssim = 1.0 - ssim(a, b);
  out.lpips = scorer ? scorer(a, b) : 0.0;
  return out;
}

GaussianFrame retarget(const GaussianFrame& frame, std::span<const MotionField> motions,
                       MotionDirection direction) {
  check_motions_match(frame, motions);
  GaussianFrame out = frame;
  for (std::size_t v = 0; v < out.views.size(); ++v) {
    displace_positions(out.views[v], motions[v], direction, 1.0);
    require(all_finite(out.views[v].position), ErrorCode::NonFiniteValue,
            "retargeted positions must be finite");
  }
  out.timestamp = frame.timestamp + (direction == MotionDirection::Backward ? -1 : 1);
  return out;
}

WarpedClouds warp_to_time(const GaussianFrame& frame_t, const GaussianFrame& frame_tm1,
                          std::span<const MotionField> motions_t,
                          std::span<const MotionField> motions_tm1, double t_prime) {
  require(frame_tm1.timestamp == frame_t.timestamp - 1, ErrorCode::TimeOutOfRange,
          "frames must be consecutive (t and t-1)");
  const double t = frame_t.timestamp;
  require(t_prime >= t - 1.0 && t_prime <= t, ErrorCode::TimeOutOfRange,
          "t' must lie in [t-1, t]");
  check_motions_match(frame_t, motions_t);
  check_motions_match(frame_tm1, motions_tm1);

  GaussianFrame warped_t = frame_t;
  GaussianFrame warped_tm1 = frame_tm1;
  const double back_factor = std::abs(t_prime - t);
  const double fwd_factor = std::abs(t_prime - (t - 1.0));
  for (std::size_t v = 0; v < warped_t.views.size(); ++v) {
    displace_positions(warped_t.views[v], motions_t[v], MotionDirection::Backward, back_factor);
  }
  for (std::size_t v = 0; v < warped_tm1.views.size(); ++v) {
    displace_positions(warped_tm1.views[v], motions_tm1[v], MotionDirection::Forward, fwd_factor);
  }

  WarpedClouds out;
  out.from_current = flatten(warped_t);
  out.from_previous = flatten(warped_tm1);
  out.from_current.validate();
  out.from_previous.validate();
  return out;
}

namespace {

PhotometricLoss accumulate_photometric(std::span<const Image> rendered,
                                       std::span<const Image> targets,
                                       const LossWeights& weights,
                                       const PerceptualScorer& scorer) {
  PhotometricLoss loss;
  for (std::size_t v = 0; v < rendered.size(); ++v) {
    PhotometricBreakdown terms = photometric_terms(rendered[v], targets[v], scorer);
    loss.l2 += terms.l2;
    loss.ssim += terms.ssim;
    loss.lpips += terms.lpips;
    loss.per_view.push_back(terms);
  }
  loss.total = loss.l2 + weights.lambda_ssim * loss.ssim + weights.lambda_lpips * loss.lpips;
  return loss;
}

}  // namespace

PhotometricLoss retargeting_loss(const GaussianFrame& frame_t, const GaussianFrame& frame_tm1,
                                 std::span<const MotionField> motions_t, const CameraSet& cameras,
                                 const LossWeights& weights, const RenderConfig& config,
                                 const Renderer& renderer, const PerceptualScorer& scorer) {
  require(cameras.size() == frame_t.views.size(), ErrorCode::LengthMismatch,
          "need one camera per view");
  const Renderer r = renderer ? renderer : Renderer(&render);
  const GaussianFrame retargeted = retarget(frame_t, motions_t, MotionDirection::Backward);
  const GaussianCloud moved = flatten(retargeted);
  const GaussianCloud previous = flatten(frame_tm1);
  std::vector<Image> rendered, targets;
  for (std::size_t v = 0; v < cameras.size(); ++v) {
    rendered.push_back(r(moved, cameras[v], config));
    targets.push_back(r(previous, cameras[v], config));
  }
  return accumulate_photometric(rendered, targets, weights, scorer);
}

PhotometricLoss retargeting_loss(const GaussianFrame& frame_t,
                                 std::span<const Image> captured_targets,
                                 std::span<const MotionField> motions_t, const CameraSet& cameras,
                                 const LossWeights& weights, const RenderConfig& config,
                                 const Renderer& renderer, const PerceptualScorer& scorer) {
  require(cameras.size() == frame_t.views.size() && captured_targets.size() == cameras.size(),
          ErrorCode::LengthMismatch, "need one camera and one target per view");
  const Renderer r = renderer ? renderer : Renderer(&render);
  const GaussianFrame retargeted = retarget(frame_t, motions_t, MotionDirection::Backward);
  const GaussianCloud moved = flatten(retargeted);
  std::vector<Image> rendered;
  for (std::size_t v = 0; v < cameras.size(); ++v) {
    rendered.push_back(r(moved, cameras[v], config));
  }
  return accumulate_photometric(rendered, captured_targets, weights, scorer);
}

ProjectedFlow project_scene_flow(const GaussianFrame& frame, const MotionField& motion,
                                 const Camera& camera, MotionDirection direction) {
  require(motion.view >= 0 && std::size_t(motion.view) < frame.views.size(),
          ErrorCode::ShapeMismatch, "motion view index out of range");
  const ViewMaps& maps = frame.views[motion.view];
  require(motion.height == maps.height && motion.width == maps.width, ErrorCode::ShapeMismatch,
          "motion field shape must match the frame");

  const std::size_t n = maps.pixel_count();
  ProjectedFlow out;
  out.flow = zero_flow(maps.height, maps.width);
  out.valid.height = maps.height;
  out.valid.width = maps.width;
  out.valid.values.assign(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    if (!maps.valid[i]) continue;
    const Eigen::Vector3d p = maps.position_at(i).cast<double>();
    const Eigen::Vector3d m = (direction == MotionDirection::Backward
                                   ? motion.backward_at(i)
                                   : motion.forward_at(i))
                                  .cast<double>();
    const Eigen::Vector3d cam_p = camera.to_camera(p);
    const Eigen::Vector3d cam_q = camera.to_camera(p + m);
    if (cam_p.z() <= 0.0 || cam_q.z() <= 0.0) continue;  // behind camera: masked
    const Eigen::Vector2d flow =
        camera.project_camera_space(cam_q) - camera.project_camera_space(cam_p);
    out.flow.set(i, flow.cast<float>());
    out.valid.values[i] = 1;
  }
  return out;
}

WeightMap cyclic_weight(const FlowField& fwd, const FlowField& bwd,
                        const FlowConsistencyParams& params) {
  require(fwd.height == bwd.height && fwd.width == bwd.width, ErrorCode::ShapeMismatch,
          "flow fields differ in shape");
  require(params.magnitude_coeff >= 0.0 && params.base > 0.0, ErrorCode::BadConfig,
          "consistency coefficients need a >= 0, b > 0");
  const int H = fwd.height, W = fwd.width;
  const std::size_t n = fwd.pixel_count();
  std::vector<float> weights(n, 0.0f);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = std::size_t(y) * W + x;
      const Eigen::Vector2d mu = fwd.at(i).cast<double>();
      const long tx = std::lround(x + mu.x());
      const long ty = std::lround(y + mu.y());
      if (tx < 0 || tx >= W || ty < 0 || ty >= H) continue;  // out of bounds: w = 0
      const Eigen::Vector2d back = bwd.at(std::size_t(ty) * W + tx).cast<double>();
      const double r = params.magnitude_coeff * mu.norm() + params.base;
      weights[i] = static_cast<float>(std::exp(-r * (mu + back).norm()));
    }
  }
  return make_weight_map(H, W, std::move(weights));
}

double flow_loss(const FlowField& pred, const FlowField& pseudo_fwd, const FlowField& pseudo_bwd,
                 const FlowConsistencyParams& params) {
  require(pred.height == pseudo_fwd.height && pred.width == pseudo_fwd.width,
          ErrorCode::ShapeMismatch, "predicted and pseudo flows differ in shape");
  const WeightMap weights = cyclic_weight(pseudo_fwd, pseudo_bwd, params);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.pixel_count(); ++i) {
    const Eigen::Vector2d residual = (pseudo_fwd.at(i) - pred.at(i)).cast<double>();
    sum += double(weights.values[i]) * residual.norm();
  }
  return sum;
}

}  // namespace g4d
