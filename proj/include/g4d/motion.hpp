#pragma once

#include <functional>
#include <span>

#include "g4d/model.hpp"
#include "g4d/render.hpp"

namespace g4d {

struct LossWeights {
  double lambda_ssim = 0.25;
  double lambda_lpips = 0.25;
};

// Per-pixel occlusion weighting coefficients: r = magnitude_coeff * |flow| + base.
struct FlowConsistencyParams {
  double magnitude_coeff = 0.1;
  double base = 0.5;
};

enum class MotionDirection { Backward, Forward };

// Optional external perceptual scorer; when absent the perceptual term is 0
// and the engine stays network-free.
using PerceptualScorer = std::function<double(const Image&, const Image&)>;
using Renderer = std::function<Image(const GaussianCloud&, const Camera&, const RenderConfig&)>;

struct PhotometricBreakdown {
  double l2 = 0.0;     // mean over pixels and channels of the squared difference
  double ssim = 0.0;   // 1 - SSIM
  double lpips = 0.0;  // external scorer output, 0 when none is plugged in
};

struct PhotometricLoss {
  std::vector<PhotometricBreakdown> per_view;
  double l2 = 0.0, ssim = 0.0, lpips = 0.0;
  double total = 0.0;
};

PhotometricBreakdown photometric_terms(const Image& a, const Image& b,
                                       const PerceptualScorer& scorer = nullptr);

// Deforms positions by the chosen motion direction while retaining the other
// attributes; the timestamp shifts by -1 (backward) or +1 (forward). Expects
// one motion field per view, in view order.
GaussianFrame retarget(const GaussianFrame& frame, std::span<const MotionField> motions,
                       MotionDirection direction);

struct WarpedClouds {
  GaussianCloud from_current;   // frame t deformed by |t' - t| * backward motion
  GaussianCloud from_previous;  // frame t-1 deformed by |t' - (t-1)| * forward motion
};

// Constant-velocity warp of both bracketing frames to t' in [t-1, t].
WarpedClouds warp_to_time(const GaussianFrame& frame_t, const GaussianFrame& frame_tm1,
                          std::span<const MotionField> motions_t,
                          std::span<const MotionField> motions_tm1, double t_prime);

// Renders the motion-retargeted frame t and frame t-1 with each view's camera
// and accumulates the photometric terms over views.
PhotometricLoss retargeting_loss(const GaussianFrame& frame_t, const GaussianFrame& frame_tm1,
                                 std::span<const MotionField> motions_t, const CameraSet& cameras,
                                 const LossWeights& weights, const RenderConfig& config,
                                 const Renderer& renderer = nullptr,
                                 const PerceptualScorer& scorer = nullptr);

// Variant comparing against captured images instead of the rendered t-1 frame.
PhotometricLoss retargeting_loss(const GaussianFrame& frame_t,
                                 std::span<const Image> captured_targets,
                                 std::span<const MotionField> motions_t, const CameraSet& cameras,
                                 const LossWeights& weights, const RenderConfig& config,
                                 const Renderer& renderer = nullptr,
                                 const PerceptualScorer& scorer = nullptr);

struct ProjectedFlow {
  FlowField flow;
  Mask valid;  // false where the original or displaced point is behind the camera
};

// 2D scene flow of one view's motion: pi(P + M) - pi(P) through the pinhole.
ProjectedFlow project_scene_flow(const GaussianFrame& frame, const MotionField& motion,
                                 const Camera& camera, MotionDirection direction);

// Forward-backward consistency weight per source pixel:
//   w = exp(-r * |mu_fwd(p) + mu_bwd[round(p + mu_fwd(p))]|),  r = a |mu_fwd(p)| + b.
// Out-of-bounds lookups yield w = 0.
WeightMap cyclic_weight(const FlowField& fwd, const FlowField& bwd,
                        const FlowConsistencyParams& params);

// Occlusion-weighted flow supervision: sum over pixels of
// w(p) * |mu_pseudo_fwd(p) - mu_pred(p)| with w from the pseudo flow pair.
double flow_loss(const FlowField& pred, const FlowField& pseudo_fwd, const FlowField& pseudo_bwd,
                 const FlowConsistencyParams& params);

}  // namespace g4d
