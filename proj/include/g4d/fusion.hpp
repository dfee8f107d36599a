#pragma once

#include <span>
#include <string>
#include <vector>

#include "g4d/model.hpp"
#include "g4d/motion.hpp"

namespace g4d {

// Per-view dual consistency distances: for each valid pixel p of the source
// frame, the distance between its motion-deformed position and the Gaussian
// retrieved at round(p + flow(p)) in the counterpart frame. Out-of-bounds or
// invalid retrievals are +infinity (occluded). `target` keeps the retrieved
// pixel index (-1 when unavailable) so matched pairs stay addressable.
struct ConsistencyMap {
  int view = 0;
  int height = 0, width = 0;
  std::vector<float> distance;      // H * W, +inf where occluded or source-invalid
  std::vector<std::int32_t> target; // H * W, counterpart pixel index or -1
  double tau = 0.05;
};

ConsistencyMap dual_consistency(const GaussianFrame& frame_a, const GaussianFrame& frame_b,
                                const MotionField& motion_a, MotionDirection direction,
                                const FlowField& flow_a_to_b);

// Convenience: derives the retrieval flow by projecting the motion through
// the view's camera.
ConsistencyMap dual_consistency(const GaussianFrame& frame_a, const GaussianFrame& frame_b,
                                const MotionField& motion_a, MotionDirection direction,
                                const Camera& camera);

struct OcclusionSplit {
  GaussianCloud occluded;
  GaussianCloud matched;
  std::vector<std::int32_t> pair_target;  // per matched Gaussian: counterpart pixel index
};

// Splits the Gaussians of the map's view by the threshold: D > tau stays
// occluded, D <= tau goes to the matched set with its retrieval target.
OcclusionSplit split_by_occlusion(const GaussianCloud& cloud, const ConsistencyMap& map,
                                  double tau);
OcclusionSplit split_by_occlusion(const GaussianFrame& frame, const ConsistencyMap& map,
                                  double tau);

// Fusion MLP weights (two layers, elementwise ReLU between them). Input is the
// concatenated pair feature vector, output one fused attribute set; see
// fusion.cpp for the exact layout.
struct MlpWeights {
  std::uint32_t input = 0, hidden = 0, output = 0;
  std::vector<float> w1, b1;  // hidden x input, hidden
  std::vector<float> w2, b2;  // output x hidden, output
  std::string note;
};

constexpr std::uint32_t kFusionFeatureSize = 29;  // 2 x (dP,O,C,Q,S) + distance
constexpr std::uint32_t kFusionOutputSize = 14;   // dP,O,C,Q,S

class FusionFunction {
public:
  static FusionFunction average();
  static FusionFunction perceptron(MlpWeights weights);  // throws WeightFileMismatch

  bool is_average() const { return average_; }
  const MlpWeights& weights() const { return weights_; }

private:
  FusionFunction() = default;
  bool average_ = true;
  MlpWeights weights_;
};

// Fuses aligned pairs into one Gaussian each. The average variant takes the
// arithmetic mean of positions, opacities, colors and scales and the
// normalized sign-aligned quaternion mean; the perceptron consumes the pair
// features plus the consistency distance. Outputs are clamped/renormalized so
// they always pass cloud validation.
GaussianCloud fuse(const GaussianCloud& a, const GaussianCloud& b,
                   std::span<const float> pair_distance, const FusionFunction& fn);

struct Interpolation {
  GaussianCloud cloud;
  std::size_t occluded_from_current = 0;
  std::size_t occluded_from_previous = 0;
  std::size_t fused_pairs = 0;
};

// Full novel-time pipeline: warps both frames to t', evaluates dual
// consistency in both directions, splits by tau, fuses matched pairs and
// concatenates them with the occluded Gaussians of both frames.
Interpolation interpolate_time(const GaussianFrame& frame_t, const GaussianFrame& frame_tm1,
                               std::span<const MotionField> motions_t,
                               std::span<const MotionField> motions_tm1, double t_prime,
                               double tau, const FusionFunction& fn, const CameraSet& cameras);

// Photometric supervision at the novel time: sum over views of
// L2 + lambda_ssim (1 - SSIM) + lambda_lpips LPIPS.
PhotometricLoss fusion_loss(std::span<const Image> rendered, std::span<const Image> gt,
                            const LossWeights& weights, const PerceptualScorer& scorer = nullptr);

}  // namespace g4d
