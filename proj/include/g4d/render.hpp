#pragma once

#include <optional>

#include "g4d/model.hpp"

namespace g4d {

struct RenderConfig {
  int width = 0, height = 0;
  Eigen::Vector3f background{0.0f, 0.0f, 0.0f};
  float near_plane = 0.01f;
  float cutoff_sigma = 3.0f;  // Mahalanobis cutoff, in sigma units
  int tile_size = 16;
};

void validate_render_config(const RenderConfig& config);

// Screen-space footprint of one projected Gaussian. The 2D covariance is
// J W Sigma_world W^T J^T with the diagonal dilated by +0.3 px^2; the
// conservative radius is cutoff_sigma * sqrt(max eigenvalue).
struct Splat2D {
  float mean_x = 0.0f, mean_y = 0.0f;
  float cov_xx = 0.0f, cov_xy = 0.0f, cov_yy = 0.0f;
  float inv_xx = 0.0f, inv_xy = 0.0f, inv_yy = 0.0f;
  float depth = 0.0f;
  float r = 0.0f, g = 0.0f, b = 0.0f;
  float alpha = 0.0f;   // min(0.99, opacity)
  float radius = 0.0f;  // pixels
  SourceTag tag;
};

// Projects one Gaussian of the cloud; returns nullopt when culled (behind the
// near plane, or the cutoff ellipse misses the image). Throws
// SingularCovariance when the dilated 2D covariance is not invertible.
std::optional<Splat2D> project_gaussian(const GaussianCloud& cloud, std::size_t index,
                                        const Camera& camera, const RenderConfig& config);

// Tile-binned front-to-back alpha compositing over depth-sorted splats
// (ties broken by source tag). Pixels are sampled at integer coordinates.
Image render(const GaussianCloud& cloud, const Camera& camera, const RenderConfig& config);

// Correctness oracle: identical per-pixel math, but a plain loop over all
// depth-sorted splats for every pixel instead of tile binning.
Image render_reference(const GaussianCloud& cloud, const Camera& camera,
                       const RenderConfig& config);

}  // namespace g4d
