#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cstdint>
#include <span>
#include <vector>

#include "g4d/errors.hpp"

namespace g4d {

// ---------------------------------------------------------------------------
// Camera: world-to-camera pose (x_cam = R(q) * x_world + T) plus pinhole
// intrinsics. The first camera of a set is the coordinate reference and is
// the only one allowed a zero translation.
// ---------------------------------------------------------------------------
struct Camera {
  Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};  // unit, (w, x, y, z)
  Eigen::Vector3d translation{0.0, 0.0, 0.0};
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;

  Camera() = default;
  Camera(const Eigen::Quaterniond& q, const Eigen::Vector3d& t,
         double fx_, double fy_, double cx_, double cy_);

  Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }
  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation * world + translation;
  }
  // Pinhole projection of a camera-space point (caller checks z > 0).
  Eigen::Vector2d project_camera_space(const Eigen::Vector3d& cam) const {
    return {fx * cam.x() / cam.z() + cx, fy * cam.y() / cam.z() + cy};
  }
};

using CameraSet = std::vector<Camera>;

// ---------------------------------------------------------------------------
// Per-view pixel-aligned Gaussian attribute maps. All maps are plane-major
// float32: position/color/scale hold 3 planes of H*W, rotation 4 planes
// (w, x, y, z). valid marks foreground pixels that carry a Gaussian.
// ---------------------------------------------------------------------------
struct ViewMaps {
  int height = 0, width = 0;
  std::vector<float> position;  // 3 * H * W
  std::vector<float> opacity;   // H * W
  std::vector<float> color;     // 3 * H * W
  std::vector<float> rotation;  // 4 * H * W
  std::vector<float> scale;     // 3 * H * W
  std::vector<std::uint8_t> valid;  // H * W, 0/1

  std::size_t pixel_count() const { return std::size_t(height) * std::size_t(width); }

  Eigen::Vector3f position_at(std::size_t pixel) const {
    const std::size_t n = pixel_count();
    return {position[pixel], position[n + pixel], position[2 * n + pixel]};
  }
  void set_position(std::size_t pixel, const Eigen::Vector3f& p) {
    const std::size_t n = pixel_count();
    position[pixel] = p.x();
    position[n + pixel] = p.y();
    position[2 * n + pixel] = p.z();
  }
};

// Allocates zeroed maps of the given size (valid all false).
ViewMaps make_view_maps(int height, int width);

struct GaussianFrame {
  std::vector<ViewMaps> views;
  int timestamp = 0;

  int height() const { return views.empty() ? 0 : views.front().height; }
  int width() const { return views.empty() ? 0 : views.front().width; }
};

// Validating constructor: checks shape consistency across maps and views,
// rejects non-finite values, enforces opacity in [0,1] and strictly positive
// scales, and renormalizes every quaternion (unit within 1e-6 afterwards).
GaussianFrame make_gaussian_frame(std::vector<ViewMaps> views, int timestamp);

// ---------------------------------------------------------------------------
// Flattened, render-ready form of a frame. Attributes are interleaved per
// Gaussian: position xyz, color rgb, rotation wxyz, scale xyz.
// ---------------------------------------------------------------------------
struct SourceTag {
  std::int32_t view = 0;
  std::int32_t pixel = 0;
  std::int32_t timestamp = 0;

  friend bool operator==(const SourceTag&, const SourceTag&) = default;
  friend auto operator<=>(const SourceTag&, const SourceTag&) = default;
};

struct GaussianCloud {
  std::vector<float> position;  // 3N
  std::vector<float> opacity;   // N
  std::vector<float> color;     // 3N
  std::vector<float> rotation;  // 4N, (w, x, y, z)
  std::vector<float> scale;     // 3N
  std::vector<SourceTag> source;

  std::size_t size() const { return opacity.size(); }

  Eigen::Vector3f position_at(std::size_t i) const {
    return {position[3 * i], position[3 * i + 1], position[3 * i + 2]};
  }
  void reserve(std::size_t n);
  void append(const GaussianCloud& other, std::size_t index);
  void append_all(const GaussianCloud& other);

  // Same per-element invariants as the frame maps; called by the factories
  // and by operations that synthesize new attribute values.
  void validate() const;
};

GaussianCloud flatten(const GaussianFrame& frame);

// Inverse of flatten for clouds whose source tags address a single timestamp:
// scatters Gaussians back into per-view maps, leaving untouched pixels zeroed
// and invalid.
GaussianFrame group_by_source(const GaussianCloud& cloud, int n_views, int height, int width,
                              int timestamp);

// ---------------------------------------------------------------------------
// Dense per-pixel rasters.
// ---------------------------------------------------------------------------
struct MotionField {
  int view = 0;
  int timestamp = 0;
  int height = 0, width = 0;
  std::vector<float> backward;  // 3 * H * W, displacement toward t-1
  std::vector<float> forward;   // 3 * H * W, displacement toward t+1

  std::size_t pixel_count() const { return std::size_t(height) * std::size_t(width); }
  Eigen::Vector3f backward_at(std::size_t pixel) const {
    const std::size_t n = pixel_count();
    return {backward[pixel], backward[n + pixel], backward[2 * n + pixel]};
  }
  Eigen::Vector3f forward_at(std::size_t pixel) const {
    const std::size_t n = pixel_count();
    return {forward[pixel], forward[n + pixel], forward[2 * n + pixel]};
  }
};

MotionField make_motion_field(int view, int timestamp, int height, int width,
                              std::vector<float> backward, std::vector<float> forward);

struct FlowField {
  int height = 0, width = 0;
  std::vector<float> values;  // 2 planes: u (x displacement), v (y displacement)

  std::size_t pixel_count() const { return std::size_t(height) * std::size_t(width); }
  Eigen::Vector2f at(std::size_t pixel) const {
    return {values[pixel], values[pixel_count() + pixel]};
  }
  void set(std::size_t pixel, const Eigen::Vector2f& uv) {
    values[pixel] = uv.x();
    values[pixel_count() + pixel] = uv.y();
  }
};

FlowField make_flow_field(int height, int width, std::vector<float> values);
FlowField zero_flow(int height, int width);

struct WeightMap {
  int height = 0, width = 0;
  std::vector<float> values;  // H * W, in [0, 1]
};

WeightMap make_weight_map(int height, int width, std::vector<float> values);

struct Image {
  int height = 0, width = 0;
  std::vector<float> values;  // 3 planes of H * W, in [0, 1]

  std::size_t pixel_count() const { return std::size_t(height) * std::size_t(width); }
  Eigen::Vector3f at(std::size_t pixel) const {
    const std::size_t n = pixel_count();
    return {values[pixel], values[n + pixel], values[2 * n + pixel]};
  }
};

Image make_image(int height, int width, std::vector<float> values);
Image constant_image(int height, int width, const Eigen::Vector3f& rgb);

// Plain boolean raster used for flow validity and co-visibility masks.
struct Mask {
  int height = 0, width = 0;
  std::vector<std::uint8_t> values;
};

// Shared helpers ------------------------------------------------------------

// Renormalizes a (w,x,y,z) quaternion in place; throws NonFiniteValue when the
// norm is too small to normalize.
void normalize_quaternion(float* q);

bool all_finite(std::span<const float> values);

}  // namespace g4d
