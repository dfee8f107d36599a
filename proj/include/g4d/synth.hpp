#pragma once

#include <filesystem>

#include "g4d/metrics.hpp"
#include "g4d/model.hpp"
#include "g4d/motion.hpp"
#include "g4d/render.hpp"

namespace g4d {

enum class MotionType { Rigid, ArticulatedSwing, Translation };

std::string_view motion_type_name(MotionType type);
MotionType parse_motion_type(std::string_view name);

struct SynthConfig {
  int parts = 3;
  MotionType motion = MotionType::ArticulatedSwing;
  int timestamps = 4;
  int views = 4;
  double scale = 1.0;  // meters per scene unit
  int resolution = 128;
  double motion_amplitude = 1.0;
  Eigen::Vector3d translation_velocity{0.08, 0.02, 0.0};  // units/frame (Translation)
  double camera_distance = 2.2;
  double camera_spacing_deg = 45.0;
  double focal_scale = 1.6;   // fx = focal_scale * resolution
  double splat_sigma_px = 0.6;
  double bake_opacity = 1.0;
};

// Deterministic articulated test scene: primitive-part meshes with stable
// vertex correspondences, static cameras (camera 0 is the identity reference),
// and exact per-vertex motion annotations. The subject is normalized to unit
// bounding-sphere diameter and placed on camera 0's optical axis; vertex
// coordinates are quantized to a 2^-16 grid so the motion identities
//   m1[t] = x[t-1] - x[t]   and   m2[t] = x[t+1] - x[t]
// hold exactly in float arithmetic. Fractional times interpolate vertices
// linearly between the bracketing integer frames (the constant-velocity
// ground-truth convention).
struct SynthScene {
  SynthConfig config;
  std::uint64_t seed = 0;
  std::vector<TriangleMesh> meshes;                 // per timestamp; shared faces
  std::vector<std::vector<float>> motion_backward;  // per t: 3V (empty at t = 0)
  std::vector<std::vector<float>> motion_forward;   // per t: 3V (empty at t = k-1)
  CameraSet cameras;                                // intrinsics at config.resolution
  Eigen::Vector3d quantized_velocity{0.0, 0.0, 0.0};

  std::vector<float> vertices_at(double t) const;
  TriangleMesh mesh_at(double t) const;
  Camera camera_for(int view, int out_width, int out_height) const;
  CameraSet cameras_for(int out_width, int out_height) const;
  CameraSet metric_cameras() const;  // GT counterparts: translations in meters
};

SynthScene generate_scene(const SynthConfig& config, std::uint64_t seed);

struct BakeSample {
  std::uint32_t triangle = 0xffffffffu;
  float b0 = 0.0f, b1 = 0.0f;  // barycentric; b2 = 1 - b0 - b1
};

struct BakeResult {
  GaussianFrame frame;
  std::vector<MotionField> motions;              // one per view
  std::vector<std::vector<BakeSample>> samples;  // per view: H*W entries
};

// Rasterizes the mesh at time t from every view: one surface-sampled Gaussian
// per covered pixel, colors from the procedural texture evaluated at the
// sample's material point (frame-0 position), scales proportional to the
// pixel footprint, and motion maps interpolated from the vertex annotations.
BakeResult bake_gaussians(const SynthScene& scene, double t, int resolution);

// Reference-rendered images of the baked frame; the bit-stable GT targets.
std::vector<Image> render_gt_views(const SynthScene& scene, double t,
                                   const RenderConfig& config);

struct GtFlow {
  FlowField flow;
  Mask visible;  // false where the moved sample fails the target-time depth test
};

// Projects the vertex motion through the view's camera at baked sample
// pixels; occlusion is decided against a depth render of the target-time mesh
// with a 1e-4 bias.
GtFlow gt_flow(const SynthScene& scene, int t, int view, MotionDirection direction,
               int resolution);

// Smooth deterministic 3-channel texture over material coordinates.
Eigen::Vector3f procedural_color(const Eigen::Vector3d& material_point);

// Scene manifest + per-timestamp meshes + cameras under a directory.
void save_scene(const SynthScene& scene, const std::filesystem::path& directory);
SynthScene load_scene(const std::filesystem::path& directory);

}  // namespace g4d
