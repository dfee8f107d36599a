#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "g4d/fusion.hpp"
#include "g4d/metrics.hpp"
#include "g4d/model.hpp"

namespace g4d {

// All binary containers are little-endian with a 4-byte ASCII magic and a u32
// format version. Readers validate the magic (CorruptHeader), the version
// (VersionUnsupported) and the exact payload size (TruncatedPayload) before
// touching any data, and run the normal validating constructors afterwards.

// "G4DA": per-view planar float32 maps P,O,C,Q,S plus a bit-packed valid mask.
void write_gaussian_frame(const std::filesystem::path& path, const GaussianFrame& frame);
GaussianFrame read_gaussian_frame(const std::filesystem::path& path);

// "G4DR" kind 1: dual 3xHxW motion planes with view and timestamp.
void write_motion(const std::filesystem::path& path, const MotionField& motion);
MotionField read_motion(const std::filesystem::path& path);

// "G4DR" kind 2 / 3.
void write_flow(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flow(const std::filesystem::path& path);
void write_weight_map(const std::filesystem::path& path, const WeightMap& weights);
WeightMap read_weight_map(const std::filesystem::path& path);

// "G4DI": lossless float32 image raster (the PSNR-grade container).
void write_image_raster(const std::filesystem::path& path, const Image& image);
Image read_image_raster(const std::filesystem::path& path);

// 8-bit RGB PNG for viewing; round-trips within 1/255 per channel.
void write_image_png(const std::filesystem::path& path, const Image& image);
Image read_image_png(const std::filesystem::path& path);

// "G4DM": triangle mesh with optional per-vertex backward/forward motion.
struct MeshWithMotion {
  TriangleMesh mesh;
  std::vector<float> motion_backward;  // 3V or empty
  std::vector<float> motion_forward;   // 3V or empty
};
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh,
                std::span<const float> motion_backward = {},
                std::span<const float> motion_forward = {});
MeshWithMotion read_mesh(const std::filesystem::path& path);

// Binary little-endian PLY with properties x, y, z, opacity, red, green,
// blue (uchar), rot_w, rot_x, rot_y, rot_z, scale_x, scale_y, scale_z.
void export_ply(const std::filesystem::path& path, const GaussianCloud& cloud);

// Human-readable camera sets, one block per (timestamp, view):
//   g4d-cameras 1
//   timestamps <k>
//   views <n>
//   t <ti> view <vi>
//   q <w> <x> <y> <z>
//   T <x> <y> <z>
//   K <fx> <fy> <cx> <cy>
// Floats are written with shortest round-trip formatting and parsed
// locale-independently.
void write_cameras(const std::filesystem::path& path, std::span<const CameraSet> sets);
std::vector<CameraSet> read_cameras(const std::filesystem::path& path);

// "F4DW": fusion perceptron weights; the note documents the feature layout.
void write_fusion_weights(const std::filesystem::path& path, const MlpWeights& weights);
MlpWeights read_fusion_weights(const std::filesystem::path& path);

}  // namespace g4d
