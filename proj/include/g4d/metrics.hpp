#pragma once

#include <memory>
#include <span>
#include <vector>

#include "g4d/model.hpp"

namespace g4d {

// Peak = 1.0 (images are normalized); identical images return the +infinity
// sentinel rather than an error.
double psnr(const Image& a, const Image& b);

// Mean local SSIM: 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
// C2 = 0.03^2, mirror padding at the borders, channel-averaged.
double ssim(const Image& a, const Image& b);

struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d translation{0.0, 0.0, 0.0};

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return scale * (rotation * p) + translation;
  }
  Eigen::Vector3d apply_vector(const Eigen::Vector3d& v) const { return scale * (rotation * v); }
  SimilarityTransform inverse() const;
};

// Least-squares similarity (closed form over the cross-covariance SVD)
// minimizing sum |s R x + t - y|^2. Needs >= 3 non-collinear correspondences.
SimilarityTransform similarity_align(std::span<const Eigen::Vector3d> src,
                                     std::span<const Eigen::Vector3d> dst);

struct TriangleMesh {
  std::vector<float> vertices;      // 3V interleaved xyz; index = correspondence ID
  std::vector<std::uint32_t> faces; // 3F vertex indices

  std::size_t vertex_count() const { return vertices.size() / 3; }
  std::size_t face_count() const { return faces.size() / 3; }
  Eigen::Vector3d vertex(std::size_t i) const {
    return {vertices[3 * i], vertices[3 * i + 1], vertices[3 * i + 2]};
  }
};

TriangleMesh make_triangle_mesh(std::vector<float> vertices, std::vector<std::uint32_t> faces);

// Exact closest point on a triangle (vertex / edge / face cases).
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c);

struct SurfaceHit {
  double distance = 0.0;
  Eigen::Vector3d point{0.0, 0.0, 0.0};
  std::uint32_t triangle = 0;
  Eigen::Vector3d barycentric{0.0, 0.0, 0.0};
};

// AABB-tree accelerated nearest-surface queries; the brute-force all-triangle
// scan lives in the tests as its oracle.
class MeshDistanceQuery {
public:
  explicit MeshDistanceQuery(const TriangleMesh& mesh);
  ~MeshDistanceQuery();
  MeshDistanceQuery(MeshDistanceQuery&&) noexcept;
  MeshDistanceQuery& operator=(MeshDistanceQuery&&) noexcept;

  SurfaceHit nearest(const Eigen::Vector3d& query) const;
  const TriangleMesh& mesh() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::vector<SurfaceHit> nearest_correspondence(std::span<const Eigen::Vector3d> queries,
                                               const MeshDistanceQuery& mesh);

struct PointHit {
  double distance = 0.0;
  std::size_t index = 0;
};
std::vector<PointHit> nearest_correspondence(std::span<const Eigen::Vector3d> queries,
                                             std::span<const Eigen::Vector3d> reference);

// Interpolates a per-vertex attribute (3 floats per vertex) at a surface hit.
Eigen::Vector3d interpolate_vertex_attribute(const TriangleMesh& mesh,
                                             std::span<const float> per_vertex,
                                             const SurfaceHit& hit);

// Mean L2 distance between predicted motions mapped through the alignment
// (m -> s R m) and the GT motion interpolated at each matched surface point.
double motion_error(std::span<const Eigen::Vector3d> pred_motion, const TriangleMesh& mesh,
                    std::span<const float> gt_motion_per_vertex,
                    std::span<const SurfaceHit> correspondence,
                    const SimilarityTransform& alignment);

// Mean nearest-surface distance of (P + M) against the target-time mesh;
// inputs are expected in the aligned frame.
double retargeted_point_distance(std::span<const Eigen::Vector3d> points,
                                 std::span<const Eigen::Vector3d> motion,
                                 const MeshDistanceQuery& target_mesh);

// Divides the points by the predicted gauge and reports the mean
// nearest-surface distance to the metric mesh, with no further alignment.
double metric_scale_error(std::span<const Eigen::Vector3d> points, double predicted_gauge,
                          const MeshDistanceQuery& metric_mesh);

}  // namespace g4d
