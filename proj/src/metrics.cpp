#include "g4d/metrics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "g4d/gauge.hpp"
#include "g4d/parallel.hpp"

namespace g4d {

// ---------------------------------------------------------------------------
// Image metrics
// ---------------------------------------------------------------------------

namespace {

void check_same_shape(const Image& a, const Image& b) {
  require(a.height == b.height && a.width == b.width, ErrorCode::ShapeMismatch,
          "images differ in shape");
}

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// Mirror padding with the edge pixel repeated: -1 -> 0, -2 -> 1, n -> n-1.
inline int mirror(int i, int n) {
  if (i < 0) i = -i - 1;
  if (i >= n) i = 2 * n - 1 - i;
  return i;
}

std::array<double, kWindow> gaussian_kernel() {
  std::array<double, kWindow> k{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - (kWindow - 1) / 2.0;
    k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable Gaussian filter of a H x W double plane with mirror padding.
std::vector<double> filter_plane(const std::vector<double>& plane, int H, int W) {
  static const std::array<double, kWindow> kernel = gaussian_kernel();
  const int r = kWindow / 2;
  std::vector<double> tmp(plane.size()), out(plane.size());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) {
        acc += kernel[k] * plane[std::size_t(y) * W + mirror(x + k - r, W)];
      }
      tmp[std::size_t(y) * W + x] = acc;
    }
  }
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) {
        acc += kernel[k] * tmp[std::size_t(mirror(y + k - r, H)) * W + x];
      }
      out[std::size_t(y) * W + x] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_same_shape(a, b);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = double(a.values[i]) - double(b.values[i]);
    sum_sq += d * d;
  }
  const double mse = sum_sq / double(a.values.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  check_same_shape(a, b);
  require(a.height >= kWindow && a.width >= kWindow, ErrorCode::ImageTooSmall,
          "ssim needs images of at least 11 x 11");
  const int H = a.height, W = a.width;
  const std::size_t n = a.pixel_count();
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a.values[c * n + i];
      y[i] = b.values[c * n + i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mu_x = filter_plane(x, H, W);
    const auto mu_y = filter_plane(y, H, W);
    const auto s_xx = filter_plane(xx, H, W);
    const auto s_yy = filter_plane(yy, H, W);
    const auto s_xy = filter_plane(xy, H, W);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double var_x = s_xx[i] - mu_x[i] * mu_x[i];
      const double var_y = s_yy[i] - mu_y[i] * mu_y[i];
      const double cov = s_xy[i] - mu_x[i] * mu_y[i];
      const double num = (2.0 * mu_x[i] * mu_y[i] + kC1) * (2.0 * cov + kC2);
      const double den = (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1) * (var_x + var_y + kC2);
      acc += num / den;
    }
    total += acc / double(n);
  }
  return total / 3.0;
}

// ---------------------------------------------------------------------------
// Similarity alignment (closed-form least squares)
// ---------------------------------------------------------------------------

SimilarityTransform SimilarityTransform::inverse() const {
  SimilarityTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.conjugate();
  inv.translation = -(inv.rotation * translation) / scale;
  return inv;
}

SimilarityTransform similarity_align(std::span<const Eigen::Vector3d> src,
                                     std::span<const Eigen::Vector3d> dst) {
  require(src.size() == dst.size(), ErrorCode::LengthMismatch,
          "source and destination counts differ");
  require(src.size() >= 3, ErrorCode::DegenerateConfiguration,
          "need at least 3 correspondences");
  const double inv_n = 1.0 / double(src.size());

  Eigen::Vector3d mu_src = Eigen::Vector3d::Zero(), mu_dst = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_src += src[i];
    mu_dst += dst[i];
  }
  mu_src *= inv_n;
  mu_dst *= inv_n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Eigen::Vector3d ds = src[i] - mu_src;
    const Eigen::Vector3d dd = dst[i] - mu_dst;
    cov += dd * ds.transpose();
    var_src += ds.squaredNorm();
  }
  cov *= inv_n;
  var_src *= inv_n;
  require(var_src > 1e-18, ErrorCode::DegenerateConfiguration, "source points are coincident");

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d d = svd.singularValues();
  require(d[1] > 1e-12 * std::max(d[0], 1e-300), ErrorCode::DegenerateConfiguration,
          "correspondences are collinear; rotation is ambiguous");

  Eigen::Vector3d flip(1.0, 1.0, 1.0);
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) flip[2] = -1.0;
  const Eigen::Matrix3d R =
      svd.matrixU() * flip.asDiagonal() * svd.matrixV().transpose();

  SimilarityTransform t;
  t.scale = d.dot(flip) / var_src;
  require(t.scale > 0.0, ErrorCode::DegenerateConfiguration, "recovered scale is non-positive");
  t.rotation = Eigen::Quaterniond(R).normalized();
  t.translation = mu_dst - t.scale * (R * mu_src);
  return t;
}

// ---------------------------------------------------------------------------
// Triangle meshes and nearest-surface queries
// ---------------------------------------------------------------------------

TriangleMesh make_triangle_mesh(std::vector<float> vertices, std::vector<std::uint32_t> faces) {
  require(vertices.size() % 3 == 0 && faces.size() % 3 == 0, ErrorCode::ShapeMismatch,
          "mesh arrays must hold whole triples");
  require(all_finite(vertices), ErrorCode::NonFiniteValue, "mesh vertices must be finite");
  const std::size_t V = vertices.size() / 3;
  for (std::uint32_t idx : faces) {
    require(idx < V, ErrorCode::ShapeMismatch, "face index out of range");
  }
  TriangleMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.faces = std::move(faces);
  return mesh;
}

// Ericson, Real-Time Collision Detection, 5.1.5.
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

namespace {

Eigen::Vector3d barycentric_of(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                               const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const Eigen::Vector3d v0 = b - a, v1 = c - a, v2 = p - a;
  const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
  const double d20 = v2.dot(v0), d21 = v2.dot(v1);
  const double denom = d00 * d11 - d01 * d01;
  if (std::abs(denom) < 1e-300) return {1.0, 0.0, 0.0};
  const double v = (d11 * d20 - d01 * d21) / denom;
  const double w = (d00 * d21 - d01 * d20) / denom;
  return {std::clamp(1.0 - v - w, 0.0, 1.0), std::clamp(v, 0.0, 1.0), std::clamp(w, 0.0, 1.0)};
}

struct Aabb {
  Eigen::Vector3d lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
                     std::numeric_limits<double>::max()};
  Eigen::Vector3d hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
                     std::numeric_limits<double>::lowest()};

  void grow(const Eigen::Vector3d& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void grow(const Aabb& box) {
    lo = lo.cwiseMin(box.lo);
    hi = hi.cwiseMax(box.hi);
  }
  double distance_sq(const Eigen::Vector3d& p) const {
    double d = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double v = std::max({lo[c] - p[c], 0.0, p[c] - hi[c]});
      d += v * v;
    }
    return d;
  }
};

struct BvhNode {
  Aabb box;
  std::int32_t left = -1, right = -1;  // children, or -1 for leaves
  std::uint32_t first = 0, count = 0;  // triangle range for leaves
};

constexpr std::uint32_t kLeafSize = 4;

}  // namespace

struct MeshDistanceQuery::Impl {
  const TriangleMesh* mesh = nullptr;
  std::vector<Eigen::Vector3d> va, vb, vc;  // per-triangle corners
  std::vector<std::uint32_t> order;         // triangle permutation
  std::vector<BvhNode> nodes;

  std::int32_t build(std::uint32_t first, std::uint32_t count,
                     std::vector<Eigen::Vector3d>& centroids) {
    BvhNode node;
    node.first = first;
    node.count = count;
    for (std::uint32_t i = first; i < first + count; ++i) {
      const std::uint32_t t = order[i];
      node.box.grow(va[t]);
      node.box.grow(vb[t]);
      node.box.grow(vc[t]);
    }
    const std::int32_t index = static_cast<std::int32_t>(nodes.size());
    nodes.push_back(node);
    if (count <= kLeafSize) return index;

    Aabb cbox;
    for (std::uint32_t i = first; i < first + count; ++i) cbox.grow(centroids[order[i]]);
    int axis = 0;
    const Eigen::Vector3d extent = cbox.hi - cbox.lo;
    if (extent[1] > extent[axis]) axis = 1;
    if (extent[2] > extent[axis]) axis = 2;
    if (extent[axis] <= 0.0) return index;  // all centroids coincide; keep as leaf

    const std::uint32_t mid = first + count / 2;
    std::nth_element(order.begin() + first, order.begin() + mid, order.begin() + first + count,
                     [&](std::uint32_t x, std::uint32_t y) {
                       return centroids[x][axis] < centroids[y][axis];
                     });
    const std::int32_t left = build(first, mid - first, centroids);
    const std::int32_t right = build(mid, first + count - mid, centroids);
    nodes[index].left = left;
    nodes[index].right = right;
    nodes[index].count = 0;
    return index;
  }
};

MeshDistanceQuery::MeshDistanceQuery(const TriangleMesh& mesh) : impl_(new Impl) {
  require(mesh.face_count() > 0, ErrorCode::EmptyInput, "mesh has no triangles");
  impl_->mesh = &mesh;
  const std::size_t F = mesh.face_count();
  impl_->va.resize(F);
  impl_->vb.resize(F);
  impl_->vc.resize(F);
  std::vector<Eigen::Vector3d> centroids(F);
  for (std::size_t f = 0; f < F; ++f) {
    impl_->va[f] = mesh.vertex(mesh.faces[3 * f]);
    impl_->vb[f] = mesh.vertex(mesh.faces[3 * f + 1]);
    impl_->vc[f] = mesh.vertex(mesh.faces[3 * f + 2]);
    centroids[f] = (impl_->va[f] + impl_->vb[f] + impl_->vc[f]) / 3.0;
  }
  impl_->order.resize(F);
  std::iota(impl_->order.begin(), impl_->order.end(), 0u);
  impl_->nodes.reserve(2 * F);
  impl_->build(0, static_cast<std::uint32_t>(F), centroids);
}

MeshDistanceQuery::~MeshDistanceQuery() = default;
MeshDistanceQuery::MeshDistanceQuery(MeshDistanceQuery&&) noexcept = default;
MeshDistanceQuery& MeshDistanceQuery::operator=(MeshDistanceQuery&&) noexcept = default;

const TriangleMesh& MeshDistanceQuery::mesh() const { return *impl_->mesh; }

SurfaceHit MeshDistanceQuery::nearest(const Eigen::Vector3d& query) const {
  const Impl& im = *impl_;
  double best_sq = std::numeric_limits<double>::max();
  Eigen::Vector3d best_point = Eigen::Vector3d::Zero();
  std::uint32_t best_tri = 0;

  std::int32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const BvhNode& node = im.nodes[stack[--top]];
    if (node.box.distance_sq(query) >= best_sq) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const std::uint32_t t = im.order[i];
        const Eigen::Vector3d p =
            closest_point_on_triangle(query, im.va[t], im.vb[t], im.vc[t]);
        const double d = (p - query).squaredNorm();
        if (d < best_sq) {
          best_sq = d;
          best_point = p;
          best_tri = t;
        }
      }
    } else {
      // Visit the nearer child first for tighter pruning.
      const double dl = im.nodes[node.left].box.distance_sq(query);
      const double dr = im.nodes[node.right].box.distance_sq(query);
      if (dl < dr) {
        stack[top++] = node.right;
        stack[top++] = node.left;
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
  }

  SurfaceHit hit;
  hit.distance = std::sqrt(best_sq);
  hit.point = best_point;
  hit.triangle = best_tri;
  hit.barycentric =
      barycentric_of(best_point, im.va[best_tri], im.vb[best_tri], im.vc[best_tri]);
  return hit;
}

std::vector<SurfaceHit> nearest_correspondence(std::span<const Eigen::Vector3d> queries,
                                               const MeshDistanceQuery& mesh) {
  require(!queries.empty(), ErrorCode::EmptyInput, "no query points");
  std::vector<SurfaceHit> hits(queries.size());
  parallel_for(std::int64_t(queries.size()), [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) hits[i] = mesh.nearest(queries[i]);
  });
  return hits;
}

std::vector<PointHit> nearest_correspondence(std::span<const Eigen::Vector3d> queries,
                                             std::span<const Eigen::Vector3d> reference) {
  require(!queries.empty() && !reference.empty(), ErrorCode::EmptyInput,
          "no query or reference points");
  std::vector<PointHit> hits(queries.size());
  parallel_for(std::int64_t(queries.size()), [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::max();
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < reference.size(); ++j) {
        const double d = (reference[j] - queries[i]).squaredNorm();
        if (d < best) {
          best = d;
          best_j = j;
        }
      }
      hits[i] = {std::sqrt(best), best_j};
    }
  });
  return hits;
}

Eigen::Vector3d interpolate_vertex_attribute(const TriangleMesh& mesh,
                                             std::span<const float> per_vertex,
                                             const SurfaceHit& hit) {
  require(per_vertex.size() == mesh.vertices.size(), ErrorCode::ShapeMismatch,
          "per-vertex attribute size must match vertex count");
  Eigen::Vector3d out = Eigen::Vector3d::Zero();
  for (int corner = 0; corner < 3; ++corner) {
    const std::uint32_t v = mesh.faces[3 * hit.triangle + corner];
    const Eigen::Vector3d a(per_vertex[3 * v], per_vertex[3 * v + 1], per_vertex[3 * v + 2]);
    out += hit.barycentric[corner] * a;
  }
  return out;
}

double motion_error(std::span<const Eigen::Vector3d> pred_motion, const TriangleMesh& mesh,
                    std::span<const float> gt_motion_per_vertex,
                    std::span<const SurfaceHit> correspondence,
                    const SimilarityTransform& alignment) {
  require(!correspondence.empty(), ErrorCode::EmptyCorrespondence, "no matched points");
  require(pred_motion.size() == correspondence.size(), ErrorCode::LengthMismatch,
          "motion count must match correspondence count");
  double sum = 0.0;
  for (std::size_t i = 0; i < correspondence.size(); ++i) {
    const Eigen::Vector3d gt =
        interpolate_vertex_attribute(mesh, gt_motion_per_vertex, correspondence[i]);
    sum += (alignment.apply_vector(pred_motion[i]) - gt).norm();
  }
  return sum / double(correspondence.size());
}

double retargeted_point_distance(std::span<const Eigen::Vector3d> points,
                                 std::span<const Eigen::Vector3d> motion,
                                 const MeshDistanceQuery& target_mesh) {
  require(!points.empty(), ErrorCode::EmptyInput, "no points");
  require(points.size() == motion.size(), ErrorCode::LengthMismatch,
          "points and motions differ in count");
  std::vector<double> dist(points.size());
  parallel_for(std::int64_t(points.size()), [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      dist[i] = target_mesh.nearest(points[i] + motion[i]).distance;
    }
  });
  return std::accumulate(dist.begin(), dist.end(), 0.0) / double(points.size());
}

double metric_scale_error(std::span<const Eigen::Vector3d> points, double predicted_gauge,
                          const MeshDistanceQuery& metric_mesh) {
  require(!points.empty(), ErrorCode::EmptyInput, "no points");
  std::vector<Eigen::Vector3d> metric(points.begin(), points.end());
  to_metric_points(std::span<Eigen::Vector3d>(metric), predicted_gauge);
  std::vector<double> dist(metric.size());
  parallel_for(std::int64_t(metric.size()), [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i) {
      dist[i] = metric_mesh.nearest(metric[i]).distance;
    }
  });
  return std::accumulate(dist.begin(), dist.end(), 0.0) / double(metric.size());
}

}  // namespace g4d
