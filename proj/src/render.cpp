#include "g4d/render.hpp"

#include <algorithm>
#include <cmath>

#include "g4d/parallel.hpp"

namespace g4d {

namespace {

constexpr float kDiagonalDilation = 0.3f;  // px^2 low-pass, keeps splats >= ~1 px
constexpr float kAlphaCap = 0.99f;
constexpr float kAlphaFloor = 1.0f / 255.0f;
constexpr float kBinningPad = 1.0f;  // px, swallows float slop at the cutoff boundary

struct SortedSplats {
  std::vector<Splat2D> splats;  // visible only, sorted front to back
  float cutoff_sq = 0.0f;
};

SortedSplats project_and_sort(const GaussianCloud& cloud, const Camera& camera,
                              const RenderConfig& config) {
  SortedSplats out;
  out.cutoff_sq = config.cutoff_sigma * config.cutoff_sigma;
  out.splats.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (auto splat = project_gaussian(cloud, i, camera, config)) {
      out.splats.push_back(*splat);
    }
  }
  std::sort(out.splats.begin(), out.splats.end(), [](const Splat2D& a, const Splat2D& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.tag < b.tag;
  });
  return out;
}

// One splat's contribution at a pixel sample; shared verbatim by the tiled
// and reference paths so they can only differ in which splats they visit.
inline void composite_splat(const Splat2D& s, float px, float py, float cutoff_sq,
                            float& transmittance, float& r, float& g, float& b) {
  const float dx = px - s.mean_x;
  const float dy = py - s.mean_y;
  const float maha = s.inv_xx * dx * dx + 2.0f * s.inv_xy * dx * dy + s.inv_yy * dy * dy;
  if (!(maha <= cutoff_sq)) return;
  const float alpha = std::min(kAlphaCap, s.alpha * std::exp(-0.5f * maha));
  if (alpha < kAlphaFloor) return;
  const float weight = alpha * transmittance;
  r += weight * s.r;
  g += weight * s.g;
  b += weight * s.b;
  transmittance *= 1.0f - alpha;
}

inline float clamp01(float v) { return std::min(1.0f, std::max(0.0f, v)); }

}  // namespace

void validate_render_config(const RenderConfig& config) {
  require(config.width >= 1 && config.height >= 1, ErrorCode::ShapeMismatch,
          "render target needs H, W >= 1");
  require(config.cutoff_sigma > 0.0f, ErrorCode::BadConfig, "cutoff must be positive");
  require(config.tile_size >= 1, ErrorCode::BadConfig, "tile size must be positive");
  for (int c = 0; c < 3; ++c) {
    require(config.background[c] >= 0.0f && config.background[c] <= 1.0f,
            ErrorCode::OpacityOutOfRange, "background color must lie in [0, 1]");
  }
}

std::optional<Splat2D> project_gaussian(const GaussianCloud& cloud, std::size_t index,
                                        const Camera& camera, const RenderConfig& config) {
  const Eigen::Vector3d world = cloud.position_at(index).cast<double>();
  const Eigen::Vector3d cam = camera.to_camera(world);
  if (cam.z() <= config.near_plane) return std::nullopt;

  const double z = cam.z();
  const double u = camera.fx * cam.x() / z + camera.cx;
  const double v = camera.fy * cam.y() / z + camera.cy;

  // Sigma_world = R(q) diag(s^2) R(q)^T
  const float* q = &cloud.rotation[4 * index];
  const Eigen::Quaterniond rot(q[0], q[1], q[2], q[3]);
  const Eigen::Matrix3d R = rot.toRotationMatrix();
  const Eigen::Vector3d s = Eigen::Vector3f(cloud.scale[3 * index], cloud.scale[3 * index + 1],
                                            cloud.scale[3 * index + 2])
                                .cast<double>();
  const Eigen::Matrix3d sigma_world = R * s.cwiseProduct(s).asDiagonal() * R.transpose();

  // Perspective Jacobian at the camera-space mean, then Sigma' = J W S W^T J^T.
  Eigen::Matrix<double, 2, 3> J;
  J << camera.fx / z, 0.0, -camera.fx * cam.x() / (z * z),
       0.0, camera.fy / z, -camera.fy * cam.y() / (z * z);
  const Eigen::Matrix<double, 2, 3> T = J * camera.rotation_matrix();
  Eigen::Matrix2d cov = T * sigma_world * T.transpose();
  cov(0, 0) += kDiagonalDilation;
  cov(1, 1) += kDiagonalDilation;

  const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(0, 1);
  require(det > 1e-12, ErrorCode::SingularCovariance,
          "2D covariance not invertible after dilation");

  const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
  const double lambda_max =
      mid + std::sqrt(std::max(0.0, mid * mid - det));
  const double radius = config.cutoff_sigma * std::sqrt(lambda_max);

  // Pixel samples live at integer coordinates 0..W-1 x 0..H-1.
  if (u + radius < 0.0 || u - radius > config.width - 1 || v + radius < 0.0 ||
      v - radius > config.height - 1) {
    return std::nullopt;
  }

  Splat2D splat;
  splat.mean_x = static_cast<float>(u);
  splat.mean_y = static_cast<float>(v);
  splat.cov_xx = static_cast<float>(cov(0, 0));
  splat.cov_xy = static_cast<float>(cov(0, 1));
  splat.cov_yy = static_cast<float>(cov(1, 1));
  splat.inv_xx = static_cast<float>(cov(1, 1) / det);
  splat.inv_xy = static_cast<float>(-cov(0, 1) / det);
  splat.inv_yy = static_cast<float>(cov(0, 0) / det);
  splat.depth = static_cast<float>(z);
  splat.r = cloud.color[3 * index];
  splat.g = cloud.color[3 * index + 1];
  splat.b = cloud.color[3 * index + 2];
  splat.alpha = std::min(kAlphaCap, cloud.opacity[index]);
  splat.radius = static_cast<float>(radius);
  splat.tag = cloud.source[index];
  return splat;
}

Image render(const GaussianCloud& cloud, const Camera& camera, const RenderConfig& config) {
  validate_render_config(config);
  const SortedSplats sorted = project_and_sort(cloud, camera, config);

  const int W = config.width, H = config.height;
  const int tile = config.tile_size;
  const int tiles_x = (W + tile - 1) / tile;
  const int tiles_y = (H + tile - 1) / tile;

  // Bin splats by tile, preserving the global depth order within each bin.
  std::vector<std::vector<std::uint32_t>> bins(std::size_t(tiles_x) * tiles_y);
  for (std::size_t i = 0; i < sorted.splats.size(); ++i) {
    const Splat2D& s = sorted.splats[i];
    const float rad = s.radius + kBinningPad;
    const int tx0 = std::clamp(int(std::floor((s.mean_x - rad) / tile)), 0, tiles_x - 1);
    const int tx1 = std::clamp(int(std::floor((s.mean_x + rad) / tile)), 0, tiles_x - 1);
    const int ty0 = std::clamp(int(std::floor((s.mean_y - rad) / tile)), 0, tiles_y - 1);
    const int ty1 = std::clamp(int(std::floor((s.mean_y + rad) / tile)), 0, tiles_y - 1);
    for (int ty = ty0; ty <= ty1; ++ty) {
      for (int tx = tx0; tx <= tx1; ++tx) {
        bins[std::size_t(ty) * tiles_x + tx].push_back(static_cast<std::uint32_t>(i));
      }
    }
  }

  const std::size_t n = std::size_t(H) * W;
  std::vector<float> values(3 * n, 0.0f);
  const float cutoff_sq = sorted.cutoff_sq;
  const Eigen::Vector3f bg = config.background;

  parallel_for(std::int64_t(tiles_x) * tiles_y, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t t = begin; t < end; ++t) {
      const int ty = int(t) / tiles_x;
      const int tx = int(t) % tiles_x;
      const auto& bin = bins[std::size_t(t)];
      const int x0 = tx * tile, x1 = std::min(W, x0 + tile);
      const int y0 = ty * tile, y1 = std::min(H, y0 + tile);
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          float transmittance = 1.0f, r = 0.0f, g = 0.0f, b = 0.0f;
          const float px = float(x), py = float(y);
          for (std::uint32_t idx : bin) {
            composite_splat(sorted.splats[idx], px, py, cutoff_sq, transmittance, r, g, b);
          }
          const std::size_t pix = std::size_t(y) * W + x;
          values[pix] = clamp01(r + transmittance * bg[0]);
          values[n + pix] = clamp01(g + transmittance * bg[1]);
          values[2 * n + pix] = clamp01(b + transmittance * bg[2]);
        }
      }
    }
  });

  return make_image(H, W, std::move(values));
}

Image render_reference(const GaussianCloud& cloud, const Camera& camera,
                       const RenderConfig& config) {
  validate_render_config(config);
  const SortedSplats sorted = project_and_sort(cloud, camera, config);

  const int W = config.width, H = config.height;
  const std::size_t n = std::size_t(H) * W;
  std::vector<float> values(3 * n, 0.0f);
  const float cutoff_sq = sorted.cutoff_sq;
  const Eigen::Vector3f bg = config.background;

  parallel_for(H, [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t y = begin; y < end; ++y) {
      for (int x = 0; x < W; ++x) {
        float transmittance = 1.0f, r = 0.0f, g = 0.0f, b = 0.0f;
        const float px = float(x), py = float(y);
        for (const Splat2D& s : sorted.splats) {
          composite_splat(s, px, py, cutoff_sq, transmittance, r, g, b);
        }
        const std::size_t pix = std::size_t(y) * W + x;
        values[pix] = clamp01(r + transmittance * bg[0]);
        values[n + pix] = clamp01(g + transmittance * bg[1]);
        values[2 * n + pix] = clamp01(b + transmittance * bg[2]);
      }
    }
  });

  return make_image(H, W, std::move(values));
}

}  // namespace g4d
