#include "g4d/model.hpp"

#include <cmath>
#include <string>

namespace g4d {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::OpacityOutOfRange: return "OpacityOutOfRange";
    case ErrorCode::ScaleOutOfRange: return "ScaleOutOfRange";
    case ErrorCode::DegenerateTranslation: return "DegenerateTranslation";
    case ErrorCode::TooFewCameras: return "TooFewCameras";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonPositiveGauge: return "NonPositiveGauge";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::WeightFileMismatch: return "WeightFileMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyCorrespondence: return "EmptyCorrespondence";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnsupportedBitDepth: return "UnsupportedBitDepth";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::InternalError: return "InternalError";
  }
  return "UnknownError";
}

bool all_finite(std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void normalize_quaternion(float* q) {
  const double norm = std::sqrt(double(q[0]) * q[0] + double(q[1]) * q[1] +
                                double(q[2]) * q[2] + double(q[3]) * q[3]);
  require(std::isfinite(norm) && norm > 1e-20, ErrorCode::NonFiniteValue,
          "quaternion norm too small to normalize");
  for (int c = 0; c < 4; ++c) q[c] = static_cast<float>(q[c] / norm);
}

Camera::Camera(const Eigen::Quaterniond& q, const Eigen::Vector3d& t,
               double fx_, double fy_, double cx_, double cy_)
    : rotation(q), translation(t), fx(fx_), fy(fy_), cx(cx_), cy(cy_) {
  require(rotation.coeffs().allFinite() && translation.allFinite() && std::isfinite(fx) &&
              std::isfinite(fy) && std::isfinite(cx) && std::isfinite(cy),
          ErrorCode::NonFiniteValue, "camera parameters must be finite");
  require(std::abs(rotation.norm() - 1.0) <= 1e-6, ErrorCode::NonFiniteValue,
          "camera quaternion must be unit within 1e-6");
  rotation.normalize();
  require(fx > 0.0 && fy > 0.0, ErrorCode::ScaleOutOfRange, "focal lengths must be positive");
}

ViewMaps make_view_maps(int height, int width) {
  require(height >= 1 && width >= 1, ErrorCode::ShapeMismatch, "view maps need H, W >= 1");
  ViewMaps maps;
  maps.height = height;
  maps.width = width;
  const std::size_t n = maps.pixel_count();
  maps.position.assign(3 * n, 0.0f);
  maps.opacity.assign(n, 0.0f);
  maps.color.assign(3 * n, 0.0f);
  maps.rotation.assign(4 * n, 0.0f);
  for (std::size_t i = 0; i < n; ++i) maps.rotation[i] = 1.0f;  // identity w plane
  maps.scale.assign(3 * n, 1.0f);
  maps.valid.assign(n, 0);
  return maps;
}

namespace {

void validate_gaussian_attributes(std::span<const float> opacity, std::span<float> rotation,
                                  std::span<const float> scale, std::span<const float> position,
                                  std::span<const float> color, std::size_t n) {
  require(all_finite(position) && all_finite(color) && all_finite(opacity) &&
              all_finite(rotation) && all_finite(scale),
          ErrorCode::NonFiniteValue, "gaussian attributes must be finite");
  for (std::size_t i = 0; i < n; ++i) {
    require(opacity[i] >= 0.0f && opacity[i] <= 1.0f, ErrorCode::OpacityOutOfRange,
            "opacity must lie in [0, 1]");
  }
  for (float s : scale) {
    require(s > 0.0f, ErrorCode::ScaleOutOfRange, "scales must be strictly positive");
  }
  // rotation is interleaved or planar depending on the caller; handled there.
}

}  // namespace

GaussianFrame make_gaussian_frame(std::vector<ViewMaps> views, int timestamp) {
  require(!views.empty(), ErrorCode::ShapeMismatch, "frame needs at least one view");
  const int h = views.front().height;
  const int w = views.front().width;
  for (auto& view : views) {
    require(view.height == h && view.width == w, ErrorCode::ShapeMismatch,
            "all views must share H x W");
    const std::size_t n = view.pixel_count();
    require(view.position.size() == 3 * n && view.opacity.size() == n &&
                view.color.size() == 3 * n && view.rotation.size() == 4 * n &&
                view.scale.size() == 3 * n && view.valid.size() == n,
            ErrorCode::ShapeMismatch, "attribute map sizes must match H x W");
    validate_gaussian_attributes(view.opacity, view.rotation, view.scale, view.position,
                                 view.color, n);
    for (std::size_t i = 0; i < n; ++i) {
      float q[4] = {view.rotation[i], view.rotation[n + i], view.rotation[2 * n + i],
                    view.rotation[3 * n + i]};
      normalize_quaternion(q);
      view.rotation[i] = q[0];
      view.rotation[n + i] = q[1];
      view.rotation[2 * n + i] = q[2];
      view.rotation[3 * n + i] = q[3];
    }
  }
  GaussianFrame frame;
  frame.views = std::move(views);
  frame.timestamp = timestamp;
  return frame;
}

void GaussianCloud::reserve(std::size_t n) {
  position.reserve(3 * n);
  opacity.reserve(n);
  color.reserve(3 * n);
  rotation.reserve(4 * n);
  scale.reserve(3 * n);
  source.reserve(n);
}

void GaussianCloud::append(const GaussianCloud& other, std::size_t index) {
  for (int c = 0; c < 3; ++c) position.push_back(other.position[3 * index + c]);
  opacity.push_back(other.opacity[index]);
  for (int c = 0; c < 3; ++c) color.push_back(other.color[3 * index + c]);
  for (int c = 0; c < 4; ++c) rotation.push_back(other.rotation[4 * index + c]);
  for (int c = 0; c < 3; ++c) scale.push_back(other.scale[3 * index + c]);
  source.push_back(other.source[index]);
}

void GaussianCloud::append_all(const GaussianCloud& other) {
  position.insert(position.end(), other.position.begin(), other.position.end());
  opacity.insert(opacity.end(), other.opacity.begin(), other.opacity.end());
  color.insert(color.end(), other.color.begin(), other.color.end());
  rotation.insert(rotation.end(), other.rotation.begin(), other.rotation.end());
  scale.insert(scale.end(), other.scale.begin(), other.scale.end());
  source.insert(source.end(), other.source.begin(), other.source.end());
}

void GaussianCloud::validate() const {
  const std::size_t n = size();
  require(position.size() == 3 * n && color.size() == 3 * n && rotation.size() == 4 * n &&
              scale.size() == 3 * n && source.size() == n,
          ErrorCode::ShapeMismatch, "cloud attribute array sizes disagree");
  require(all_finite(position) && all_finite(color) && all_finite(opacity) &&
              all_finite(rotation) && all_finite(scale),
          ErrorCode::NonFiniteValue, "cloud attributes must be finite");
  for (std::size_t i = 0; i < n; ++i) {
    require(opacity[i] >= 0.0f && opacity[i] <= 1.0f, ErrorCode::OpacityOutOfRange,
            "opacity must lie in [0, 1]");
    const double qn = std::sqrt(double(rotation[4 * i]) * rotation[4 * i] +
                                double(rotation[4 * i + 1]) * rotation[4 * i + 1] +
                                double(rotation[4 * i + 2]) * rotation[4 * i + 2] +
                                double(rotation[4 * i + 3]) * rotation[4 * i + 3]);
    require(std::abs(qn - 1.0) <= 1e-6, ErrorCode::NonFiniteValue,
            "cloud quaternions must be unit within 1e-6");
    for (int c = 0; c < 3; ++c) {
      require(scale[3 * i + c] > 0.0f, ErrorCode::ScaleOutOfRange,
              "scales must be strictly positive");
    }
  }
}

GaussianCloud flatten(const GaussianFrame& frame) {
  GaussianCloud cloud;
  std::size_t total = 0;
  for (const auto& view : frame.views) {
    for (std::uint8_t v : view.valid) total += v ? 1 : 0;
  }
  cloud.reserve(total);
  for (std::size_t v = 0; v < frame.views.size(); ++v) {
    const ViewMaps& maps = frame.views[v];
    const std::size_t n = maps.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
      if (!maps.valid[i]) continue;
      cloud.position.push_back(maps.position[i]);
      cloud.position.push_back(maps.position[n + i]);
      cloud.position.push_back(maps.position[2 * n + i]);
      cloud.opacity.push_back(maps.opacity[i]);
      cloud.color.push_back(maps.color[i]);
      cloud.color.push_back(maps.color[n + i]);
      cloud.color.push_back(maps.color[2 * n + i]);
      cloud.rotation.push_back(maps.rotation[i]);
      cloud.rotation.push_back(maps.rotation[n + i]);
      cloud.rotation.push_back(maps.rotation[2 * n + i]);
      cloud.rotation.push_back(maps.rotation[3 * n + i]);
      cloud.scale.push_back(maps.scale[i]);
      cloud.scale.push_back(maps.scale[n + i]);
      cloud.scale.push_back(maps.scale[2 * n + i]);
      cloud.source.push_back({static_cast<std::int32_t>(v), static_cast<std::int32_t>(i),
                              frame.timestamp});
    }
  }
  return cloud;
}

GaussianFrame group_by_source(const GaussianCloud& cloud, int n_views, int height, int width,
                              int timestamp) {
  require(n_views >= 1, ErrorCode::ShapeMismatch, "need at least one view");
  std::vector<ViewMaps> views;
  views.reserve(n_views);
  for (int v = 0; v < n_views; ++v) views.push_back(make_view_maps(height, width));
  const std::size_t n = std::size_t(height) * std::size_t(width);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const SourceTag& tag = cloud.source[i];
    require(tag.timestamp == timestamp, ErrorCode::ShapeMismatch,
            "cloud mixes timestamps; cannot regroup into one frame");
    require(tag.view >= 0 && tag.view < n_views && tag.pixel >= 0 &&
                std::size_t(tag.pixel) < n,
            ErrorCode::ShapeMismatch, "source tag out of range");
    ViewMaps& maps = views[tag.view];
    const std::size_t p = std::size_t(tag.pixel);
    maps.position[p] = cloud.position[3 * i];
    maps.position[n + p] = cloud.position[3 * i + 1];
    maps.position[2 * n + p] = cloud.position[3 * i + 2];
    maps.opacity[p] = cloud.opacity[i];
    maps.color[p] = cloud.color[3 * i];
    maps.color[n + p] = cloud.color[3 * i + 1];
    maps.color[2 * n + p] = cloud.color[3 * i + 2];
    maps.rotation[p] = cloud.rotation[4 * i];
    maps.rotation[n + p] = cloud.rotation[4 * i + 1];
    maps.rotation[2 * n + p] = cloud.rotation[4 * i + 2];
    maps.rotation[3 * n + p] = cloud.rotation[4 * i + 3];
    maps.scale[p] = cloud.scale[3 * i];
    maps.scale[n + p] = cloud.scale[3 * i + 1];
    maps.scale[2 * n + p] = cloud.scale[3 * i + 2];
    maps.valid[p] = 1;
  }
  return make_gaussian_frame(std::move(views), timestamp);
}

MotionField make_motion_field(int view, int timestamp, int height, int width,
                              std::vector<float> backward, std::vector<float> forward) {
  require(height >= 1 && width >= 1, ErrorCode::ShapeMismatch, "motion field needs H, W >= 1");
  const std::size_t n = std::size_t(height) * std::size_t(width);
  require(backward.size() == 3 * n && forward.size() == 3 * n, ErrorCode::ShapeMismatch,
          "motion planes must each be 3 x H x W");
  require(all_finite(backward) && all_finite(forward), ErrorCode::NonFiniteValue,
          "motion values must be finite");
  MotionField field;
  field.view = view;
  field.timestamp = timestamp;
  field.height = height;
  field.width = width;
  field.backward = std::move(backward);
  field.forward = std::move(forward);
  return field;
}

FlowField make_flow_field(int height, int width, std::vector<float> values) {
  require(height >= 1 && width >= 1, ErrorCode::ShapeMismatch, "flow field needs H, W >= 1");
  const std::size_t n = std::size_t(height) * std::size_t(width);
  require(values.size() == 2 * n, ErrorCode::ShapeMismatch, "flow payload must be 2 x H x W");
  require(all_finite(values), ErrorCode::NonFiniteValue, "flow values must be finite");
  FlowField field;
  field.height = height;
  field.width = width;
  field.values = std::move(values);
  return field;
}

FlowField zero_flow(int height, int width) {
  return make_flow_field(height, width,
                         std::vector<float>(2 * std::size_t(height) * std::size_t(width), 0.0f));
}

WeightMap make_weight_map(int height, int width, std::vector<float> values) {
  require(height >= 1 && width >= 1, ErrorCode::ShapeMismatch, "weight map needs H, W >= 1");
  const std::size_t n = std::size_t(height) * std::size_t(width);
  require(values.size() == n, ErrorCode::ShapeMismatch, "weight payload must be H x W");
  require(all_finite(values), ErrorCode::NonFiniteValue, "weights must be finite");
  for (float v : values) {
    require(v >= 0.0f && v <= 1.0f, ErrorCode::OpacityOutOfRange, "weights must lie in [0, 1]");
  }
  WeightMap map;
  map.height = height;
  map.width = width;
  map.values = std::move(values);
  return map;
}

Image make_image(int height, int width, std::vector<float> values) {
  require(height >= 1 && width >= 1, ErrorCode::ShapeMismatch, "image needs H, W >= 1");
  const std::size_t n = std::size_t(height) * std::size_t(width);
  require(values.size() == 3 * n, ErrorCode::ShapeMismatch, "image payload must be 3 x H x W");
  require(all_finite(values), ErrorCode::NonFiniteValue, "image values must be finite");
  for (float v : values) {
    require(v >= 0.0f && v <= 1.0f, ErrorCode::OpacityOutOfRange,
            "image values must lie in [0, 1]");
  }
  Image img;
  img.height = height;
  img.width = width;
  img.values = std::move(values);
  return img;
}

Image constant_image(int height, int width, const Eigen::Vector3f& rgb) {
  const std::size_t n = std::size_t(height) * std::size_t(width);
  std::vector<float> values(3 * n);
  for (int c = 0; c < 3; ++c) {
    std::fill(values.begin() + c * n, values.begin() + (c + 1) * n, rgb[c]);
  }
  return make_image(height, width, std::move(values));
}

}  // namespace g4d
