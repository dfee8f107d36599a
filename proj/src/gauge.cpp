#include "g4d/gauge.hpp"

#include <cmath>

namespace g4d {

namespace {

constexpr double kDegenerateNorm = 1e-9;

// Canonical sign: first nonzero coefficient of (w, x, y, z) is positive, so a
// quaternion and its negation compare equal under the loss.
Eigen::Vector4d canonical_coeffs(const Eigen::Quaterniond& q) {
  Eigen::Vector4d c(q.w(), q.x(), q.y(), q.z());
  for (int i = 0; i < 4; ++i) {
    if (c[i] > 0.0) break;
    if (c[i] < 0.0) {
      c = -c;
      break;
    }
  }
  return c;
}

void check_sets(const CameraSet& pred, const CameraSet& gt) {
  require(pred.size() == gt.size(), ErrorCode::LengthMismatch,
          "predicted and GT camera sets differ in size");
  require(pred.size() >= 2, ErrorCode::TooFewCameras,
          "need at least two cameras (camera 0 is the reference)");
}

}  // namespace

double translation_ratio(const Camera& pred, const Camera& gt) {
  const double np = pred.translation.norm();
  const double ng = gt.translation.norm();
  require(ng > kDegenerateNorm && np > kDegenerateNorm, ErrorCode::DegenerateTranslation,
          "translation norm below 1e-9; the reference camera carries no ratio");
  return np / ng;
}

GaugeReport metric_gauge(const CameraSet& pred, const CameraSet& gt) {
  check_sets(pred, gt);
  GaugeReport report;
  report.ratios.emplace_back();
  double sum = 0.0;
  for (std::size_t i = 1; i < pred.size(); ++i) {
    const double p = translation_ratio(pred[i], gt[i]);
    report.ratios.back().push_back(p);
    sum += p;
  }
  const double count = static_cast<double>(pred.size() - 1);
  report.gauge = sum / count;
  report.gauge_paper_literal = report.gauge;
  return report;
}

GaugeReport metric_gauge_temporal(std::span<const CameraSet> pred,
                                  std::span<const CameraSet> gt) {
  require(pred.size() == gt.size(), ErrorCode::LengthMismatch,
          "predicted and GT sequences differ in length");
  require(!pred.empty(), ErrorCode::TooFewCameras, "empty camera sequence");
  if (pred.size() == 1) return metric_gauge(pred[0], gt[0]);

  const std::size_t n = pred[0].size();
  GaugeReport report;
  double sum = 0.0;
  std::size_t terms = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    require(pred[t].size() == n && gt[t].size() == n, ErrorCode::LengthMismatch,
            "camera count varies across timestamps");
    check_sets(pred[t], gt[t]);
    report.ratios.emplace_back();
    for (std::size_t i = 1; i < n; ++i) {
      const double p = translation_ratio(pred[t][i], gt[t][i]);
      report.ratios.back().push_back(p);
      sum += p;
      ++terms;
    }
  }
  report.gauge = sum / static_cast<double>(terms);
  const double k = static_cast<double>(pred.size());
  report.gauge_paper_literal = sum / (static_cast<double>(n - 1) * (k - 1.0));
  return report;
}

namespace {

void accumulate_loss_terms(const CameraSet& pred, const CameraSet& gt,
                           const std::vector<double>& ratios, double gauge,
                           GaugeReport& report) {
  for (std::size_t i = 0; i < pred.size(); ++i) {
    report.rotation_term +=
        (canonical_coeffs(pred[i].rotation) - canonical_coeffs(gt[i].rotation)).norm();
  }
  for (std::size_t i = 1; i < pred.size(); ++i) {
    const double np = pred[i].translation.norm();
    const double ng = gt[i].translation.norm();
    require(np > kDegenerateNorm && ng > kDegenerateNorm, ErrorCode::DegenerateTranslation,
            "translation norm below 1e-9 in direction term");
    report.direction_term +=
        (pred[i].translation / np - gt[i].translation / ng).norm();
    report.ratio_consistency_term += std::abs(ratios[i - 1] - gauge);
  }
}

}  // namespace

GaugeReport camera_loss(const CameraSet& pred, const CameraSet& gt, double predicted_gauge) {
  GaugeReport report = metric_gauge(pred, gt);
  report.predicted_gauge = predicted_gauge;
  accumulate_loss_terms(pred, gt, report.ratios[0], report.gauge, report);
  report.gauge_prediction_term = std::abs(predicted_gauge - report.gauge);
  return report;
}

GaugeReport camera_loss(std::span<const CameraSet> pred, std::span<const CameraSet> gt,
                        double predicted_gauge) {
  GaugeReport report = metric_gauge_temporal(pred, gt);
  report.predicted_gauge = predicted_gauge;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    accumulate_loss_terms(pred[t], gt[t], report.ratios[t], report.gauge, report);
    report.gauge_prediction_term += std::abs(predicted_gauge - report.gauge);
  }
  return report;
}

Camera apply_gauge_to_camera(const Camera& gt_cam, double gauge) {
  require(std::isfinite(gauge) && gauge > 0.0, ErrorCode::NonPositiveGauge,
          "gauge must be positive");
  Camera scaled = gt_cam;
  scaled.translation *= gauge;
  return scaled;
}

void to_metric_points(std::span<Eigen::Vector3d> points, double predicted_gauge) {
  require(std::isfinite(predicted_gauge) && predicted_gauge > 0.0, ErrorCode::NonPositiveGauge,
          "predicted gauge must be positive");
  for (auto& p : points) p /= predicted_gauge;
}

void to_metric_points(std::span<float> xyz_interleaved, double predicted_gauge) {
  require(std::isfinite(predicted_gauge) && predicted_gauge > 0.0, ErrorCode::NonPositiveGauge,
          "predicted gauge must be positive");
  for (auto& v : xyz_interleaved) v = static_cast<float>(v / predicted_gauge);
}

GaussianCloud to_metric_cloud(GaussianCloud cloud, double predicted_gauge) {
  to_metric_points(std::span<float>(cloud.position), predicted_gauge);
  to_metric_points(std::span<float>(cloud.scale), predicted_gauge);
  cloud.validate();
  return cloud;
}

}  // namespace g4d
