#pragma once

#include <span>
#include <vector>

#include "g4d/model.hpp"

namespace g4d {

// Translation-ratio report for a camera set (or a sequence of sets) plus the
// four summands of the camera loss. `gauge` is the arithmetic mean over the
// summed ratio terms; `gauge_paper_literal` additionally records the printed
// (n-1)(k-1) normalization of the temporal form, which disagrees with the
// term count whenever k > 1 (the two coincide for a single timestamp).
struct GaugeReport {
  std::vector<std::vector<double>> ratios;  // [timestamp][camera index - 1]
  double gauge = 0.0;
  double gauge_paper_literal = 0.0;
  double predicted_gauge = 0.0;
  double rotation_term = 0.0;
  double direction_term = 0.0;
  double ratio_consistency_term = 0.0;
  double gauge_prediction_term = 0.0;

  double total() const {
    return rotation_term + direction_term + ratio_consistency_term + gauge_prediction_term;
  }
};

// p = |T_pred| / |T_gt|. Throws DegenerateTranslation when either norm is
// below 1e-9 (the reference camera, or bad input).
double translation_ratio(const Camera& pred, const Camera& gt);

// Mean translation ratio over cameras 1..n-1; camera 0 is the coordinate
// reference and is excluded.
GaugeReport metric_gauge(const CameraSet& pred, const CameraSet& gt);

// Temporal form over k timestamps. A length-1 sequence delegates to the
// spatial form.
GaugeReport metric_gauge_temporal(std::span<const CameraSet> pred,
                                  std::span<const CameraSet> gt);

// Four-term camera loss: quaternion distance over all cameras (signs
// canonicalized so q and -q compare equal), translation-direction distance
// and ratio consistency over cameras 1..n-1, and |predicted_gauge - gauge|.
GaugeReport camera_loss(const CameraSet& pred, const CameraSet& gt, double predicted_gauge);

// Temporal camera loss; the gauge-prediction term sums |predicted_gauge -
// gauge| once per timestamp, matching the temporal sum with a single
// predicted scalar per call.
GaugeReport camera_loss(std::span<const CameraSet> pred, std::span<const CameraSet> gt,
                        double predicted_gauge);

// Scales the camera translation by the gauge; rotation and intrinsics are
// unchanged.
Camera apply_gauge_to_camera(const Camera& gt_cam, double gauge);

// Divides every coordinate by the predicted gauge. Callers that convert a
// whole Gaussian model must apply the same division to Gaussian scales and to
// motion magnitudes; this routine touches only the points it is given.
void to_metric_points(std::span<Eigen::Vector3d> points, double predicted_gauge);
void to_metric_points(std::span<float> xyz_interleaved, double predicted_gauge);

// Convenience for whole clouds: divides positions and scales (the documented
// companion adjustment); motions are handled by the caller.
GaussianCloud to_metric_cloud(GaussianCloud cloud, double predicted_gauge);

}  // namespace g4d
