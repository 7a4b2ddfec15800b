#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <vector>

#include "dgsqp/errors.hpp"

namespace dgsqp::scenarios {

struct TrackSegment {
  double length = 0.0;     // m
  double curvature = 0.0;  // 1/m, constant along the segment
};

/**
 * Centerline described by consecutive constant-curvature segments.
 *
 * `segment_curvature(s)` is the exact piecewise-constant lookup. The vehicle
 * model uses `curvature(s)`, which replaces each jump by a logistic blend of
 * width `blend_length` so that the dynamics stay twice differentiable; the
 * heading `heading(s)` is its closed-form integral. A blend length of zero
 * reproduces the piecewise-constant profile exactly. Past the last segment the
 * final curvature continues.
 */
class Track {
 public:
  Track(std::vector<TrackSegment> segments, double width, double blend_length = 0.05)
      : segments_(std::move(segments)), width_(width), blend_(blend_length) {
    if (segments_.empty()) throw ConfigError("track needs at least one segment");
    if (!(width_ > 0.0)) throw ConfigError("track width must be positive");
    if (blend_ < 0.0) throw ConfigError("track blend length must be >= 0");
    double s = 0.0;
    for (const auto& seg : segments_) {
      if (!(seg.length > 0.0)) throw ConfigError("track segment lengths must be positive");
      s += seg.length;
      breaks_.push_back(s);
    }
    total_length_ = s;
    heading_offset_ = heading_raw(0.0);
    build_centerline_table();
  }

  /// Straight, arc of `angle` radians at `radius`, straight.
  static Track turn(double angle, double radius = 4.5, double straight = 3.0,
                    double width = 1.0, double blend_length = 0.05) {
    return Track({{straight, 0.0}, {radius * std::abs(angle), angle >= 0 ? 1.0 / radius : -1.0 / radius},
                  {straight, 0.0}},
                 width, blend_length);
  }

  static Track straight(double length, double width) {
    return Track({{length, 0.0}}, width, 0.0);
  }

  double width() const { return width_; }
  double total_length() const { return total_length_; }
  double blend_length() const { return blend_; }
  const std::vector<TrackSegment>& segments() const { return segments_; }

  double segment_curvature(double s) const {
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      if (s < breaks_[i]) return segments_[i].curvature;
    }
    return segments_.back().curvature;
  }

  double curvature(double s) const {
    if (blend_ == 0.0) return segment_curvature(s);
    double kappa = segments_.front().curvature;
    for (std::size_t b = 0; b + 1 < segments_.size(); ++b) {
      const double jump = segments_[b + 1].curvature - segments_[b].curvature;
      if (jump != 0.0) kappa += jump * logistic((s - breaks_[b]) / blend_);
    }
    return kappa;
  }

  double curvature_derivative(double s) const {
    if (blend_ == 0.0) return 0.0;
    double out = 0.0;
    for (std::size_t b = 0; b + 1 < segments_.size(); ++b) {
      const double jump = segments_[b + 1].curvature - segments_[b].curvature;
      if (jump == 0.0) continue;
      const double sig = logistic((s - breaks_[b]) / blend_);
      out += jump * sig * (1.0 - sig) / blend_;
    }
    return out;
  }

  /// Tangent angle of the centerline, theta(0) = 0.
  double heading(double s) const { return heading_raw(s) - heading_offset_; }

  /// Cartesian centerline point at arc length s (s may be negative or past the
  /// end; the first and last curvature values are extended).
  Eigen::Vector2d centerline(double s) const {
    if (s <= 0.0 || s >= table_end_) return integrate(0.0, Eigen::Vector2d::Zero(), s);
    const int idx = static_cast<int>(s / kTableStep);
    return integrate(idx * kTableStep, table_[idx], s);
  }

  Eigen::Vector2d to_cartesian(double s, double e_y) const {
    const double theta = heading(s);
    return centerline(s) + e_y * Eigen::Vector2d(-std::sin(theta), std::cos(theta));
  }

 private:
  static constexpr double kTableStep = 0.05;

  static double logistic(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  static double softplus(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }

  double heading_raw(double s) const {
    if (blend_ == 0.0) {
      if (s < 0.0) return segments_.front().curvature * s;
      double theta = 0.0, start = 0.0;
      for (std::size_t i = 0; i < segments_.size(); ++i) {
        const bool last = i + 1 == segments_.size();
        const double end = last ? s : breaks_[i];
        const double overlap = std::min(s, end) - start;
        if (overlap <= 0.0) break;
        theta += segments_[i].curvature * overlap;
        start = end;
      }
      return theta;
    }
    double theta = segments_.front().curvature * s;
    for (std::size_t b = 0; b + 1 < segments_.size(); ++b) {
      const double jump = segments_[b + 1].curvature - segments_[b].curvature;
      if (jump != 0.0) theta += jump * blend_ * softplus((s - breaks_[b]) / blend_);
    }
    return theta;
  }

  // Composite Simpson integration of (cos theta, sin theta) from a to b.
  Eigen::Vector2d integrate(double a, Eigen::Vector2d start, double b) const {
    const double span = b - a;
    if (span == 0.0) return start;
    const int n = 2 * std::max(1, static_cast<int>(std::ceil(std::abs(span) / 0.01)));
    const double step = span / n;
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    for (int i = 0; i <= n; ++i) {
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      const double theta = heading(a + i * step);
      acc += w * Eigen::Vector2d(std::cos(theta), std::sin(theta));
    }
    return start + acc * (step / 3.0);
  }

  void build_centerline_table() {
    const int count = static_cast<int>(std::ceil((total_length_ + 20.0) / kTableStep)) + 1;
    table_.reserve(count);
    table_.push_back(Eigen::Vector2d::Zero());
    for (int i = 1; i < count; ++i) {
      table_.push_back(integrate((i - 1) * kTableStep, table_.back(), i * kTableStep));
    }
    table_end_ = (count - 1) * kTableStep;
  }

  std::vector<TrackSegment> segments_;
  std::vector<double> breaks_;
  double width_;
  double blend_;
  double total_length_ = 0.0;
  double heading_offset_ = 0.0;
  std::vector<Eigen::Vector2d> table_;
  double table_end_ = 0.0;
};

}  // namespace dgsqp::scenarios
