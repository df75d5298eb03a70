#pragma once

#include "photogeo/camera.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace photogeo {

/// Standard deviation of log(d / d_star) over the pixels where mask is set
/// (all pixels when mask is empty). Throws on non-positive depth in the mask.
double si_error(const std::vector<double>& d, const std::vector<double>& d_star,
                const std::vector<std::uint8_t>& mask = {});

/// Mean angle in degrees between normals of d and d_star, both W x H maps on
/// the grid of K, over the masked pixels.
double normal_angle_error(const std::vector<double>& d, const std::vector<double>& d_star,
                          const Intrinsics<double>& K, const std::vector<std::uint8_t>& mask = {});

/// Pearson correlation over the masked entries; 0 when either side is
/// constant.
double pearson(const std::vector<double>& x, const std::vector<double>& y,
               const std::vector<std::uint8_t>& mask = {});

/// N_kp times the mean per-face Pearson correlation between predicted and
/// ground-truth keypoint depths. Ranges over [-N_kp, N_kp].
double keypoint_depth_correlation(const std::vector<std::vector<double>>& pred,
                                  const std::vector<std::vector<double>>& gt);

struct ImageMetrics {
  Index index = 0;
  double si_error = 0;
  double normal_error_deg = 0;
  double pearson = 0;
  double recon_l1 = 0;
  double baseline_si_error = 0;
};

struct MetricReport {
  double si_error = 0;              // mean over images
  double normal_error_deg = 0;      // mean over images
  double median_pearson = 0;
  double recon_l1 = 0;              // mean over images
  double baseline_si_error = 0;     // constant-midpoint depth predictor
  std::vector<ImageMetrics> per_image;

  /// Recomputes the aggregates from per_image.
  void aggregate();

  /// key=value lines, one per aggregate.
  std::string to_text() const;
  /// Header "index,si_error,normal_error_deg,pearson,recon_l1,baseline_si_error"
  /// then one row per image.
  std::string to_csv() const;
  static MetricReport from_text(const std::string& text, const std::string& csv);

  void save(const std::filesystem::path& text_path, const std::filesystem::path& csv_path) const;
  static MetricReport load(const std::filesystem::path& text_path,
                           const std::filesystem::path& csv_path);
};

bool operator==(const ImageMetrics& a, const ImageMetrics& b);
bool operator==(const MetricReport& a, const MetricReport& b);

}  // namespace photogeo
