#include "photogeo/metrics.hpp"

#include "photogeo/photometric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace photogeo {

namespace {

void check_sizes(std::size_t a, std::size_t b, const std::vector<std::uint8_t>& mask, const char* op) {
  if (a != b || (!mask.empty() && mask.size() != a)) {
    throw std::invalid_argument(std::string(op) + ": size mismatch");
  }
}

bool in_mask(const std::vector<std::uint8_t>& mask, std::size_t i) { return mask.empty() || mask[i]; }

// 17 significant digits so text reports reload bit-exactly.
std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

double si_error(const std::vector<double>& d, const std::vector<double>& d_star,
                const std::vector<std::uint8_t>& mask) {
  check_sizes(d.size(), d_star.size(), mask, "si_error");
  std::vector<double> delta;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!in_mask(mask, i)) continue;
    if (!(d[i] > 0) || !(d_star[i] > 0)) throw std::invalid_argument("si_error: non-positive depth in mask");
    delta.push_back(std::log(d[i]) - std::log(d_star[i]));
  }
  if (delta.empty()) throw std::invalid_argument("si_error: empty mask");
  const double n = double(delta.size());
  double m = 0;
  for (double x : delta) m += x;
  m /= n;
  double var = 0;
  for (double x : delta) var += (x - m) * (x - m);
  return std::sqrt(var / n);
}

double normal_angle_error(const std::vector<double>& d, const std::vector<double>& d_star,
                          const Intrinsics<double>& K, const std::vector<std::uint8_t>& mask) {
  check_sizes(d.size(), d_star.size(), mask, "normal_angle_error");
  const auto N = static_cast<std::size_t>(K.width * K.height);
  if (d.size() != N) throw std::invalid_argument("normal_angle_error: depth does not match intrinsics");
  for (std::size_t i = 0; i < N; ++i)
    if (!(d[i] > 0) || !(d_star[i] > 0)) throw std::invalid_argument("normal_angle_error: non-positive depth");
  const Shape shape{1, 1, K.height, K.width};
  const auto n = normals_from_depth(Tensor<double>::from_vector(shape, d), K).normals.value();
  const auto ns = normals_from_depth(Tensor<double>::from_vector(shape, d_star), K).normals.value();
  double total = 0;
  std::size_t count = 0;
  const auto Ni = static_cast<Index>(N);
  for (std::size_t i = 0; i < N; ++i) {
    if (!in_mask(mask, i)) continue;
    const auto ii = static_cast<Index>(i);
    const Eigen::Vector3d a(n[ii], n[Ni + ii], n[2 * Ni + ii]), b(ns[ii], ns[Ni + ii], ns[2 * Ni + ii]);
    // Fused multiply-adds leave a residue in a x a, so equal normals are caught first.
    if (a != b) total += std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / std::numbers::pi;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("normal_angle_error: empty mask");
  return total / double(count);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y,
               const std::vector<std::uint8_t>& mask) {
  check_sizes(x.size(), y.size(), mask, "pearson");
  double mx = 0, my = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!in_mask(mask, i)) continue;
    mx += x[i];
    my += y[i];
    ++n;
  }
  if (n < 2) throw std::invalid_argument("pearson: need at least two samples");
  mx /= double(n);
  my /= double(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!in_mask(mask, i)) continue;
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return 0;
  return sxy / std::sqrt(sxx * syy);
}

double keypoint_depth_correlation(const std::vector<std::vector<double>>& pred,
                                  const std::vector<std::vector<double>>& gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw std::invalid_argument("keypoint_depth_correlation: need matching non-empty face lists");
  }
  const std::size_t nkp = pred.front().size();
  double total = 0;
  for (std::size_t f = 0; f < pred.size(); ++f) {
    if (pred[f].size() != nkp || gt[f].size() != nkp) {
      throw std::invalid_argument("keypoint_depth_correlation: keypoint count differs between faces");
    }
    if (nkp < 3) throw std::invalid_argument("keypoint_depth_correlation: fewer than 3 keypoints");
    total += pearson(pred[f], gt[f]);
  }
  return double(nkp) * total / double(pred.size());
}

void MetricReport::aggregate() {
  si_error = normal_error_deg = median_pearson = recon_l1 = baseline_si_error = 0;
  if (per_image.empty()) return;
  // Images without a usable mask carry NaN and are left out of the means.
  auto finite_mean = [this](double ImageMetrics::*field) {
    double acc = 0;
    std::size_t n = 0;
    for (const auto& m : per_image) {
      if (std::isfinite(m.*field)) {
        acc += m.*field;
        ++n;
      }
    }
    return n ? acc / double(n) : std::numeric_limits<double>::quiet_NaN();
  };
  si_error = finite_mean(&ImageMetrics::si_error);
  normal_error_deg = finite_mean(&ImageMetrics::normal_error_deg);
  recon_l1 = finite_mean(&ImageMetrics::recon_l1);
  baseline_si_error = finite_mean(&ImageMetrics::baseline_si_error);
  std::vector<double> r;
  for (const auto& m : per_image) r.push_back(m.pearson);
  std::sort(r.begin(), r.end());
  const std::size_t h = r.size() / 2;
  median_pearson = r.size() % 2 ? r[h] : 0.5 * (r[h - 1] + r[h]);
}

std::string MetricReport::to_text() const {
  std::ostringstream os;
  os << "images=" << per_image.size() << '\n'
     << "si_error=" << format_double(si_error) << '\n'
     << "normal_error_deg=" << format_double(normal_error_deg) << '\n'
     << "median_pearson=" << format_double(median_pearson) << '\n'
     << "recon_l1=" << format_double(recon_l1) << '\n'
     << "baseline_si_error=" << format_double(baseline_si_error) << '\n';
  return os.str();
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "index,si_error,normal_error_deg,pearson,recon_l1,baseline_si_error\n";
  for (const auto& m : per_image) {
    os << m.index << ',' << format_double(m.si_error) << ',' << format_double(m.normal_error_deg)
       << ',' << format_double(m.pearson) << ',' << format_double(m.recon_l1) << ','
       << format_double(m.baseline_si_error) << '\n';
  }
  return os.str();
}

MetricReport MetricReport::from_text(const std::string& text, const std::string& csv) {
  MetricReport r;
  std::istringstream ts(text);
  std::string line;
  while (std::getline(ts, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const double v = std::stod(line.substr(eq + 1));
    if (key == "si_error") r.si_error = v;
    else if (key == "normal_error_deg") r.normal_error_deg = v;
    else if (key == "median_pearson") r.median_pearson = v;
    else if (key == "recon_l1") r.recon_l1 = v;
    else if (key == "baseline_si_error") r.baseline_si_error = v;
  }
  std::istringstream cs(csv);
  if (!std::getline(cs, line) ||
      line != "index,si_error,normal_error_deg,pearson,recon_l1,baseline_si_error") {
    throw std::runtime_error("metric table: unexpected header");
  }
  while (std::getline(cs, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (f.size() != 6) throw std::runtime_error("metric table: malformed row '" + line + "'");
    ImageMetrics m;
    m.index = std::stoll(f[0]);
    m.si_error = std::stod(f[1]);
    m.normal_error_deg = std::stod(f[2]);
    m.pearson = std::stod(f[3]);
    m.recon_l1 = std::stod(f[4]);
    m.baseline_si_error = std::stod(f[5]);
    r.per_image.push_back(m);
  }
  return r;
}

void MetricReport::save(const std::filesystem::path& text_path,
                        const std::filesystem::path& csv_path) const {
  std::ofstream t(text_path), c(csv_path);
  if (!t || !c) throw std::runtime_error("cannot write metric report");
  t << to_text();
  c << to_csv();
}

MetricReport MetricReport::load(const std::filesystem::path& text_path,
                                const std::filesystem::path& csv_path) {
  std::ifstream t(text_path), c(csv_path);
  if (!t || !c) throw std::runtime_error("cannot read metric report");
  std::stringstream ts, cs;
  ts << t.rdbuf();
  cs << c.rdbuf();
  return from_text(ts.str(), cs.str());
}

namespace {
bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }
}  // namespace

bool operator==(const ImageMetrics& a, const ImageMetrics& b) {
  return a.index == b.index && same(a.si_error, b.si_error) && same(a.normal_error_deg, b.normal_error_deg) &&
         same(a.pearson, b.pearson) && same(a.recon_l1, b.recon_l1) &&
         same(a.baseline_si_error, b.baseline_si_error);
}

bool operator==(const MetricReport& a, const MetricReport& b) {
  return same(a.si_error, b.si_error) && same(a.normal_error_deg, b.normal_error_deg) &&
         same(a.median_pearson, b.median_pearson) && same(a.recon_l1, b.recon_l1) &&
         same(a.baseline_si_error, b.baseline_si_error) && a.per_image == b.per_image;
}

}  // namespace photogeo
