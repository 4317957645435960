#include "potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace cetm {

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace

SegmentedPotential::SegmentedPotential(std::vector<double> boundaries,
                                       std::vector<double> values,
                                       std::string label)
    : boundaries_(std::move(boundaries)),
      values_(std::move(values)),
      label_(std::move(label)) {
  require(values_.size() >= 1, ErrorCode::invalid_argument,
          "potential needs at least one segment");
  require(boundaries_.size() == values_.size() + 1,
          ErrorCode::invalid_argument,
          "boundary count must be segment count + 1");
  require(all_finite(boundaries_) && all_finite(values_),
          ErrorCode::invalid_argument, "potential data must be finite");
  for (size_t i = 1; i < boundaries_.size(); ++i)
    require(boundaries_[i - 1] < boundaries_[i], ErrorCode::invalid_argument,
            "segment boundaries must be strictly increasing");
}

SegmentedPotential SegmentedPotential::harmonic(double xmin, double xmax,
                                                int n_segments) {
  require(n_segments >= 1, ErrorCode::invalid_argument,
          "segment count must be positive");
  require(std::isfinite(xmin) && std::isfinite(xmax) && xmin < xmax,
          ErrorCode::invalid_argument, "domain must satisfy xmin < xmax");
  const double h = (xmax - xmin) / n_segments;
  std::vector<double> bs(static_cast<size_t>(n_segments) + 1);
  std::vector<double> vs(static_cast<size_t>(n_segments));
  for (int i = 0; i <= n_segments; ++i) bs[static_cast<size_t>(i)] = xmin + i * h;
  bs.back() = xmax;
  for (int i = 1; i <= n_segments; ++i) {
    const double c = xmin + (i - 0.5) * h;
    vs[static_cast<size_t>(i - 1)] = 0.5 * c * c;
  }
  return SegmentedPotential(std::move(bs), std::move(vs), "harmonic");
}

SegmentedPotential SegmentedPotential::finite_well(double depth, double width,
                                                   double padding,
                                                   int n_segments) {
  require(depth > 0 && width > 0 && padding > 0, ErrorCode::invalid_argument,
          "well depth, width and padding must be positive");
  require(n_segments >= 3, ErrorCode::invalid_argument,
          "well needs at least three segments");
  // Split the segment budget across the three constant regions so the well
  // edges land exactly on boundaries; any split represents the same shape.
  const double total = width + 2 * padding;
  int n_in = std::max(1, static_cast<int>(std::lround(n_segments * width / total)));
  if (n_in > n_segments - 2) n_in = n_segments - 2;
  int n_left = (n_segments - n_in) / 2;
  int n_right = n_segments - n_in - n_left;

  std::vector<double> bs;
  std::vector<double> vs;
  bs.reserve(static_cast<size_t>(n_segments) + 1);
  vs.reserve(static_cast<size_t>(n_segments));
  const double xl = -0.5 * width - padding;
  const double wl = -0.5 * width;
  const double wr = 0.5 * width;
  const double xr = 0.5 * width + padding;
  auto emit = [&](double a, double b, int n, double v) {
    for (int i = 0; i < n; ++i) {
      bs.push_back(a + (b - a) * i / n);
      vs.push_back(v);
    }
  };
  emit(xl, wl, n_left, depth);
  emit(wl, wr, n_in, 0.0);
  emit(wr, xr, n_right, depth);
  bs[0] = xl;
  bs.push_back(xr);
  return SegmentedPotential(std::move(bs), std::move(vs), "well");
}

SegmentedPotential SegmentedPotential::hydrogen_soft_core(double softening,
                                                          double xmin,
                                                          double xmax,
                                                          int n_segments) {
  require(softening > 0, ErrorCode::invalid_argument,
          "softening must be positive");
  require(n_segments >= 1, ErrorCode::invalid_argument,
          "segment count must be positive");
  require(std::isfinite(xmin) && std::isfinite(xmax) && xmin < xmax,
          ErrorCode::invalid_argument, "domain must satisfy xmin < xmax");
  const double h = (xmax - xmin) / n_segments;
  std::vector<double> bs(static_cast<size_t>(n_segments) + 1);
  std::vector<double> vs(static_cast<size_t>(n_segments));
  for (int i = 0; i <= n_segments; ++i) bs[static_cast<size_t>(i)] = xmin + i * h;
  bs.back() = xmax;
  for (int i = 1; i <= n_segments; ++i) {
    const double c = xmin + (i - 0.5) * h;
    vs[static_cast<size_t>(i - 1)] = -1.0 / (std::abs(c) + softening);
  }
  return SegmentedPotential(std::move(bs), std::move(vs), "hydrogen");
}

SegmentedPotential SegmentedPotential::from_samples(
    const std::vector<std::pair<double, double>>& points) {
  require(points.size() >= 2, ErrorCode::invalid_argument,
          "need at least two samples");
  std::vector<double> bs(points.size());
  std::vector<double> vs(points.size() - 1);
  for (size_t i = 0; i < points.size(); ++i) {
    require(std::isfinite(points[i].first) && std::isfinite(points[i].second),
            ErrorCode::invalid_argument, "samples must be finite");
    bs[i] = points[i].first;
    if (i > 0)
      require(bs[i - 1] < bs[i], ErrorCode::invalid_argument,
              "sample positions must be strictly increasing");
  }
  for (size_t i = 0; i + 1 < points.size(); ++i)
    vs[i] = 0.5 * (points[i].second + points[i + 1].second);
  return SegmentedPotential(std::move(bs), std::move(vs), "sampled");
}

std::vector<std::pair<double, double>> SegmentedPotential::to_samples() const {
  // Invert the bracketing-mean rule: u_0 = V_1, u_i = 2 V_i - u_{i-1}, then
  // nudge u_i by ulps until the mean reproduces V_i exactly in double
  // arithmetic.
  const size_t n = values_.size();
  std::vector<std::pair<double, double>> pts(n + 1);
  pts[0] = {boundaries_[0], values_[0]};
  double prev = values_[0];
  for (size_t i = 0; i < n; ++i) {
    const double target = values_[i];
    double u = 2.0 * target - prev;
    auto mean = [&](double cand) { return 0.5 * (prev + cand); };
    if (mean(u) != target) {
      double lo = u, hi = u;
      bool done = false;
      for (int step = 0; step < 64 && !done; ++step) {
        lo = std::nextafter(lo, -std::numeric_limits<double>::infinity());
        hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
        if (mean(lo) == target) { u = lo; done = true; }
        else if (mean(hi) == target) { u = hi; done = true; }
      }
    }
    pts[i + 1] = {boundaries_[i + 1], u};
    prev = u;
  }
  return pts;
}

void SegmentedPotential::save(const std::string& path) const {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io, "cannot open '" + path + "' for writing");
  out << "# segmented potential: position value\n";
  char buf[128];
  for (const auto& [x, v] : to_samples()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", x, v);
    out << buf;
  }
  require(out.good(), ErrorCode::io, "write to '" + path + "' failed");
}

SegmentedPotential SegmentedPotential::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open '" + path + "'");
  std::vector<std::pair<double, double>> pts;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream ss(line);
    double x, v;
    if (!(ss >> x)) continue;  // blank or comment-only line
    require(static_cast<bool>(ss >> v), ErrorCode::invalid_argument,
            path + ":" + std::to_string(lineno) + ": expected 'x V' pair");
    double extra;
    require(!(ss >> extra), ErrorCode::invalid_argument,
            path + ":" + std::to_string(lineno) + ": trailing data");
    pts.emplace_back(x, v);
  }
  require(pts.size() >= 2, ErrorCode::invalid_argument,
          path + ": need at least two samples");
  auto p = from_samples(pts);
  return SegmentedPotential(
      std::vector<double>(p.boundaries_), std::vector<double>(p.values_),
      "file:" + path);
}

int SegmentedPotential::segment_of(double x) const {
  require(std::isfinite(x), ErrorCode::invalid_argument,
          "position must be finite");
  if (x < boundaries_.front() || x > boundaries_.back())
    fail(ErrorCode::range, "position outside the potential domain");
  auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), x);
  auto idx = static_cast<int>(it - boundaries_.begin());
  if (idx > segments()) idx = segments();  // x == x_N
  return idx;
}

double SegmentedPotential::min_value() const {
  return *std::min_element(values_.begin(), values_.end());
}

int SegmentedPotential::min_segment() const {
  auto it = std::min_element(values_.begin(), values_.end());
  return static_cast<int>(it - values_.begin()) + 1;
}

}  // namespace cetm
