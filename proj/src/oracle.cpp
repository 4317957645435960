#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace cetm::oracle {

namespace {

constexpr double kRenormAt = 1e250;

struct Shot {
  double y_prev;  // value one node inside the match point
  double y_at;    // value at the match point
  double y_next;  // value one node past the match point
};

/// Numerov sweep from `from` toward `to` (inclusive), zero boundary seed.
/// Returns the solution around node m in max-norm scale, so the Wronskian
/// built from two shots is a continuous function of E.
Shot shoot(const std::vector<double>& f, double h, int from, int to, int m) {
  const int dir = to > from ? 1 : -1;
  const double c = h * h / 12.0;
  double y0 = 0.0;
  double y1 = 1e-10;
  double max_abs = std::abs(y1);
  Shot s{0.0, 0.0, 0.0};
  auto record = [&](int node, double value) {
    if (node == m - dir) s.y_prev = value;
    if (node == m) s.y_at = value;
    if (node == m + dir) s.y_next = value;
  };
  record(from, y0);
  record(from + dir, y1);
  for (int i = from + dir; i != to; i += dir) {
    const double y2 = ((2.0 + 10.0 * c * f[static_cast<size_t>(i)]) * y1 -
                       (1.0 - c * f[static_cast<size_t>(i - dir)]) * y0) /
                      (1.0 - c * f[static_cast<size_t>(i + dir)]);
    y0 = y1;
    y1 = y2;
    if (std::abs(y1) > kRenormAt) {
      const double scale = 1.0 / std::abs(y1);
      y0 *= scale;
      y1 *= scale;
      s.y_prev *= scale;
      s.y_at *= scale;
      s.y_next *= scale;
      max_abs *= scale;
    }
    max_abs = std::max(max_abs, std::abs(y1));
    record(i + dir, y1);
  }
  require(max_abs > 0.0, ErrorCode::internal, "numerov sweep collapsed");
  s.y_prev /= max_abs;
  s.y_at /= max_abs;
  s.y_next /= max_abs;
  return s;
}

}  // namespace

OracleResult numerov_eigen(const SegmentedPotential& p, double bracket_lo,
                           double bracket_hi, double grid_step, double tol) {
  require(std::isfinite(bracket_lo) && std::isfinite(bracket_hi) &&
              bracket_lo < bracket_hi,
          ErrorCode::invalid_argument, "bracket must be a finite interval");
  require(grid_step > 0.0, ErrorCode::invalid_argument,
          "grid step must be positive");
  require(tol > 0.0, ErrorCode::invalid_argument, "tolerance must be positive");

  const double span = p.x_max() - p.x_min();
  const int n = std::max(8, static_cast<int>(std::lround(span / grid_step)));
  const double h = span / n;

  std::vector<double> v(static_cast<size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    const double x = std::clamp(p.x_min() + h * i, p.x_min(), p.x_max());
    v[static_cast<size_t>(i)] = p.value(p.segment_of(x));
  }

  const double x_match = p.midpoint(p.min_segment());
  int m = static_cast<int>(std::lround((x_match - p.x_min()) / h));
  m = std::clamp(m, 2, n - 2);

  std::vector<double> f(v.size());
  auto mismatch = [&](double e) {
    for (size_t i = 0; i < v.size(); ++i) f[i] = 2.0 * (v[i] - e);
    const Shot l = shoot(f, h, 0, m + 1, m);
    const Shot r = shoot(f, h, n, m - 1, m);
    const double dl = (l.y_next - l.y_prev) / (2.0 * h);
    const double dr = (r.y_prev - r.y_next) / (2.0 * h);  // r runs leftward
    return dl * r.y_at - dr * l.y_at;
  };

  double lo = bracket_lo;
  double hi = bracket_hi;
  double f_lo = mismatch(lo);
  const double f_hi = mismatch(hi);
  require(std::isfinite(f_lo) && std::isfinite(f_hi),
          ErrorCode::invalid_bracket, "mismatch not finite at bracket edges");
  require(f_lo == 0.0 || f_hi == 0.0 || (f_lo < 0.0) != (f_hi < 0.0),
          ErrorCode::invalid_bracket,
          "no mismatch sign change inside the bracket");

  for (int i = 0; i < 200 && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = mismatch(mid);
    if (f_mid == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }

  OracleResult out;
  out.eigenvalue = 0.5 * (lo + hi);
  out.method = Method::numerov;
  out.grid_step = h;
  out.nodes = n + 1;
  return out;
}

HarmonicLevel analytic_harmonic(int n) {
  require(n >= 0, ErrorCode::invalid_argument, "level index must be >= 0");
  HarmonicLevel out;
  out.energy = n + 0.5;
  out.psi = [n](double x) {
    // Recurrence on the normalized functions phi_k keeps magnitudes O(1):
    // phi_{k+1} = sqrt(2/(k+1)) x phi_k - sqrt(k/(k+1)) phi_{k-1}.
    const double phi0 = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
    if (n == 0) return phi0;
    double prev = phi0;
    double cur = std::sqrt(2.0) * x * phi0;
    for (int k = 1; k < n; ++k) {
      const double next = std::sqrt(2.0 / (k + 1)) * x * cur -
                          std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
      prev = cur;
      cur = next;
    }
    return cur;
  };
  return out;
}

std::vector<double> analytic_finite_well(double depth, double width) {
  require(depth > 0.0 && width > 0.0, ErrorCode::invalid_argument,
          "depth and width must be positive");

  // Pole-free matching conditions for V = 0 inside, depth outside:
  //   even: k sin(k w/2) = kappa cos(k w/2)
  //   odd:  k cos(k w/2) = -kappa sin(k w/2)
  const auto f_even = [&](double e) {
    const double k = std::sqrt(2.0 * e);
    const double kap = std::sqrt(2.0 * (depth - e));
    return k * std::sin(0.5 * k * width) - kap * std::cos(0.5 * k * width);
  };
  const auto f_odd = [&](double e) {
    const double k = std::sqrt(2.0 * e);
    const double kap = std::sqrt(2.0 * (depth - e));
    return k * std::cos(0.5 * k * width) + kap * std::sin(0.5 * k * width);
  };

  auto bisect = [&](auto f, double lo, double hi) {
    double f_lo = f(lo);
    for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double f_mid = f(mid);
      if (f_mid == 0.0) return mid;
      if ((f_mid < 0.0) == (f_lo < 0.0)) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  std::vector<double> roots;
  // Scan uniformly in u = k w / 2, where each branch has at most one root
  // per pi interval regardless of depth; a uniform energy grid would skip
  // root pairs near the bottom of deep wells.
  const double eps = depth * 1e-13;
  const double u_lo = 0.5 * width * std::sqrt(2.0 * eps);
  const double u_hi = 0.5 * width * std::sqrt(2.0 * (depth - eps));
  const int cells =
      std::max(256, static_cast<int>(16.0 * (u_hi - u_lo) / M_PI) + 1);
  const auto energy_at = [&](int i) {
    const double u = u_lo + (u_hi - u_lo) * i / cells;
    return 2.0 * u * u / (width * width);
  };
  auto scan = [&](auto f) {
    double x0 = energy_at(0);
    double f0 = f(x0);
    for (int i = 1; i <= cells; ++i) {
      const double x1 = energy_at(i);
      const double f1 = f(x1);
      if (f0 == 0.0)
        roots.push_back(x0);
      else if ((f0 < 0.0) != (f1 < 0.0))
        roots.push_back(bisect(f, x0, x1));
      x0 = x1;
      f0 = f1;
    }
  };
  scan(f_even);
  scan(f_odd);
  std::sort(roots.begin(), roots.end());
  return roots;
}

Comparison compare(const EigenResult& cetm, const OracleResult& oracle,
                   double tol) {
  Comparison out;
  out.cetm = cetm.energy;
  out.oracle = oracle.eigenvalue;
  out.abs_diff = std::abs(out.cetm - out.oracle);
  const double scale = std::max(
      {std::abs(out.cetm), std::abs(out.oracle), 1e-300});
  out.rel_diff = out.abs_diff / scale;
  out.pass = out.abs_diff <= tol;
  return out;
}

}  // namespace cetm::oracle
