#include "divergence.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "errors.hpp"

namespace cetm {

namespace {

int mantissa_sign(const ScaledComplex& v) {
  if (v.m.real() > 0.0) return 1;
  if (v.m.real() < 0.0) return -1;
  if (v.m.imag() > 0.0) return 1;
  if (v.m.imag() < 0.0) return -1;
  return 0;
}

void require_forbidden_edges(const SegmentedPotential& pot, double energy) {
  const bool left = 2.0 * (energy - pot.value(1)) < -kDegenerateEps;
  const bool right =
      2.0 * (energy - pot.value(pot.segments())) < -kDegenerateEps;
  require(left && right, ErrorCode::precondition,
          "oscillatory domain edge: divergence is undefined unless both outer "
          "segments are classically forbidden");
}

bool side_is_free(const Seed& seed, Side side) {
  switch (seed.mode) {
    case Seed::Mode::boundary_left:
      return side == Side::right;
    case Seed::Mode::boundary_right:
      return side == Side::left;
    case Seed::Mode::interior:
      return true;
  }
  return true;
}

std::int64_t clamp_exponent(double excess) {
  if (!(excess > -32000.0)) return -32000;
  if (excess > 32000.0) return 32000;
  return std::llround(excess);
}

}  // namespace

DivergenceReport classify(const WaveSolution& sol,
                          std::int64_t tail_threshold_exp,
                          int points_per_segment) {
  const auto& pot = sol.potential();
  require_forbidden_edges(pot, sol.energy());

  const InteriorStats stats = interior_stats(sol, points_per_segment);

  DivergenceReport report;
  double max_excess = -std::numeric_limits<double>::infinity();
  int n_divergent = 0;
  for (Side side : {Side::left, Side::right}) {
    if (!side_is_free(sol.seed(), side)) continue;
    const double edge_x = side == Side::left ? pot.x_min() : pot.x_max();
    const ScaledComplex v = sol.value(edge_x);
    const double excess = log2_abs(v) - stats.log2_max;
    max_excess = std::max(max_excess, excess);
    if (excess > static_cast<double>(tail_threshold_exp)) {
      const int s = mantissa_sign(v);
      (side == Side::left ? report.sign_left : report.sign_right) = s;
      ++n_divergent;
    }
  }
  report.tail_exponent = clamp_exponent(max_excess);

  if (n_divergent == 0) {
    report.cls = DivergenceReport::Class::convergent;
  } else if (report.sign_left != 0 && report.sign_right != 0 &&
             report.sign_left != report.sign_right) {
    report.cls = DivergenceReport::Class::alpha;
  } else {
    const int s = report.sign_left != 0 ? report.sign_left : report.sign_right;
    report.cls = s >= 0 ? DivergenceReport::Class::beta_plus
                        : DivergenceReport::Class::beta_minus;
  }
  return report;
}

namespace {

/// Interior-seed bracketing function.  The basis sweeps S1, S2 span every
/// interior-seeded solution, and u = R2 S1 - R1 S2 is the combination whose
/// value vanishes at the right edge, so its left-edge value changes sign
/// exactly where some combination dies into both edges at once.  Dividing by
/// the Wronskian W = S1 S2' - S1' S2 (a constant of the equation) makes the
/// sign invariant under reparametrizing the seed basis and positive below the
/// lowest level, matching the boundary-seeded convention.
int interior_divergence_sign(const PotentialPtr& p, double energy,
                             int segment) {
  const auto s1 =
      propagate(p, energy, Seed::interior_general(segment, {1, 0}, {0, 0}));
  const auto s2 =
      propagate(p, energy, Seed::interior_general(segment, {0, 0}, {1, 0}));
  const double x_min = p->x_min();
  const double x_max = p->x_max();
  const ScaledComplex det = sc_sub(sc_mul(s2.value(x_max), s1.value(x_min)),
                                   sc_mul(s1.value(x_max), s2.value(x_min)));
  // The Wronskian is evaluated at the seed midpoint, where both sweeps are
  // O(1) and the product exponents cancel.
  const double xm = p->boundary(segment - 1) + 0.5 * p->width(segment);
  const ScaledComplex w = sc_sub(sc_mul(s1.value(xm), s2.derivative(xm)),
                                 sc_mul(s1.derivative(xm), s2.value(xm)));
  return mantissa_sign(sc_mul(det, std::conj(sc_collapse(w))));
}

}  // namespace

int divergence_sign(const PotentialPtr& p, double energy, const Seed& seed) {
  require(p != nullptr, ErrorCode::invalid_argument, "null potential");
  require_forbidden_edges(*p, energy);

  if (seed.mode == Seed::Mode::interior) {
    require(seed.segment >= 1 && seed.segment <= p->segments(),
            ErrorCode::range, "seed segment out of range");
    return interior_divergence_sign(p, energy, seed.segment);
  }

  const auto sol = propagate(p, energy, seed);
  const double edge_x =
      seed.mode == Seed::Mode::boundary_right ? p->x_min() : p->x_max();
  return mantissa_sign(sol.value(edge_x));
}

/// b* = -Re(R1 conj(R2)) / |R2|^2 minimizes the right-edge value of
/// S1 + b S2 over real b (exactly zero for real configurations).
double tuned_interior_b(const PotentialPtr& p, double energy, int segment) {
  require(p != nullptr, ErrorCode::invalid_argument, "null potential");
  require(segment >= 1 && segment <= p->segments(), ErrorCode::range,
          "seed segment out of range");
  const auto s1 =
      propagate(p, energy, Seed::interior_general(segment, {1, 0}, {0, 0}));
  const auto s2 =
      propagate(p, energy, Seed::interior_general(segment, {0, 0}, {1, 0}));
  const ScaledComplex r1 = s1.value(p->x_max());
  const ScaledComplex r2 = s2.value(p->x_max());
  if (r2.zero()) return 0.0;
  const double num = -(r1.m * std::conj(r2.m)).real();
  const ScaledComplex b =
      normalized(std::complex<double>(num / std::norm(r2.m), 0.0), r1.e - r2.e);
  return sc_collapse(b).real();
}

XdReference make_xd_reference(const WaveSolution& reference,
                              int points_per_segment) {
  const auto& pot = reference.potential();
  XdReference ref{interior_stats(reference, points_per_segment).log2_max,
                  -std::numeric_limits<double>::infinity()};
  const int n = pot.segments();
  for (int seg = 1; seg <= n; ++seg) {
    const double x0 = pot.boundary(seg - 1);
    const double w = pot.width(seg);
    for (int pnt = 0; pnt < points_per_segment; ++pnt) {
      const double x = x0 + w * (static_cast<double>(pnt) / points_per_segment);
      ref.dmax_log2 =
          std::max(ref.dmax_log2, log2_abs(reference.derivative(x)));
    }
  }
  ref.dmax_log2 =
      std::max(ref.dmax_log2, log2_abs(reference.derivative(pot.x_max())));
  return ref;
}

namespace {

struct Crossing {
  bool found = false;
  double x = 0.0;
};

/// March from start toward one end of the precomputed derivative profile and
/// report the first threshold crossing, interpolating in log2 magnitude.
Crossing march(const std::vector<double>& xs, const std::vector<double>& dlog,
               size_t start, bool to_right, double threshold) {
  const auto at = [&](size_t i) { return dlog[i]; };
  if (at(start) >= threshold) return {true, xs[start]};
  size_t i = start;
  while (true) {
    const size_t next = to_right ? i + 1 : i - 1;
    if (to_right ? next >= xs.size() : i == 0) return {};
    if (at(next) >= threshold) {
      const double l0 = at(i);
      if (!std::isfinite(l0)) return {true, xs[next]};
      const double t = (threshold - l0) / (at(next) - l0);
      return {true, xs[i] + t * (xs[next] - xs[i])};
    }
    i = next;
  }
}

}  // namespace

double detect_xd(const WaveSolution& sol, const XdReference& reference,
                 double tau, int points_per_segment) {
  require(tau > 0.0 && std::isfinite(tau), ErrorCode::invalid_argument,
          "tau must be positive");
  const auto& pot = sol.potential();
  const int n = pot.segments();
  const InteriorStats stats = interior_stats(sol, points_per_segment);

  // |Psi'_sol(x)| / peak_sol >= tau * D_ref / peak_ref, all in log2.
  const double threshold = std::log2(tau) +
                           (reference.dmax_log2 - reference.peak_log2) +
                           stats.log2_max;

  std::vector<double> xs, dlog;
  xs.reserve(static_cast<size_t>(n) * points_per_segment + 1);
  for (int seg = 1; seg <= n; ++seg) {
    const double x0 = pot.boundary(seg - 1);
    const double w = pot.width(seg);
    for (int pnt = 0; pnt < points_per_segment; ++pnt)
      xs.push_back(x0 + w * (static_cast<double>(pnt) / points_per_segment));
  }
  xs.push_back(pot.x_max());
  dlog.reserve(xs.size());
  for (double x : xs) dlog.push_back(log2_abs(sol.derivative(x)));

  size_t start = 0;
  for (size_t i = 1; i < xs.size(); ++i)
    if (std::abs(xs[i] - stats.x_peak) < std::abs(xs[start] - stats.x_peak))
      start = i;

  const Seed::Mode mode = sol.seed().mode;
  Crossing left, right;
  if (mode != Seed::Mode::boundary_left)
    left = march(xs, dlog, start, false, threshold);
  if (mode != Seed::Mode::boundary_right)
    right = march(xs, dlog, start, true, threshold);

  if (left.found && right.found)
    return std::abs(left.x) <= std::abs(right.x) ? left.x : right.x;
  if (left.found) return left.x;
  if (right.found) return right.x;
  fail(ErrorCode::not_divergent,
       "derivative never reaches tau times the reference scale");
}

double detect_xd(const WaveSolution& sol, const WaveSolution& reference,
                 double tau, int points_per_segment) {
  return detect_xd(sol, make_xd_reference(reference, points_per_segment), tau,
                   points_per_segment);
}

}  // namespace cetm
