#include "wave.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "errors.hpp"

namespace cetm {

std::complex<double> wavenumber(double energy, double v) {
  require(std::isfinite(energy) && std::isfinite(v), ErrorCode::invalid_argument,
          "wavenumber requires finite energy and potential");
  const double q = 2.0 * (energy - v);
  if (q >= 0.0) return {std::sqrt(q), 0.0};
  return {0.0, std::sqrt(-q)};
}

bool is_degenerate(double energy, double v) {
  return std::abs(2.0 * (energy - v)) < kDegenerateEps;
}

ScaledComplex segment_value(const SegmentWave& w, double x) {
  ScaledComplex u;
  if (w.basis == Basis::linear) {
    u = normalized(w.a + w.b * x, 0);
  } else {
    u = sc_add(sc_mul(unit_exp(w.k, x, -1), w.a),
               sc_mul(unit_exp(w.k, x, +1), w.b));
  }
  return sc_shift(u, w.scale_exp);
}

ScaledComplex segment_derivative(const SegmentWave& w, double x) {
  ScaledComplex u;
  if (w.basis == Basis::linear) {
    u = normalized(w.b, 0);
  } else {
    const auto t = sc_sub(sc_mul(unit_exp(w.k, x, +1), w.b),
                          sc_mul(unit_exp(w.k, x, -1), w.a));
    u = sc_mul(t, std::complex<double>(0.0, 1.0) * w.k);
  }
  return sc_shift(u, w.scale_exp);
}

namespace {

/// Pack two scaled amplitudes into one SegmentWave sharing a scale exponent.
SegmentWave pack_wave(const ScaledComplex& a, const ScaledComplex& b,
                      std::complex<double> k, Basis basis) {
  SegmentWave out;
  out.k = k;
  out.basis = basis;
  if (a.zero() && b.zero()) return out;
  std::int64_t s;
  if (a.zero())
    s = b.e;
  else if (b.zero())
    s = a.e;
  else
    s = std::max(a.e, b.e);
  const auto drop = [s](const ScaledComplex& v) {
    if (v.zero()) return std::complex<double>(0.0, 0.0);
    const std::int64_t d = v.e - s;
    if (d < -kAlignLimit) return std::complex<double>(0.0, 0.0);
    return ldexp_c(v.m, static_cast<int>(d));
  };
  out.a = drop(a);
  out.b = drop(b);
  out.scale_exp = s;
  return out;
}

}  // namespace

SegmentWave match_at_boundary(const SegmentWave& w, std::complex<double> k_next,
                              Basis next_basis, double x_b) {
  const ScaledComplex psi = segment_value(w, x_b);
  const ScaledComplex dpsi = segment_derivative(w, x_b);

  if (next_basis == Basis::linear) {
    // psi = a' + b' x_b, psi' = b'.
    const ScaledComplex b2 = dpsi;
    const ScaledComplex a2 = sc_sub(psi, sc_mul(dpsi, std::complex<double>(x_b)));
    return pack_wave(a2, b2, {0.0, 0.0}, Basis::linear);
  }

  require(std::norm(k_next) >= kDegenerateEps, ErrorCode::internal,
          "degenerate wavenumber requires the linear basis");

  // a' = (psi + i psi'/k') / 2 * e^{+ik'x_b},
  // b' = (psi - i psi'/k') / 2 * e^{-ik'x_b}.
  const ScaledComplex u = sc_div(sc_mul_i(dpsi), k_next);
  const ScaledComplex a2 =
      sc_shift(sc_mul(sc_add(psi, u), unit_exp(k_next, x_b, +1)), -1);
  const ScaledComplex b2 =
      sc_shift(sc_mul(sc_sub(psi, u), unit_exp(k_next, x_b, -1)), -1);
  return pack_wave(a2, b2, k_next, Basis::plane);
}

ScaledComplex WaveSolution::value(double x) const {
  return segment_value(wave(pot_->segment_of(x)), x);
}

ScaledComplex WaveSolution::derivative(double x) const {
  return segment_derivative(wave(pot_->segment_of(x)), x);
}

namespace {

/// Fold the running exponent back into the raw coefficients; this is what
/// naive unscaled propagation would have produced.
void fold_scale(SegmentWave& w) {
  if (w.scale_exp != 0) {
    const int k = static_cast<int>(
        std::clamp<std::int64_t>(w.scale_exp, -kAlignLimit * 3, kAlignLimit * 3));
    w.a = ldexp_c(w.a, k);
    w.b = ldexp_c(w.b, k);
    w.scale_exp = 0;
  }
  require(std::isfinite(w.a.real()) && std::isfinite(w.a.imag()) &&
              std::isfinite(w.b.real()) && std::isfinite(w.b.imag()),
          ErrorCode::overflow, "amplitude overflow with scaling disabled");
}

}  // namespace

WaveSolution propagate(PotentialPtr pot, double energy, const Seed& seed,
                       const PropagateOptions& opt) {
  require(pot != nullptr, ErrorCode::invalid_argument, "null potential");
  require(std::isfinite(energy), ErrorCode::invalid_argument,
          "energy must be finite");
  const int n = pot->segments();

  std::vector<std::complex<double>> ks(static_cast<size_t>(n));
  std::vector<Basis> bases(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const double v = pot->value(i);
    if (is_degenerate(energy, v)) {
      ks[static_cast<size_t>(i - 1)] = {0.0, 0.0};
      bases[static_cast<size_t>(i - 1)] = Basis::linear;
    } else {
      ks[static_cast<size_t>(i - 1)] = wavenumber(energy, v);
      bases[static_cast<size_t>(i - 1)] = Basis::plane;
    }
  }

  int j = 0;
  std::complex<double> a0, b0;
  switch (seed.mode) {
    case Seed::Mode::boundary_left:
      j = 1;
      a0 = {1.0, 0.0};
      b0 = {0.0, 0.0};
      break;
    case Seed::Mode::boundary_right:
      j = n;
      a0 = {0.0, 0.0};
      b0 = {1.0, 0.0};
      break;
    case Seed::Mode::interior:
      require(seed.segment >= 1 && seed.segment <= n, ErrorCode::range,
              "seed segment out of range");
      j = seed.segment;
      a0 = seed.a;
      b0 = seed.b;
      require(std::isfinite(a0.real()) && std::isfinite(a0.imag()) &&
                  std::isfinite(b0.real()) && std::isfinite(b0.imag()),
              ErrorCode::invalid_argument, "seed amplitudes must be finite");
      require(a0 != std::complex<double>(0.0, 0.0) ||
                  b0 != std::complex<double>(0.0, 0.0),
              ErrorCode::invalid_argument, "seed amplitudes are both zero");
      break;
  }
  if (seed.mode != Seed::Mode::interior) {
    // The pure-decay seed only exists when the outer segment is forbidden.
    const double q = 2.0 * (energy - pot->value(j));
    require(q < -kDegenerateEps, ErrorCode::precondition,
            "boundary seed needs E < V in the outer segment: "
            "oscillatory tail; divergence undefined");
  }

  std::vector<SegmentWave> waves(static_cast<size_t>(n));
  waves[static_cast<size_t>(j - 1)] =
      SegmentWave{a0, b0, ks[static_cast<size_t>(j - 1)],
                  bases[static_cast<size_t>(j - 1)], 0};

  for (int seg = j + 1; seg <= n; ++seg) {
    waves[static_cast<size_t>(seg - 1)] = match_at_boundary(
        waves[static_cast<size_t>(seg - 2)], ks[static_cast<size_t>(seg - 1)],
        bases[static_cast<size_t>(seg - 1)], pot->boundary(seg - 1));
    if (!opt.scaling) fold_scale(waves[static_cast<size_t>(seg - 1)]);
  }
  for (int seg = j - 1; seg >= 1; --seg) {
    waves[static_cast<size_t>(seg - 1)] = match_at_boundary(
        waves[static_cast<size_t>(seg)], ks[static_cast<size_t>(seg - 1)],
        bases[static_cast<size_t>(seg - 1)], pot->boundary(seg));
    if (!opt.scaling) fold_scale(waves[static_cast<size_t>(seg - 1)]);
  }

  return WaveSolution(std::move(pot), energy, seed, std::move(waves));
}

std::vector<WaveSample> sample_grid(const WaveSolution& sol,
                                    int points_per_segment) {
  require(points_per_segment >= 1, ErrorCode::invalid_argument,
          "points_per_segment must be >= 1");
  const auto& pot = sol.potential();
  const int n = pot.segments();
  std::vector<WaveSample> out;
  out.reserve(static_cast<size_t>(n) * static_cast<size_t>(points_per_segment) +
              1);
  for (int seg = 1; seg <= n; ++seg) {
    const double x0 = pot.boundary(seg - 1);
    const double w = pot.width(seg);
    for (int p = 0; p < points_per_segment; ++p) {
      const double x = x0 + w * (static_cast<double>(p) /
                                 static_cast<double>(points_per_segment));
      out.push_back({x, sol.value(x)});
    }
  }
  out.push_back({pot.x_max(), sol.value(pot.x_max())});
  return out;
}

double hamiltonian_residual(const WaveSolution& sol, double step) {
  const auto& pot = sol.potential();
  const double energy = sol.energy();
  const double e_scale = std::abs(energy);
  double worst = 0.0;
  for (int seg = 1; seg <= pot.segments(); ++seg) {
    const SegmentWave& w = sol.wave(seg);
    const double width = pot.width(seg);
    double h;
    if (step > 0.0) {
      h = std::min(step, 0.2 * width);
    } else if (w.basis == Basis::linear) {
      h = width / 8.0;
    } else {
      h = std::min(width / 8.0, 3e-4 / std::max(1.0, std::abs(w.k)));
    }
    // The central-difference stencil applied to the segment basis collapses
    // to a single factor: for e^{+-ikx} terms,
    //   psi(x+h) + psi(x-h) - 2 psi(x) = (2 cos(kh) - 2) psi(x),
    // and for a + bx it vanishes identically.  Using the collapsed form keeps
    // the O(h^2) discretization error visible without the cancellation noise
    // of differencing three nearly equal doubles.
    std::complex<double> r;  // (-(1/2) D2 + (V - E)) acting on psi, per psi
    const double dv = pot.value(seg) - energy;
    if (w.basis == Basis::linear) {
      r = {dv, 0.0};
    } else {
      const std::complex<double> s = std::sin(w.k * (h / 2.0));
      const std::complex<double> d2 = -4.0 * s * s / (h * h);
      r = -0.5 * d2 + dv;
    }
    for (double f : {0.25, 0.5, 0.75}) {
      const double x = pot.boundary(seg - 1) + f * width;
      const ScaledComplex psi = segment_value(w, x);
      if (psi.zero()) continue;
      const ScaledComplex t = sc_mul(psi, r);
      const double ratio =
          std::exp2(log2_abs(t) - log2_abs(psi)) / e_scale;
      worst = std::max(worst, ratio);
    }
  }
  return worst;
}

ScaledReal segment_flux(const SegmentWave& w) {
  return {w.k.real() * (std::norm(w.a) - std::norm(w.b)), 2 * w.scale_exp};
}

InteriorStats interior_stats(const WaveSolution& sol, int points_per_segment) {
  const auto& pot = sol.potential();
  const double energy = sol.energy();
  const int n = pot.segments();
  const auto samples = sample_grid(sol, points_per_segment);

  bool any_allowed = false;
  for (int seg = 1; seg <= n; ++seg)
    any_allowed = any_allowed ||
                  2.0 * (energy - pot.value(seg)) > -kDegenerateEps;

  const double lo = pot.x_min() + 0.25 * (pot.x_max() - pot.x_min());
  const double hi = pot.x_min() + 0.75 * (pot.x_max() - pot.x_min());

  InteriorStats stats{-std::numeric_limits<double>::infinity(),
                      0.5 * (pot.x_min() + pot.x_max())};
  for (size_t idx = 0; idx < samples.size(); ++idx) {
    const int seg = std::min(
        n, 1 + static_cast<int>(idx) / std::max(1, points_per_segment));
    bool in_scope;
    if (any_allowed)
      in_scope = 2.0 * (energy - pot.value(seg)) > -kDegenerateEps;
    else
      in_scope = samples[idx].x >= lo && samples[idx].x <= hi;
    if (!in_scope) continue;
    const double mag = log2_abs(samples[idx].psi);
    if (mag > stats.log2_max) {
      stats.log2_max = mag;
      stats.x_peak = samples[idx].x;
    }
  }
  return stats;
}

}  // namespace cetm
