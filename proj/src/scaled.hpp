#pragma once

// Complex values carried as mantissa * 2^exponent.  Forbidden-region tails
// grow like exp(kappa * distance) and leave the double range long before the
// physics stops being meaningful, so every amplitude-valued quantity in the
// propagation pipeline moves through this representation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

namespace cetm {

struct ScaledComplex {
  std::complex<double> m{0.0, 0.0};
  std::int64_t e{0};

  bool zero() const { return m.real() == 0.0 && m.imag() == 0.0; }
  bool finite() const {
    return std::isfinite(m.real()) && std::isfinite(m.imag());
  }
};

// Exponent gap beyond which the smaller addend is below one ulp of the
// larger even through the subnormal range.
inline constexpr std::int64_t kAlignLimit = 1100;

inline std::complex<double> ldexp_c(const std::complex<double>& v, int k) {
  return {std::ldexp(v.real(), k), std::ldexp(v.imag(), k)};
}

/// Rescale so the larger mantissa component sits in [0.5, 1); the modulus
/// then lies in [0.5, sqrt(2)).  Zero and non-finite values pass through.
inline ScaledComplex normalized(std::complex<double> m, std::int64_t e) {
  if ((m.real() == 0.0 && m.imag() == 0.0) ||
      !(std::isfinite(m.real()) && std::isfinite(m.imag())))
    return {m, 0};
  int ex = 0;
  std::frexp(std::max(std::abs(m.real()), std::abs(m.imag())), &ex);
  return {ldexp_c(m, -ex), e + ex};
}

inline ScaledComplex normalized(const ScaledComplex& v) {
  return normalized(v.m, v.e);
}

inline ScaledComplex sc_add(const ScaledComplex& u, const ScaledComplex& v) {
  if (u.zero()) return normalized(v);
  if (v.zero()) return normalized(u);
  if (u.e < v.e) return sc_add(v, u);
  const std::int64_t d = u.e - v.e;
  if (d > kAlignLimit) return normalized(u);
  return normalized(u.m + ldexp_c(v.m, -static_cast<int>(d)), u.e);
}

inline ScaledComplex sc_sub(const ScaledComplex& u, const ScaledComplex& v) {
  return sc_add(u, {-v.m, v.e});
}

inline ScaledComplex sc_mul(const ScaledComplex& u, const ScaledComplex& v) {
  return normalized(u.m * v.m, u.e + v.e);
}

inline ScaledComplex sc_mul(const ScaledComplex& u, std::complex<double> c) {
  return normalized(u.m * c, u.e);
}

inline ScaledComplex sc_div(const ScaledComplex& u, std::complex<double> c) {
  return normalized(u.m / c, u.e);
}

/// Multiply by i (rotate a quarter turn); exact.
inline ScaledComplex sc_mul_i(const ScaledComplex& u) {
  return {std::complex<double>(-u.m.imag(), u.m.real()), u.e};
}

inline ScaledComplex sc_shift(const ScaledComplex& u, std::int64_t de) {
  return {u.m, u.e + de};
}

inline double log2_abs(const ScaledComplex& v) {
  if (v.zero()) return -std::numeric_limits<double>::infinity();
  return static_cast<double>(v.e) + std::log2(std::abs(v.m));
}

/// Collapse to a plain double pair, saturating to +-HUGE_VAL / 0 when the
/// exponent leaves the representable range.
inline std::complex<double> sc_collapse(const ScaledComplex& v) {
  if (v.zero()) return {0.0, 0.0};
  const int k = static_cast<int>(std::clamp<std::int64_t>(v.e, -2200, 2200));
  return ldexp_c(v.m, k);
}

/// |u - v| / max(|u|, |v|); 0 when both are zero.
inline double rel_diff(const ScaledComplex& u, const ScaledComplex& v) {
  if (u.zero() && v.zero()) return 0.0;
  if (u.zero() || v.zero()) return 1.0;
  const std::int64_t common = std::max(u.e, v.e);
  const auto du = ldexp_c(
      u.m, static_cast<int>(std::max<std::int64_t>(u.e - common, -kAlignLimit)));
  const auto dv = ldexp_c(
      v.m, static_cast<int>(std::max<std::int64_t>(v.e - common, -kAlignLimit)));
  return std::abs(du - dv) / std::max(std::abs(du), std::abs(dv));
}

/// e^{i * s * k * x} with s = +-1, in scaled form.  The oscillatory factor
/// stays on the mantissa; the real exponential moves to the exponent when it
/// would stress the double range.
inline ScaledComplex unit_exp(std::complex<double> k, double x, int s) {
  const double theta = s * k.real() * x;
  const double r = -s * k.imag() * x;
  const std::complex<double> phase(std::cos(theta), std::sin(theta));
  if (std::abs(r) <= 350.0) return normalized(std::exp(r) * phase, 0);
  const double t = r * 1.4426950408889634074;  // r / ln 2
  const double n = std::floor(t);
  return normalized(std::exp2(t - n) * phase, static_cast<std::int64_t>(n));
}

}  // namespace cetm
