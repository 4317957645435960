#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include "analysis.hpp"
#include "doctest.h"
#include "eigensolver.hpp"
#include "errors.hpp"
#include "potential.hpp"

using namespace cetm;

namespace {

// Plane wave e^{ikx} sampled with its analytic derivative.
std::vector<GridSample> plane_wave(double k, double lo, double hi, int n) {
  std::vector<GridSample> out;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    GridSample s;
    s.x = x;
    s.psi = {{std::cos(k * x), std::sin(k * x)}, 0};
    s.dpsi = {{-k * std::sin(k * x), k * std::cos(k * x)}, 0};
    out.push_back(s);
  }
  return out;
}

// Gaussian ground-state profile with its analytic derivative.
std::vector<GridSample> gaussian(double lo, double hi, int n) {
  std::vector<GridSample> out;
  const double c = std::pow(M_PI, -0.25);
  for (int i = 0; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    const double v = c * std::exp(-0.5 * x * x);
    GridSample s;
    s.x = x;
    s.psi = {{v, 0.0}, 0};
    s.dpsi = {{-x * v, 0.0}, 0};
    out.push_back(s);
  }
  return out;
}

double window_norm(const NormalizedWave& nw) {
  double acc = 0.0;
  const auto& s = nw.samples;
  for (size_t i = 1; i < s.size(); ++i) {
    if (s[i - 1].x < nw.np_lo || s[i].x > nw.np_hi) continue;
    const auto a = sc_collapse(s[i - 1].psi);
    const auto b = sc_collapse(s[i].psi);
    acc += 0.5 * (std::norm(a) + std::norm(b)) * (s[i].x - s[i - 1].x);
  }
  return acc;
}

UncertaintyRecord make_record(double pdf, double pc, double dx, double a_true,
                              DetuneSide side = DetuneSide::above) {
  UncertaintyRecord r;
  r.e_n = 0.5;
  r.delta_e = std::abs(a_true * pdf + pc) / (2.0 * dx);
  r.e = side == DetuneSide::above ? r.e_n + r.delta_e : r.e_n - r.delta_e;
  r.x_d = -dx;
  r.delta_x = dx;
  r.k_d = 1.0;
  r.p_d_factor = pdf;
  r.p_c = pc;
  r.side = side;
  return r;
}

}  // namespace

TEST_CASE("energy normalization hits the target and is idempotent") {
  auto nw = normalize_energy(gaussian(-6.0, 6.0, 2000), 0.5, -6.0, 6.0);
  CHECK(window_norm(nw) == doctest::Approx(0.5).epsilon(1e-10));
  auto again = normalize_energy(nw.samples, 0.5, -6.0, 6.0);
  const double factor =
      std::abs(sc_collapse({again.factor.m, again.factor.e}).real());
  CHECK(factor == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalization rejects degenerate windows") {
  CHECK_THROWS_AS(normalize_energy(gaussian(-6.0, 6.0, 100), 0.5, 5.0, 5.1),
                  Error);
  CHECK_THROWS_AS(normalize_energy({}, 0.5, -1.0, 1.0), Error);
}

TEST_CASE("momentum readout: plane wave gives back its wavenumber") {
  const double k = 1.7;
  const double cell = 2.0 * M_PI / k;
  auto nw = normalize_energy(plane_wave(k, 0.0, 6.0 * cell, 6000), 1.0, 0.0,
                             6.0 * cell);
  CHECK(mean_momentum_np(nw, PcMode::magnitude) ==
        doctest::Approx(k).epsilon(1e-9));
  CHECK(mean_momentum_np(nw, PcMode::real_part) ==
        doctest::Approx(k).epsilon(1e-9));
  CHECK(std::abs(mean_momentum_np(nw, PcMode::imag_part)) <= 1e-9);
}

TEST_CASE("momentum readout: a standing state carries none") {
  auto nw = normalize_energy(gaussian(-6.0, 6.0, 4000), 1.0, -6.0, 6.0);
  CHECK(std::abs(mean_momentum_np(nw, PcMode::magnitude)) <= 1e-10);
}

TEST_CASE("divergent-part weight") {
  CHECK(dp_weight(0.6, 0.5) == doctest::Approx(0.1 / 0.6).epsilon(1e-15));
  CHECK(dp_weight(0.4, 0.5) == doctest::Approx(0.1 / 0.5).epsilon(1e-15));
  CHECK(dp_weight(0.5, 0.5) == 0.0);
  // continuity toward the level from both sides
  CHECK(dp_weight(0.5 + 1e-9, 0.5) <= 3e-9);
  CHECK(dp_weight(0.5 - 1e-9, 0.5) <= 3e-9);
  CHECK_THROWS_AS((void)dp_weight(-0.1, 0.5), Error);
  CHECK(mean_momentum_dp_factor(0.6, 0.5, 3.0) ==
        doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("np/dp split puts the onset node on the normal side") {
  std::vector<GridSample> samples;
  for (int i = -2; i <= 2; ++i) {
    GridSample s;
    s.x = i;
    s.psi = {{1.0, 0.0}, 0};
    samples.push_back(s);
  }
  const auto [np, dp] = split_np_dp(samples, 0.0, Side::left);
  REQUIRE(dp.size() == 2);
  REQUIRE(np.size() == 3);
  CHECK(dp.back().x == -1.0);
  CHECK(np.front().x == 0.0);
}

TEST_CASE("fit recovers a planted coefficient") {
  std::vector<UncertaintyRecord> records;
  for (int i = 0; i < 7; ++i)
    records.push_back(
        make_record(0.3 * std::pow(10.0, -i), 0.0, 2.0 + 0.1 * i, 0.7));
  const auto fit = fit_uncertainty(records);
  CHECK(fit.a == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(fit.n_records == 7);
  CHECK(fit.median_rel_residual <= 1e-9);
  for (const auto& r : records) CHECK(check_uncertainty_inequality(r, fit.a));
}

TEST_CASE("fit picks the negative branch when the data demand it") {
  std::vector<UncertaintyRecord> records;
  for (int i = 0; i < 7; ++i) {
    const double pdf = 0.3 * std::pow(10.0, -i);
    records.push_back(
        make_record(pdf, (0.2 + 0.05 * i) * pdf, 2.0 + 0.1 * i, -0.7));
  }
  const auto fit = fit_uncertainty(records);
  CHECK(fit.a == doctest::Approx(-0.7).epsilon(1e-6));
}

TEST_CASE("fit is covariant under rescaling the onset wavenumber") {
  std::vector<UncertaintyRecord> base;
  for (int i = 0; i < 7; ++i)
    base.push_back(
        make_record(0.3 * std::pow(10.0, -i), 0.0, 2.0 + 0.1 * i, 0.7));
  auto scaled = base;
  const double c = 3.7;
  for (auto& r : scaled) {
    r.k_d *= c;
    r.p_d_factor *= c;
  }
  const auto fa = fit_uncertainty(base);
  const auto fb = fit_uncertainty(scaled);
  CHECK(fb.a == doctest::Approx(fa.a / c).epsilon(1e-9));
}

TEST_CASE("fit needs data") {
  CHECK_THROWS_AS((void)fit_uncertainty({}), Error);
}

TEST_CASE("inequality check applies the stated slack") {
  auto r = make_record(0.3, 0.0, 2.0, 0.7);
  CHECK(check_uncertainty_inequality(r, 0.7));
  // push delta_e just below the bound: outside the 1e-6 slack it must fail
  r.delta_e *= 1.0 - 1e-5;
  CHECK_FALSE(check_uncertainty_inequality(r, 0.7));
  r.delta_e *= (1.0 + 1e-5) * (1.0 - 1e-7);
  CHECK(check_uncertainty_inequality(r, 0.7));
}

TEST_CASE("dataset rows render deterministically") {
  UncertaintyRecord r;
  r.e = 0.5;
  r.e_n = 0.25;
  r.delta_e = 0.25;
  r.x_d = -3.0;
  r.delta_x = 3.0;
  r.k_d = 2.0;
  r.p_d_factor = 2.0;
  r.p_c = 0.125;
  r.side = DetuneSide::above;
  auto below = r;
  below.side = DetuneSide::below;
  CHECK(dataset_csv({r, below}) ==
        "E,E_n,delta_E,x_d,delta_x,k_d,p_d_factor,p_c,side\n"
        "0.5,0.25,0.25,-3,3,2,2,0.125,above\n"
        "0.5,0.25,0.25,-3,3,2,2,0.125,below\n");
}

TEST_CASE("collection walks the onset outward over four decades") {
  const auto p = std::make_shared<const SegmentedPotential>(
      SegmentedPotential::harmonic(-8.0, 8.0, 1000));
  const auto levels = spectrum(p, 0.0, 1.0, 100, Seed::right());
  REQUIRE(levels.size() == 1);
  const std::vector<double> detunings = {1e-3, 1e-4, 1e-5, 1e-6};
  const auto res =
      collect_uncertainty_dataset(p, levels[0], detunings, DetuneSide::above);
  CHECK(res.warnings.empty());
  REQUIRE(res.records.size() == 4);
  for (size_t i = 0; i < res.records.size(); ++i) {
    const auto& r = res.records[i];
    CHECK(r.side == DetuneSide::above);
    CHECK(r.e == doctest::Approx(levels[0].energy + detunings[i]));
    CHECK(r.delta_x > 0.0);
    CHECK(r.k_d > 0.0);
    if (i > 0) CHECK(r.delta_x > res.records[i - 1].delta_x);
  }
}

TEST_CASE("a detuning that spans the next level is skipped with a warning") {
  const auto p = std::make_shared<const SegmentedPotential>(
      SegmentedPotential::harmonic(-8.0, 8.0, 1000));
  const auto levels = spectrum(p, 0.0, 1.0, 100, Seed::right());
  REQUIRE(levels.size() == 1);
  const auto res =
      collect_uncertainty_dataset(p, levels[0], {1.2}, DetuneSide::above);
  CHECK(res.records.empty());
  REQUIRE(res.warnings.size() == 1);
}
