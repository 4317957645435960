#include <cmath>
#include <memory>

#include "doctest.h"
#include "eigensolver.hpp"
#include "errors.hpp"
#include "potential.hpp"

using namespace cetm;

namespace {

PotentialPtr harmonic_small() {
  static const PotentialPtr p = std::make_shared<const SegmentedPotential>(
      SegmentedPotential::harmonic(-8.0, 8.0, 800));
  return p;
}

// discretization shift of the resampled oscillator levels, h^2 / 24
constexpr double kResample = (0.02 * 0.02) / 24.0;

}  // namespace

TEST_CASE("scan brackets every level in range") {
  const auto s = scan(harmonic_small(), 0.0, 3.0, 300, Seed::right());
  REQUIRE(s.grid.size() == 301);
  REQUIRE(s.brackets.size() == 3);
  for (size_t n = 0; n < 3; ++n) {
    const double expect = 0.5 + static_cast<double>(n);
    CHECK(s.brackets[n].lo < expect + 2.0 * kResample);
    CHECK(s.brackets[n].hi > expect - 2.0 * kResample);
    CHECK(s.brackets[n].sign_lo * s.brackets[n].sign_hi == -1);
  }
}

TEST_CASE("bisection refines a bracket to tolerance") {
  SolverOptions o;
  o.tol = 1e-12;
  const auto r = bisect(harmonic_small(), {0.45, 0.55, 0, 0}, Seed::right(), o);
  CHECK(std::abs(r.energy - 0.5) <= 2.0 * kResample);
  CHECK(r.bracket_hi - r.bracket_lo <= 1e-12);
  CHECK(r.iterations >= 30);
  CHECK_FALSE(r.verified);  // verification belongs to spectrum()
  REQUIRE(r.wave);
  CHECK(r.wave->energy() == r.energy);
}

TEST_CASE("spectrum returns ordered verified levels") {
  const auto levels = spectrum(harmonic_small(), 0.0, 3.0, 300, Seed::right());
  REQUIRE(levels.size() == 3);
  for (size_t n = 0; n < levels.size(); ++n) {
    CHECK(levels[n].verified);
    CHECK(std::abs(levels[n].energy - (0.5 + static_cast<double>(n))) <=
          2.0 * kResample);
    if (n > 0) CHECK(levels[n].energy > levels[n - 1].energy);
  }
}

TEST_CASE("square well levels match the matching-condition roots") {
  const auto p = std::make_shared<const SegmentedPotential>(
      SegmentedPotential::finite_well(10.0, 2.0, 8.0, 3));
  const auto levels = spectrum(p, 0.0, 10.0, 400, Seed::right());
  REQUIRE(levels.size() == 3);
  CHECK(levels[0].energy == doctest::Approx(0.819740073767).epsilon(1e-9));
  CHECK(levels[1].energy == doctest::Approx(3.220939978589).epsilon(1e-9));
  CHECK(levels[2].energy == doctest::Approx(6.945766491226).epsilon(1e-9));
}

TEST_CASE("verification probes flip around a solved level") {
  const auto p = harmonic_small();
  SolverOptions o;
  o.tol = 1e-13;
  const auto r = bisect(p, {0.45, 0.55, 0, 0}, Seed::right(), o);
  CHECK(verify_cs(p, r.energy, 1e-9, Seed::right(), o));
  CHECK(verify_cs(p, r.energy, 1e-5, Seed::right(), o));
  // far from any level both probes land on the same side
  CHECK_FALSE(verify_cs(p, r.energy + 0.2, 1e-9, Seed::right(), o));
}

TEST_CASE("verification rejects an epsilon that spans the next level") {
  const auto p = harmonic_small();
  SolverOptions o;
  o.tol = 1e-15;
  const auto r = bisect(p, {0.45, 0.55, 0, 0}, Seed::right(), o);
  CHECK_THROWS_AS((void)verify_cs(p, r.energy, 1.0, Seed::right(), o), Error);
  try {
    (void)verify_cs(p, r.energy, 1.0, Seed::right(), o);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unreliable_verification);
  }
}

TEST_CASE("nearest-level search expands around the guess") {
  const auto r = solve_nearest(harmonic_small(), 0.43, Seed::right());
  CHECK(std::abs(r.energy - 0.5) <= 2.0 * kResample);
  const auto r2 = solve_nearest(harmonic_small(), 1.62, Seed::right());
  CHECK(std::abs(r2.energy - 1.5) <= 2.0 * kResample);
}

TEST_CASE("scan survives grid points above the domain edge potential") {
  // edge potential 4.5: G is undefined above it, the scan marks those points
  // invalid instead of failing, and the spectrum keeps the reachable levels
  const auto p = std::make_shared<const SegmentedPotential>(
      SegmentedPotential::harmonic(-3.0, 3.0, 60));
  const auto s = scan(p, 0.0, 6.0, 60, Seed::right());
  bool saw_invalid = false;
  for (int sign : s.signs) saw_invalid = saw_invalid || sign == kInvalidSign;
  CHECK(saw_invalid);
  const auto levels = spectrum(p, 0.0, 6.0, 60, Seed::right());
  CHECK(levels.size() >= 3);
  for (const auto& l : levels) CHECK(l.energy < 4.5);
}

TEST_CASE("tail tuning finds the convergent combination at a level") {
  const auto p = std::make_shared<const SegmentedPotential>(
      SegmentedPotential::harmonic(-8.0, 8.0, 400));
  SolverOptions o;
  o.tol = 1e-12;
  const auto r = bisect(p, {0.45, 0.55, 0, 0}, Seed::right(), o);
  const int j = p->min_segment();

  const auto at_level = self_tune_bj(p, r.energy, j);
  CHECK(at_level.convergent);

  const auto coarse = self_tune_bj(p, r.energy + 1e-3, j);
  const auto fine = self_tune_bj(p, r.energy + 1e-5, j);
  CHECK_FALSE(coarse.convergent);
  CHECK_FALSE(fine.convergent);
  CHECK(std::isfinite(coarse.b));
  CHECK(std::abs(coarse.x_d) < 8.0);
  // best-case onset still walks outward with shrinking detuning
  CHECK(std::abs(fine.x_d) > std::abs(coarse.x_d));
}

TEST_CASE("invalid ranges are rejected") {
  CHECK_THROWS_AS(scan(harmonic_small(), 3.0, 0.0, 10, Seed::right()), Error);
  CHECK_THROWS_AS(scan(harmonic_small(), 0.0, 3.0, 0, Seed::right()), Error);
  CHECK_THROWS_AS(
      bisect(harmonic_small(), {0.45, 0.46, 1, 1}, Seed::right()), Error);
}
