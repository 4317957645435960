#include <filesystem>
#include <vector>

#include "doctest.h"
#include "errors.hpp"
#include "potential.hpp"

using namespace cetm;

TEST_CASE("harmonic sampling: midpoint values on a uniform grid") {
  const auto p = SegmentedPotential::harmonic(-2.0, 2.0, 8);
  CHECK(p.segments() == 8);
  CHECK(p.boundary(0) == -2.0);
  CHECK(p.boundary(8) == 2.0);
  for (int j = 1; j <= 8; ++j) {
    CHECK(p.width(j) == doctest::Approx(0.5).epsilon(1e-15));
    const double mid = p.midpoint(j);
    CHECK(p.value(j) == doctest::Approx(0.5 * mid * mid).epsilon(1e-15));
  }
  CHECK(p.min_segment() == 4);  // ties break toward the first segment
  CHECK(p.min_value() == doctest::Approx(0.5 * 0.25 * 0.25));
}

TEST_CASE("finite well: edges land exactly on segment boundaries") {
  const auto p3 = SegmentedPotential::finite_well(10.0, 2.0, 8.0, 3);
  REQUIRE(p3.segments() == 3);
  CHECK(p3.boundary(0) == -9.0);
  CHECK(p3.boundary(1) == -1.0);
  CHECK(p3.boundary(2) == 1.0);
  CHECK(p3.boundary(3) == 9.0);
  CHECK(p3.value(1) == 10.0);
  CHECK(p3.value(2) == 0.0);
  CHECK(p3.value(3) == 10.0);

  // Any segment count keeps the discontinuities representable.
  for (int n : {7, 12, 31}) {
    const auto p = SegmentedPotential::finite_well(10.0, 2.0, 8.0, n);
    bool lo = false;
    bool hi = false;
    for (int i = 0; i <= p.segments(); ++i) {
      if (p.boundary(i) == -1.0) lo = true;
      if (p.boundary(i) == 1.0) hi = true;
    }
    CHECK(lo);
    CHECK(hi);
    for (int j = 1; j <= p.segments(); ++j)
      CHECK((p.value(j) == 0.0 || p.value(j) == 10.0));
  }
}

TEST_CASE("soft-core attraction: symmetric, deepest at the center") {
  const auto p = SegmentedPotential::hydrogen_soft_core(1.0, -3.0, 3.0, 6);
  const int mid = p.min_segment();
  CHECK(std::abs(p.midpoint(mid)) < 1.0);
  for (int j = 1; j <= 6; ++j) {
    const double x = p.midpoint(j);
    CHECK(p.value(j) ==
          doctest::Approx(-1.0 / (std::abs(x) + 1.0)).epsilon(1e-15));
    CHECK(p.value(j) == doctest::Approx(p.value(7 - j)).epsilon(1e-13));
  }
}

TEST_CASE("segment lookup and half-open intervals") {
  const auto p = SegmentedPotential::harmonic(-1.0, 1.0, 4);
  CHECK(p.segment_of(-1.0) == 1);
  CHECK(p.segment_of(-0.5) == 2);  // a boundary belongs to its right segment
  CHECK(p.segment_of(0.999) == 4);
  CHECK(p.segment_of(1.0) == 4);  // except the closing one
  CHECK_THROWS_AS((void)p.segment_of(1.0 + 1e-6), Error);
  CHECK_THROWS_AS((void)p.segment_of(-2.0), Error);
}

TEST_CASE("sample round trip is bit-exact") {
  const auto p = SegmentedPotential::hydrogen_soft_core(0.7, -3.0, 3.0, 11);
  const auto rebuilt = SegmentedPotential::from_samples(p.to_samples());
  REQUIRE(rebuilt.segments() == p.segments());
  for (int i = 0; i <= p.segments(); ++i)
    CHECK(rebuilt.boundary(i) == p.boundary(i));
  for (int j = 1; j <= p.segments(); ++j)
    CHECK(rebuilt.value(j) == p.value(j));

  const auto path = std::filesystem::temp_directory_path() / "cetm_pot.txt";
  p.save(path.string());
  const auto loaded = SegmentedPotential::load(path.string());
  REQUIRE(loaded.segments() == p.segments());
  for (int j = 1; j <= p.segments(); ++j)
    CHECK(loaded.value(j) == p.value(j));
  std::filesystem::remove(path);
}

TEST_CASE("construction rejects malformed input") {
  CHECK_THROWS_AS(SegmentedPotential({0.0, 1.0, 1.0}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(SegmentedPotential({0.0, 2.0, 1.0}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(SegmentedPotential({0.0, 1.0}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(SegmentedPotential({}, {}), Error);
  CHECK_THROWS_AS(SegmentedPotential::harmonic(-1.0, 1.0, 0), Error);
  CHECK_THROWS_AS(SegmentedPotential::harmonic(1.0, -1.0, 4), Error);
  CHECK_THROWS_AS(SegmentedPotential::finite_well(10.0, -2.0, 8.0, 3), Error);
  CHECK_THROWS_AS(SegmentedPotential::load("/nonexistent/path.txt"), Error);
}
