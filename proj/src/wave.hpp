#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "potential.hpp"
#include "scaled.hpp"

namespace cetm {

/// |2(E - V)| below this switches a segment to the exact linear basis.
inline constexpr double kDegenerateEps = 1e-12;

/// k = sqrt(2 (E - V)) on the branch with Im(k) >= 0, so e^{+ikx} decays to
/// the right inside a classically forbidden segment.
std::complex<double> wavenumber(double energy, double v);

bool is_degenerate(double energy, double v);

enum class Basis { plane, linear };

/// Per-segment wave data.  plane: psi(x) = (a e^{-ikx} + b e^{+ikx}) 2^s.
/// linear (E = V): psi(x) = (a + b x) 2^s.
struct SegmentWave {
  std::complex<double> a{0.0, 0.0};
  std::complex<double> b{0.0, 0.0};
  std::complex<double> k{0.0, 0.0};
  Basis basis = Basis::plane;
  std::int64_t scale_exp = 0;
};

struct Seed {
  enum class Mode { boundary_left, boundary_right, interior };

  Mode mode = Mode::boundary_right;
  int segment = 0;                   // interior mode only, 1-based
  std::complex<double> a{1.0, 0.0};  // interior amplitudes
  std::complex<double> b{0.0, 0.0};

  static Seed left() { return {Mode::boundary_left, 0, {1, 0}, {0, 0}}; }
  static Seed right() { return {Mode::boundary_right, 0, {0, 0}, {1, 0}}; }
  static Seed interior(int j, std::complex<double> b_j) {
    return {Mode::interior, j, {1, 0}, b_j};
  }
  /// Arbitrary amplitude pair, for superposition checks and tail tuning.
  static Seed interior_general(int j, std::complex<double> a_j,
                               std::complex<double> b_j) {
    return {Mode::interior, j, a_j, b_j};
  }
};

struct PropagateOptions {
  /// When false the running binary exponent is folded into the raw
  /// coefficients after every boundary, mimicking naive double arithmetic;
  /// overflow then raises an error instead of being absorbed.
  bool scaling = true;
};

/// Solve the 2x2 continuity system (psi, psi' shared at x_b) for the
/// neighbouring segment's coefficients.  Works in either sweep direction.
SegmentWave match_at_boundary(const SegmentWave& w, std::complex<double> k_next,
                              Basis next_basis, double x_b);

/// psi and psi' of one segment's wave at x, scale included.
ScaledComplex segment_value(const SegmentWave& w, double x);
ScaledComplex segment_derivative(const SegmentWave& w, double x);

/// Immutable propagated solution: one SegmentWave per segment at a fixed
/// energy, produced by sweeping the continuity conditions from the seed.
class WaveSolution {
 public:
  WaveSolution(PotentialPtr pot, double energy, Seed seed,
               std::vector<SegmentWave> waves)
      : pot_(std::move(pot)),
        energy_(energy),
        seed_(seed),
        waves_(std::move(waves)) {}

  const SegmentedPotential& potential() const { return *pot_; }
  const PotentialPtr& potential_ptr() const { return pot_; }
  double energy() const { return energy_; }
  const Seed& seed() const { return seed_; }
  const SegmentWave& wave(int segment) const {
    return waves_[static_cast<size_t>(segment - 1)];
  }

  ScaledComplex value(double x) const;
  ScaledComplex derivative(double x) const;

 private:
  PotentialPtr pot_;
  double energy_;
  Seed seed_;
  std::vector<SegmentWave> waves_;
};

/// Sweep the seed across every boundary.  Boundary seeds require the
/// outermost segment classically forbidden (E < V there); otherwise the tail
/// is oscillatory and divergence is undefined.
WaveSolution propagate(PotentialPtr pot, double energy, const Seed& seed,
                       const PropagateOptions& opt = {});

struct WaveSample {
  double x;
  ScaledComplex psi;
};

/// Uniform samples per segment including every boundary;
/// size = segments * points_per_segment + 1.
std::vector<WaveSample> sample_grid(const WaveSolution& sol,
                                    int points_per_segment);

/// max |H psi - E psi| / (|E| |psi|) over in-segment sample triples, with the
/// second derivative taken by central differences on the scaled values.
/// step <= 0 picks a per-segment step from the local wavenumber.
double hamiltonian_residual(const WaveSolution& sol, double step = 0.0);

/// k (|a|^2 - |b|^2) 4^s for a classically allowed segment, as
/// (mantissa, base-4 exponent is folded to base-2).  Probability flux up to a
/// constant; equal across allowed segments of one solution.
struct ScaledReal {
  double m = 0.0;
  std::int64_t e = 0;
};
ScaledReal segment_flux(const SegmentWave& w);

/// Peak amplitude over the classically allowed region (middle half of the
/// domain when no segment is allowed): log2 of max |psi| and its position.
struct InteriorStats {
  double log2_max;
  double x_peak;
};
InteriorStats interior_stats(const WaveSolution& sol,
                             int points_per_segment = 4);

}  // namespace cetm
