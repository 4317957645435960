#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "divergence.hpp"
#include "wave.hpp"

namespace cetm {

struct SolverOptions {
  double tol = 1e-12;
  std::int64_t tail_threshold_exp = 64;
  int points_per_segment = 4;
  /// Probe offset for verification; 0 picks 1000 * tol, clamped below a
  /// quarter of the gap to neighboring results when a spectrum provides one.
  double verify_epsilon = 0.0;
  int threads = 1;
};

/// Sign value stored in SpectrumScan when G could not be evaluated at a grid
/// point (e.g. the energy reached an oscillatory domain edge).
inline constexpr int kInvalidSign = 2;

struct EnergyBracket {
  double lo = 0.0;
  double hi = 0.0;
  int sign_lo = 0;  // 0 on a zero-width bracket (grid point hit G == 0)
  int sign_hi = 0;
};

struct SpectrumScan {
  std::vector<double> grid;
  std::vector<int> signs;
  std::vector<EnergyBracket> brackets;
};

/// Evaluate G on a uniform grid of `steps` intervals (steps + 1 points) and
/// record every adjacent opposite-sign pair as a bracket.  Grid points where
/// G fails its preconditions are stored as kInvalidSign and never bracket.
SpectrumScan scan(PotentialPtr p, double e_min, double e_max, int steps,
                  const Seed& seed, const SolverOptions& options = {});

struct EigenResult {
  double energy = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int iterations = 0;
  std::int64_t tail_exponent = 0;  // classify() excess at the solution
  bool verified = false;           // set by spectrum(); bisect leaves false
  std::shared_ptr<const WaveSolution> wave;
};

/// Sign bisection on G until the bracket width is <= tol; the result energy
/// is the final midpoint.  A zero-width bracket is returned as-is.  Interior
/// seeds store the wavefunction propagated with the per-energy tuned b.
EigenResult bisect(PotentialPtr p, const EnergyBracket& bracket,
                   const Seed& seed, const SolverOptions& options = {});

/// scan + bisect + verify, ordered by energy.
std::vector<EigenResult> spectrum(PotentialPtr p, double e_min, double e_max,
                                  int steps, const Seed& seed,
                                  const SolverOptions& options = {});

/// True iff G(e_n - eps) and G(e_n + eps) disagree.  Spanning another state
/// is detected with inner probes at eps/1024 and raises
/// unreliable_verification; the inner probes are skipped when eps/1024 falls
/// below 16 * tol, where the flip position itself is not resolved.
bool verify_cs(PotentialPtr p, double e_n, double epsilon, const Seed& seed,
               const SolverOptions& options = {});

struct SelfTuneResult {
  bool convergent = false;
  double b = 0.0;
  /// Signed onset position at the optimum; +infinity when convergent.
  double x_d = 0.0;
};

/// Maximize |x_d| over real b for an interior seed at fixed energy:
/// coarse sign-symmetric log scan, then golden-section around the best
/// candidate.  Finding a b with no divergence onset reports convergence.
/// The reference scale comes from the nearest converged state.
SelfTuneResult self_tune_bj(PotentialPtr p, double energy, int segment,
                            double tau = 10.0,
                            const SolverOptions& options = {});

/// Eigenstate nearest to `energy`: expanding scan windows around it, then
/// bisect the bracket whose midpoint lies closest.  no_result when nothing
/// converges within the widest window.
EigenResult solve_nearest(PotentialPtr p, double energy, const Seed& seed,
                          const SolverOptions& options = {});

}  // namespace cetm
