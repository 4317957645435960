#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "divergence.hpp"
#include "eigensolver.hpp"
#include "wave.hpp"

namespace cetm {

/// One node of the evaluation grid with the analytic derivative alongside,
/// so momentum integrals never touch finite differences.
struct GridSample {
  double x = 0.0;
  ScaledComplex psi;
  ScaledComplex dpsi;
};

/// Same node positions as sample_grid (segments * points_per_segment + 1).
std::vector<GridSample> analysis_samples(const WaveSolution& sol,
                                         int points_per_segment = 4);

/// Samples rescaled so the norm over [np_lo, np_hi] equals a caller-chosen
/// energy share; the factor is kept in mantissa/exponent form because raw
/// propagated amplitudes can sit thousands of binary orders away from 1.
struct NormalizedWave {
  std::vector<GridSample> samples;
  ScaledReal factor{1.0, 0};
  double np_lo = 0.0;
  double np_hi = 0.0;
};

/// Scale every sample so the trapezoidal norm of |psi|^2 over
/// [np_lo, np_hi] equals target_norm.  Fewer than two nodes in the window or
/// a zero norm is degenerate input.
NormalizedWave normalize_energy(std::vector<GridSample> samples,
                                double target_norm, double np_lo,
                                double np_hi);

/// Partition at x_d: the divergent side becomes DP, the rest NP; a node at
/// exactly x_d goes to NP.  Returns {np, dp}.
std::pair<std::vector<GridSample>, std::vector<GridSample>> split_np_dp(
    const std::vector<GridSample>& samples, double x_d, Side divergent_side);

/// Probability weight carried by the divergent part: |E - E_n| over the
/// larger of the two energies.  Both energies must be positive.
double dp_weight(double e, double e_n);

/// dp_weight times |k| at the divergence onset, without the fit coefficient.
double mean_momentum_dp_factor(double e, double e_n, double k_d);

/// The NP momentum integral on a finite window is generally complex; the
/// magnitude is the default sign-free reading, the parts stay selectable.
enum class PcMode { magnitude, real_part, imag_part };

/// Trapezoidal <psi|-i d/dx|psi> over the normalization window.
double mean_momentum_np(const NormalizedWave& nw,
                        PcMode mode = PcMode::magnitude);

enum class DetuneSide { above, below };

struct UncertaintyRecord {
  double e = 0.0;
  double e_n = 0.0;
  double delta_e = 0.0;  // |e - e_n|
  double x_d = 0.0;      // signed onset position
  double delta_x = 0.0;  // |x_d|
  double k_d = 0.0;      // |k| of the segment holding x_d
  double p_d_factor = 0.0;
  double p_c = 0.0;
  DetuneSide side = DetuneSide::above;
};

struct CollectOptions {
  double tau = 10.0;
  int points_per_segment = 4;
  std::int64_t tail_threshold_exp = 64;
  /// Onset-segment index shift before reading k_d, for sensitivity checks.
  int kd_segment_offset = 0;
  PcMode pc_mode = PcMode::magnitude;
  /// Solver tolerance the reference was produced with; sets how close to E_n
  /// the spanning guard may probe.
  double tol = 1e-12;
  int threads = 1;
};

struct CollectResult {
  std::vector<UncertaintyRecord> records;
  std::vector<std::string> warnings;
};

/// One record per detuning at E = E_n +- delta: propagate, classify, locate
/// the onset against the converged reference, and read the momentum terms.
/// The NP momentum is evaluated on the reference restricted to the NP window
/// (the normal part is by definition the region coinciding with the
/// convergent state; the detuned solution still carries its divergent
/// admixture right at the onset, whose boundary term would drown the
/// standing-wave momentum).  The window is further clipped to the
/// reference's trustworthy extent: a finite-tolerance reference lifts off
/// its own decay floor deep in the forbidden tails, and past the floor it
/// measures its residual error, not the state.  The clipped tails carry a
/// vanishing share of the norm, so the normalization is unaffected.
/// Detunings that span another eigenvalue, or fail to produce an onset, are
/// skipped with a warning.
CollectResult collect_uncertainty_dataset(const PotentialPtr& p,
                                          const EigenResult& reference,
                                          const std::vector<double>& detunings,
                                          DetuneSide side,
                                          const CollectOptions& options = {});

struct FitResult {
  double a = 0.0;
  /// Per-record |predicted / delta_E - 1|.
  std::vector<double> residuals;
  double median_rel_residual = 0.0;
  double median_log_residual = 0.0;
  int n_records = 0;
};

/// One-parameter least squares of log|delta_E| against
/// log(|a p_d_factor + p_c| / (2 delta_x)), golden-section over both sign
/// branches, constrained to coefficients every record's uncertainty
/// inequality accepts (the fit enforces near-equality from below; an
/// unconstrained optimum centers the residuals and leaves half the records
/// above the bound).
FitResult fit_uncertainty(const std::vector<UncertaintyRecord>& records);

/// delta_E * delta_x >= |a p_d_factor + p_c| / 2, with a 1e-6 relative
/// tolerance on the right side.
bool check_uncertainty_inequality(const UncertaintyRecord& rec, double a);

void write_dataset_csv(std::ostream& os,
                       const std::vector<UncertaintyRecord>& records);
std::string dataset_csv(const std::vector<UncertaintyRecord>& records);

}  // namespace cetm
