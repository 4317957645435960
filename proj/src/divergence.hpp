#pragma once

#include <cstdint>
#include <optional>

#include "wave.hpp"

namespace cetm {

enum class Side { left, right };

/// Divergence classification of a propagated solution.  Signs are read from
/// the real part of the edge mantissa (the overflow-proof place to look) and
/// reported only for sides whose tail clears the threshold.
struct DivergenceReport {
  enum class Class { convergent, alpha, beta_plus, beta_minus };

  Class cls = Class::convergent;
  int sign_left = 0;   // +1 / -1, 0 = no divergent tail on that side
  int sign_right = 0;
  std::optional<double> x_d;  // filled by callers that hold a reference state
  std::int64_t tail_exponent = 0;  // log2 |Psi(edge)| - log2 max interior |Psi|
};

/// Label a solution convergent / alpha / beta+-.  A side counts as divergent
/// when its edge amplitude exceeds 2^tail_threshold_exp times the interior
/// peak.  Boundary-seeded solutions report only their free side (the seeded
/// tail is pure decay by construction).  Both outer segments must be
/// classically forbidden.
DivergenceReport classify(const WaveSolution& sol,
                          std::int64_t tail_threshold_exp = 64,
                          int points_per_segment = 4);

/// The bracketing function G(E): sign of the free-side edge value, with no
/// magnitude threshold; 0 only when the edge value is exactly zero.  For
/// interior seeds the b coefficient is retuned per energy to cancel the right
/// tail (the seed's own b would keep both tails divergent at every E and the
/// sign would never flip); the left edge then carries the sign.  This matches
/// the boundary-seed flip energies, which is what seed independence requires.
int divergence_sign(const PotentialPtr& p, double energy, const Seed& seed);

/// The b that cancels the right-edge value of an interior-seeded propagation
/// at this energy, collapsed to a double (clamped to the double range).
double tuned_interior_b(const PotentialPtr& p, double energy, int segment);

/// Precomputed scales of a reference eigenstate for onset detection:
/// everything is relative to the reference's own interior peak.
struct XdReference {
  double peak_log2;  // log2 max |Psi_ref| over classically allowed samples
  double dmax_log2;  // log2 max |Psi_ref'| over the whole domain
};

XdReference make_xd_reference(const WaveSolution& reference,
                              int points_per_segment = 4);

/// Divergence-onset position: walk the sample grid outward from the interior
/// peak and return the first x where |Psi'| >= tau * D_ref, both sides
/// normalized by their own interior peak and D_ref taken over the whole
/// domain of the reference.  log2-linear interpolation between samples.
/// Boundary-seeded solutions scan their free side; interior-seeded solutions
/// scan both sides and keep the crossing closer to x = 0.  Derivatives come
/// from the per-segment coefficients, not finite differences.
double detect_xd(const WaveSolution& sol, const XdReference& reference,
                 double tau = 10.0, int points_per_segment = 4);

double detect_xd(const WaveSolution& sol, const WaveSolution& reference,
                 double tau = 10.0, int points_per_segment = 4);

}  // namespace cetm
