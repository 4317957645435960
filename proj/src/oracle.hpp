#pragma once

#include <functional>
#include <vector>

#include "eigensolver.hpp"
#include "potential.hpp"

namespace cetm::oracle {

// Independent verification backends.  Nothing here reuses the transfer-based
// solver machinery; agreement between the two stacks is the whole point.

enum class Method { numerov, analytic_harmonic, analytic_well };

struct OracleResult {
  double eigenvalue = 0.0;
  Method method = Method::numerov;
  double grid_step = 0.0;  // 0 for closed-form results
  int nodes = 0;           // grid nodes used, 0 for closed-form results
};

/// Numerov shooting eigenvalue: integrate from both domain edges on a uniform
/// grid sampling the segmented potential, match log-derivatives at the node
/// nearest the midpoint of the first minimum-value segment, and bisect the
/// scaled Wronskian mismatch over [bracket_lo, bracket_hi] down to tol.
/// The requested step is rounded so the grid spans the domain exactly.
OracleResult numerov_eigen(const SegmentedPotential& p, double bracket_lo,
                           double bracket_hi, double grid_step = 1e-3,
                           double tol = 1e-10);

struct HarmonicLevel {
  double energy = 0.0;
  /// Normalized Hermite-Gaussian eigenfunction, stable for large n.
  std::function<double(double)> psi;
};

/// Closed-form harmonic oscillator level n (E = n + 1/2, hbar = m = omega = 1).
HarmonicLevel analytic_harmonic(int n);

/// All bound-state energies of the square well (V = 0 inside a well of the
/// given width, V = depth outside): roots of the even/odd matching conditions
/// on (0, depth), by dense scan plus bisection to 1e-12.
std::vector<double> analytic_finite_well(double depth, double width);

struct Comparison {
  double cetm = 0.0;
  double oracle = 0.0;
  double abs_diff = 0.0;
  double rel_diff = 0.0;
  bool pass = false;
};

/// Absolute and relative disagreement between the two backends; pass iff the
/// absolute difference stays within tol.
Comparison compare(const EigenResult& cetm, const OracleResult& oracle,
                   double tol);

}  // namespace cetm::oracle
