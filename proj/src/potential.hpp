#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace cetm {

// Natural units throughout: hbar = 1, particle mass = 1.

/// Piecewise-constant 1D potential.  N segments over strictly increasing
/// boundaries x_0 < ... < x_N; segment i (1-based) covers [x_{i-1}, x_i) and
/// holds the constant value V_i.  Immutable after construction.
class SegmentedPotential {
 public:
  SegmentedPotential(std::vector<double> boundaries, std::vector<double> values,
                     std::string label = "custom");

  /// V(x) = x^2 / 2 sampled at segment midpoints over [xmin, xmax].
  static SegmentedPotential harmonic(double xmin, double xmax, int n_segments);

  /// Square well: V = 0 on |x| < width/2, V = depth on the padding regions.
  /// The well edges fall exactly on segment boundaries for any segment count.
  static SegmentedPotential finite_well(double depth, double width,
                                        double padding, int n_segments);

  /// Soft-core attractive Coulomb: V(x) = -1 / (|x| + softening), sampled at
  /// segment midpoints.
  static SegmentedPotential hydrogen_soft_core(double softening, double xmin,
                                               double xmax, int n_segments);

  /// Build from point samples (x_j, v_j): boundaries are the positions and
  /// each segment value is the mean of its two bracketing samples.
  static SegmentedPotential from_samples(
      const std::vector<std::pair<double, double>>& points);

  /// Parse a two-column text file ("x V" per line, '#' comments) and build
  /// via from_samples.
  static SegmentedPotential load(const std::string& path);

  /// Emit point samples that from_samples maps back onto this potential,
  /// boundaries and values bit-exact.
  std::vector<std::pair<double, double>> to_samples() const;

  /// Write to_samples() in the two-column text format.
  void save(const std::string& path) const;

  int segments() const { return static_cast<int>(values_.size()); }
  double boundary(int i) const { return boundaries_[static_cast<size_t>(i)]; }
  double value(int segment) const {
    return values_[static_cast<size_t>(segment - 1)];
  }
  double x_min() const { return boundaries_.front(); }
  double x_max() const { return boundaries_.back(); }
  double width(int segment) const {
    return boundaries_[static_cast<size_t>(segment)] -
           boundaries_[static_cast<size_t>(segment - 1)];
  }
  double midpoint(int segment) const {
    return 0.5 * (boundaries_[static_cast<size_t>(segment - 1)] +
                  boundaries_[static_cast<size_t>(segment)]);
  }
  const std::string& label() const { return label_; }

  /// 1-based index of the segment containing x; the closing boundary x_N maps
  /// to segment N.  Out-of-domain positions raise a range error.
  int segment_of(double x) const;

  double min_value() const;
  /// 1-based index of the first segment attaining the minimum value.
  int min_segment() const;

 private:
  std::vector<double> boundaries_;  // N + 1
  std::vector<double> values_;      // N
  std::string label_;
};

using PotentialPtr = std::shared_ptr<const SegmentedPotential>;

}  // namespace cetm
