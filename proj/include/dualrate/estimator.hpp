#pragma once

#include "dualrate/wavelet_basis.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dualrate {

/// Observations (T_i, Y_i) on a grid of edge xi. Times are held as integer
/// cell indices, strictly increasing.
class SampleStream {
 public:
  explicit SampleStream(double xi);

  /// Validates that every time is a multiple of xi (1e-12 relative) and that
  /// times strictly increase.
  static SampleStream from_pairs(double xi, std::span<const std::pair<double, double>> pairs);

  void push(long cell, double value);

  double xi() const { return xi_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  long cell(std::size_t i) const { return cells_[i]; }
  double time(std::size_t i) const { return static_cast<double>(cells_[i]) * xi_; }
  double value(std::size_t i) const { return values_[i]; }
  const std::vector<long>& cells() const { return cells_; }
  const std::vector<double>& values() const { return values_; }

 private:
  double xi_;
  std::vector<long> cells_;
  std::vector<double> values_;
};

/// Step path Z^t: cell k covers [k xi, (k+1) xi) and holds the datum of the
/// latest sample at or before k xi. Zero outside [0, horizon).
class ImputedPath {
 public:
  explicit ImputedPath(double xi);

  /// Extends the path to `cells` cells. Earlier cells are never altered.
  /// Throws Error{no_antecedent} if a cell precedes every sample.
  void extend(const SampleStream& stream, long cells);

  double xi() const { return xi_; }
  long cells() const { return static_cast<long>(values_.size()); }
  double horizon() const { return static_cast<double>(cells()) * xi_; }
  double operator[](long k) const {
    return k >= 0 && k < cells() ? values_[static_cast<std::size_t>(k)] : 0.0;
  }
  Eigen::Map<const Eigen::VectorXd> values() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

 private:
  double xi_;
  std::vector<double> values_;
  std::size_t cursor_ = 0;
};

ImputedPath impute(const SampleStream& stream, double horizon);

/// Father phi_j (level < 0) or mother psi_ij.
struct BasisIndex {
  int level = -1;
  long translate = 0;

  static BasisIndex father(long j) { return {-1, j}; }
  static BasisIndex mother(int i, long j) { return {i, j}; }
  bool is_father() const { return level < 0; }
};

/// Dilation of a basis function: p for fathers, 2^i p for mothers.
inline double basis_scale(double p, const BasisIndex& index) {
  return index.is_father() ? p : std::ldexp(p, index.level);
}

/// Integral of the step path against phi_j or psi_ij, accumulated cell by cell
/// with exact integrals of the interpolated basis function.
double coefficient(const ImputedPath& path, const BasisIndex& index, const WaveletTable& table,
                   double p);

/// Translates j whose support has interior overlap with `window` at dilation `scale`.
std::pair<long, long> translate_range(const WaveletTable& table, double scale,
                                      const Interval& window);

/// Contiguous run of coefficients at one level.
struct LevelCoefficients {
  long first = 0;
  std::vector<double> values;

  long end() const { return first + static_cast<long>(values.size()); }
  bool contains(long j) const { return j >= first && j < end(); }
  double at(long j) const { return values[static_cast<std::size_t>(j - first)]; }
};

/// Estimated father coefficients and detail coefficients at levels 0..levels-1.
class CoefficientSet {
 public:
  CoefficientSet(double p, int levels);

  double primary_level() const { return p_; }
  int levels() const { return static_cast<int>(detail_.size()); }

  LevelCoefficients& father() { return father_; }
  const LevelCoefficients& father() const { return father_; }
  LevelCoefficients& detail(int level) { return detail_[static_cast<std::size_t>(level)]; }
  const LevelCoefficients& detail(int level) const {
    return detail_[static_cast<std::size_t>(level)];
  }

  std::optional<double> find(const BasisIndex& index) const;

 private:
  double p_;
  LevelCoefficients father_;
  std::vector<LevelCoefficients> detail_;
};

/// All father and detail coefficients (levels 0..levels-1) whose support meets
/// (window.lo, window.hi).
CoefficientSet compute_coefficients(const ImputedPath& path, const WaveletTable& table, double p,
                                    int levels, const Interval& window);

/// Depth q and threshold delta of the hard-thresholded estimator at one time.
struct EstimatorSetting {
  int depth = 1;
  double threshold = 0.0;
};

/// ghat(s) = sum_j b_j phi_j(s) + sum_{i<q} sum_j b_ij 1(|b_ij| >= delta) psi_ij(s).
/// Throws Error{incomplete_window} when a coefficient whose support contains s
/// is absent.
double reconstruct(const CoefficientSet& coeffs, int depth, double threshold, double s,
                   const WaveletTable& table);

/// Evaluates the estimator at s_m = m xi for m = 0..settings.size()-1.
Eigen::VectorXd reconstruct_on_grid(const CoefficientSet& coeffs, const WaveletTable& table,
                                    double xi, std::span<const EstimatorSetting> settings);

/// First-difference noise estimate sigma^2 = sum (Y_{i+1} - Y_i)^2 / (2(n-1))
/// over samples on consecutive grid cells. Needs at least 50 observations.
double estimate_sigma(const SampleStream& prefix);

/// p = (kappa sigma^2 / gamma^2)^{-1/(2r+1)} rho^{1/(2r+1)}.
double optimal_primary_level(double rate, double sigma, double gamma2, double kappa, int order);

/// How Z^t continues past the current time when a coefficient straddles it.
enum class TailExtension {
  zero,  // Z^t as defined: zero beyond t
  hold,  // the last imputed datum carried forward
};

/// Like coefficient(), with the path beyond its horizon replaced by `tail`.
double coefficient_extended(const ImputedPath& path, const BasisIndex& index,
                            const WaveletTable& table, double p, TailExtension tail);

/// Detail coefficients at levels 0..levels-1 whose support straddles the path
/// horizon t, i.e. psi_ij(t) != 0 with data still missing beyond t.
CoefficientSet straddling_coefficients(const ImputedPath& path, const WaveletTable& table, double p,
                                       int levels, TailExtension tail);

/// Detail coefficients that become final once the path covers their support.
/// Only translates whose support starts at or after `start` are tracked, so
/// decisions never see the zero extension before the first observation.
class SettledCoefficients {
 public:
  SettledCoefficients(const WaveletTable& table, double p, int levels, double start = 0.0);

  /// Settles every tracked coefficient whose support ends by path.horizon().
  void advance(const ImputedPath& path);

  const CoefficientSet& coefficients() const { return coeffs_; }

 private:
  const WaveletTable* table_;
  CoefficientSet coeffs_;
};

}  // namespace dualrate
