#pragma once

#include <Eigen/Dense>

#include <string>

namespace dualrate {

enum class WaveletFamily { haar, daubechies };

/// Refinement (low-pass) filter of an orthonormal compactly supported wavelet.
/// Coefficients are normalised to sum to sqrt(2).
struct WaveletFilter {
  WaveletFamily family = WaveletFamily::daubechies;
  int order = 0;  // number of vanishing moments of psi
  Eigen::VectorXd coefficients;

  Eigen::Index length() const { return coefficients.size(); }
};

/// Extremal-phase Daubechies filter with `order` vanishing moments (1 <= order <= 10).
/// Order 1 is the Haar filter.
WaveletFilter daubechies_filter(int order);
WaveletFilter haar_filter();

/// Throws Error{validation} unless the filter has the normalisation, length and
/// quadrature-mirror orthogonality of an orthonormal wavelet filter.
void validate_filter(const WaveletFilter& filter);

/// Quadrature-mirror high-pass filter g_k = (-1)^k h_{L-1-k}.
Eigen::VectorXd highpass_filter(const WaveletFilter& filter);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double t) const { return lo <= t && t <= hi; }
  bool meets(const Interval& other) const { return lo <= other.hi && other.lo <= hi; }
};

/// Father and mother wavelets tabulated on a dyadic grid of step 2^-depth.
///
/// Values are stored on the canonical support [0, L-1]. Evaluation uses shifted
/// coordinates u = canonical - offset, so that the support is [a, b] with
/// a = -offset and b = L-1-offset. Between grid nodes the functions are the
/// piecewise-linear interpolant of the tabulation; outside [a, b] they are
/// exactly zero. Immutable after construction.
class WaveletTable {
 public:
  WaveletTable(WaveletFilter filter, int depth, int offset, Eigen::VectorXd phi,
               Eigen::VectorXd psi);

  const WaveletFilter& filter() const { return filter_; }
  int order() const { return filter_.order; }
  int depth() const { return depth_; }
  int offset() const { return offset_; }
  double step() const { return step_; }

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double width() const { return upper_ - lower_; }

  double phi(double u) const { return interpolate(phi_, u); }
  double psi(double u) const { return interpolate(psi_, u); }

  /// Integral of phi (resp. psi) over (-inf, u].
  double phi_antiderivative(double u) const { return antiderivative(phi_, phi_cumulative_, u); }
  double psi_antiderivative(double u) const { return antiderivative(psi_, psi_cumulative_, u); }

  /// Tabulated values at canonical abscissae k * step(), k = 0..n-1.
  const Eigen::VectorXd& phi_values() const { return phi_; }
  const Eigen::VectorXd& psi_values() const { return psi_; }
  Eigen::VectorXd abscissae() const;

 private:
  double interpolate(const Eigen::VectorXd& values, double u) const;
  double antiderivative(const Eigen::VectorXd& values, const Eigen::VectorXd& cumulative,
                        double u) const;

  WaveletFilter filter_;
  int depth_;
  int offset_;
  double step_;
  double lower_;
  double upper_;
  Eigen::VectorXd phi_;
  Eigen::VectorXd psi_;
  Eigen::VectorXd phi_cumulative_;
  Eigen::VectorXd psi_cumulative_;
};

struct CascadeOptions {
  double tolerance = 1e-10;
  int max_iterations = 60;
};

/// Tabulates phi and psi by iterating the two-scale refinement map on the dyadic
/// grid of step 2^-depth, starting from the unit box. Iteration stops once the
/// sup-norm change between sweeps drops below the tolerance; otherwise a
/// ConvergenceError carries the last residual.
///
/// `offset` shifts the support to [-offset, L-1-offset]; negative values select
/// the centred default offset = order - 1.
WaveletTable cascade_tabulate(const WaveletFilter& filter, int depth, int offset = -1,
                              CascadeOptions options = {});

/// p^{1/2} phi(p t - j).
double eval_father(const WaveletTable& table, double p, long j, double t);

/// p_i^{1/2} psi(p_i t - j) with p_i = 2^i p.
double eval_mother(const WaveletTable& table, double p, int level, long j, double t);

/// Closed support of phi_j.
Interval support_bounds(const WaveletTable& table, double p, long j);

/// Closed support of psi_ij.
Interval support_bounds(const WaveletTable& table, double p, int level, long j);

WaveletFamily parse_family(const std::string& name);

}  // namespace dualrate
