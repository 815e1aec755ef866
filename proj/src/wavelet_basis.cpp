#include "dualrate/wavelet_basis.hpp"

#include "dualrate/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace dualrate {
namespace {

Eigen::VectorXd cumulative_trapezoid(const Eigen::VectorXd& values, double step) {
  Eigen::VectorXd cumulative(values.size());
  double acc = 0.0;
  cumulative[0] = 0.0;
  for (Eigen::Index k = 1; k < values.size(); ++k) {
    acc += 0.5 * step * (values[k - 1] + values[k]);
    cumulative[k] = acc;
  }
  return cumulative;
}

// One sweep of the refinement map f(t) <- sqrt(2) sum_k c_k src(2t - k) on the
// grid t = m / 2^depth. The argument 2t - k lands on the same grid.
void refine(const Eigen::VectorXd& coefficients, const Eigen::VectorXd& src, long scale,
            Eigen::VectorXd& dst) {
  const long n = static_cast<long>(src.size());
  const double root2 = std::sqrt(2.0);
  for (long m = 0; m < n; ++m) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < coefficients.size(); ++k) {
      const long idx = 2 * m - static_cast<long>(k) * scale;
      if (idx < 0) break;
      if (idx < n) acc += coefficients[k] * src[idx];
    }
    dst[m] = root2 * acc;
  }
}

}  // namespace

WaveletTable::WaveletTable(WaveletFilter filter, int depth, int offset, Eigen::VectorXd phi,
                           Eigen::VectorXd psi)
    : filter_(std::move(filter)),
      depth_(depth),
      offset_(offset),
      step_(std::ldexp(1.0, -depth)),
      lower_(-static_cast<double>(offset)),
      upper_(static_cast<double>(filter_.length() - 1 - offset)),
      phi_(std::move(phi)),
      psi_(std::move(psi)) {
  phi_cumulative_ = cumulative_trapezoid(phi_, step_);
  psi_cumulative_ = cumulative_trapezoid(psi_, step_);
}

Eigen::VectorXd WaveletTable::abscissae() const {
  return Eigen::VectorXd::LinSpaced(phi_.size(), 0.0, static_cast<double>(filter_.length() - 1));
}

double WaveletTable::interpolate(const Eigen::VectorXd& values, double u) const {
  if (!(u >= lower_ && u <= upper_)) return 0.0;
  const double x = (u - lower_) / step_;
  const auto last = values.size() - 1;
  auto k = static_cast<Eigen::Index>(x);
  if (k >= last) return values[last];
  const double frac = x - static_cast<double>(k);
  return values[k] + frac * (values[k + 1] - values[k]);
}

double WaveletTable::antiderivative(const Eigen::VectorXd& values,
                                    const Eigen::VectorXd& cumulative, double u) const {
  if (u <= lower_) return 0.0;
  const auto last = values.size() - 1;
  if (u >= upper_) return cumulative[last];
  const double x = (u - lower_) / step_;
  auto k = static_cast<Eigen::Index>(x);
  if (k >= last) return cumulative[last];
  const double frac = x - static_cast<double>(k);
  const double slope = values[k + 1] - values[k];
  return cumulative[k] + step_ * frac * (values[k] + 0.5 * frac * slope);
}

WaveletTable cascade_tabulate(const WaveletFilter& filter, int depth, int offset,
                              CascadeOptions options) {
  validate_filter(filter);
  if (depth < 1 || depth > 20) {
    throw Error(ErrorCategory::validation,
                "tabulation depth must lie in [1, 20], got " + std::to_string(depth));
  }
  if (offset < 0) offset = filter.order - 1;
  if (offset > filter.length() - 1) {
    throw Error(ErrorCategory::validation, "support offset exceeds the support width");
  }

  const long scale = 1L << depth;
  const long support = static_cast<long>(filter.length()) - 1;
  const long n = support * scale + 1;

  // Unit box on [0, 1): the integer samples already sum to one.
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
  phi.head(scale).setOnes();
  Eigen::VectorXd next(n);

  double residual = 0.0;
  int iteration = 0;
  for (; iteration < options.max_iterations; ++iteration) {
    refine(filter.coefficients, phi, scale, next);
    residual = (next - phi).lpNorm<Eigen::Infinity>();
    phi.swap(next);
    if (residual < options.tolerance) break;
  }
  if (!(residual < options.tolerance)) {
    std::ostringstream msg;
    msg << "cascade did not converge after " << options.max_iterations
        << " iterations (last sup-norm change " << residual << ")";
    throw ConvergenceError(msg.str(), residual, options.max_iterations);
  }

  Eigen::VectorXd psi(n);
  refine(highpass_filter(filter), phi, scale, psi);
  return WaveletTable(filter, depth, offset, std::move(phi), std::move(psi));
}

double eval_father(const WaveletTable& table, double p, long j, double t) {
  return std::sqrt(p) * table.phi(p * t - static_cast<double>(j));
}

double eval_mother(const WaveletTable& table, double p, int level, long j, double t) {
  const double pi = std::ldexp(p, level);
  return std::sqrt(pi) * table.psi(pi * t - static_cast<double>(j));
}

Interval support_bounds(const WaveletTable& table, double p, long j) {
  const auto shift = static_cast<double>(j);
  return {(table.lower() + shift) / p, (table.upper() + shift) / p};
}

Interval support_bounds(const WaveletTable& table, double p, int level, long j) {
  return support_bounds(table, std::ldexp(p, level), j);
}

WaveletFamily parse_family(const std::string& name) {
  if (name == "haar") return WaveletFamily::haar;
  if (name == "daub" || name == "daubechies" || name == "db") return WaveletFamily::daubechies;
  throw Error(ErrorCategory::validation, "unknown wavelet family '" + name + "'");
}

}  // namespace dualrate
