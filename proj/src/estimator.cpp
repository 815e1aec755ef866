#include "dualrate/estimator.hpp"

#include "dualrate/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dualrate {
namespace {

constexpr double kSettleSlack = 1e-9;

double antiderivative(const WaveletTable& table, bool father, double u) {
  return father ? table.phi_antiderivative(u) : table.psi_antiderivative(u);
}

double basis_value(const WaveletTable& table, bool father, double u) {
  return father ? table.phi(u) : table.psi(u);
}

// Adds the contributions of translates contributing at s for one dilation.
double level_sum(const LevelCoefficients& level, const WaveletTable& table, bool father,
                 double scale, double s, double threshold, bool thresholded, int level_index) {
  const double x = scale * s;
  const long lo = static_cast<long>(std::floor(x - table.upper())) + 1;
  const long hi = static_cast<long>(std::ceil(x - table.lower())) - 1;
  if (lo > hi) return 0.0;
  if (!level.contains(lo) || !level.contains(hi)) {
    throw Error(ErrorCategory::incomplete_window,
                "incomplete coefficient window at s=" + std::to_string(s) + " (" +
                    (father ? std::string("father") : "level " + std::to_string(level_index)) +
                    ", translates " + std::to_string(lo) + ".." + std::to_string(hi) + ")");
  }
  double acc = 0.0;
  for (long j = lo; j <= hi; ++j) {
    const double b = level.at(j);
    if (thresholded && !(std::abs(b) >= threshold)) continue;
    acc += b * basis_value(table, father, x - static_cast<double>(j));
  }
  return std::sqrt(scale) * acc;
}

void check_setting(int depth, double threshold, const CoefficientSet& coeffs) {
  if (depth < 1) throw Error(ErrorCategory::validation, "estimator depth q must be >= 1");
  if (!(threshold >= 0.0)) throw Error(ErrorCategory::validation, "threshold must be >= 0");
  if (depth > coeffs.levels()) {
    throw Error(ErrorCategory::incomplete_window,
                "estimator depth " + std::to_string(depth) + " exceeds the " +
                    std::to_string(coeffs.levels()) + " stored detail levels");
  }
}

}  // namespace

SampleStream::SampleStream(double xi) : xi_(xi) {
  if (!(xi > 0.0)) throw Error(ErrorCategory::validation, "grid edge xi must be positive");
}

SampleStream SampleStream::from_pairs(double xi, std::span<const std::pair<double, double>> pairs) {
  SampleStream stream(xi);
  for (const auto& [t, y] : pairs) {
    const double ratio = t / xi;
    const double k = std::round(ratio);
    if (std::abs(ratio - k) > 1e-12 * std::max(1.0, std::abs(ratio))) {
      throw Error(ErrorCategory::validation,
                  "sample time " + std::to_string(t) + " is not a multiple of xi");
    }
    stream.push(static_cast<long>(k), y);
  }
  return stream;
}

void SampleStream::push(long cell, double value) {
  if (!cells_.empty() && cell <= cells_.back()) {
    throw Error(ErrorCategory::sequencing, "sample cells must strictly increase (got " +
                                               std::to_string(cell) + " after " +
                                               std::to_string(cells_.back()) + ")");
  }
  cells_.push_back(cell);
  values_.push_back(value);
}

ImputedPath::ImputedPath(double xi) : xi_(xi) {
  if (!(xi > 0.0)) throw Error(ErrorCategory::validation, "grid edge xi must be positive");
}

void ImputedPath::extend(const SampleStream& stream, long cells) {
  for (long k = this->cells(); k < cells; ++k) {
    while (cursor_ < stream.size() && stream.cell(cursor_) <= k) ++cursor_;
    if (cursor_ == 0) {
      throw Error(ErrorCategory::no_antecedent,
                  "no-antecedent-sample: cell " + std::to_string(k) + " precedes every sample");
    }
    values_.push_back(stream.value(cursor_ - 1));
  }
}

ImputedPath impute(const SampleStream& stream, double horizon) {
  ImputedPath path(stream.xi());
  const auto cells = static_cast<long>(std::ceil(horizon / stream.xi() - 1e-9));
  path.extend(stream, std::max(0L, cells));
  return path;
}

double coefficient(const ImputedPath& path, const BasisIndex& index, const WaveletTable& table,
                   double p) {
  const bool father = index.is_father();
  const double scale = basis_scale(p, index);
  const auto shift = static_cast<double>(index.translate);
  const double xi = path.xi();
  const double lo = (table.lower() + shift) / scale;
  const double hi = (table.upper() + shift) / scale;

  const long first = std::max(0L, static_cast<long>(std::floor(lo / xi)));
  const long last = std::min(path.cells() - 1, static_cast<long>(std::ceil(hi / xi)) - 1);
  if (first > last) return 0.0;

  const double cell_width = scale * xi;
  double left = antiderivative(table, father, cell_width * static_cast<double>(first) - shift);
  double acc = 0.0;
  for (long m = first; m <= last; ++m) {
    const double right =
        antiderivative(table, father, cell_width * static_cast<double>(m + 1) - shift);
    acc += path[m] * (right - left);
    left = right;
  }
  return acc / std::sqrt(scale);
}

double coefficient_extended(const ImputedPath& path, const BasisIndex& index,
                            const WaveletTable& table, double p, TailExtension tail) {
  const double inside = coefficient(path, index, table, p);
  if (tail == TailExtension::zero || path.cells() == 0) return inside;
  const bool father = index.is_father();
  const double scale = basis_scale(p, index);
  const double u = scale * path.horizon() - static_cast<double>(index.translate);
  if (u >= table.upper()) return inside;
  const double total = father ? table.phi_antiderivative(table.upper()) : table.psi_antiderivative(table.upper());
  const double rest = total - antiderivative(table, father, std::max(u, table.lower()));
  return inside + path[path.cells() - 1] * rest / std::sqrt(scale);
}

CoefficientSet straddling_coefficients(const ImputedPath& path, const WaveletTable& table, double p,
                                       int levels, TailExtension tail) {
  CoefficientSet out(p, levels);
  const double t = path.horizon();
  for (int i = 0; i < levels; ++i) {
    const double scale = std::ldexp(p, i);
    auto& level = out.detail(i);
    level.first = static_cast<long>(std::floor(scale * t - table.upper())) + 1;
    const long last = static_cast<long>(std::ceil(scale * t - table.lower())) - 1;
    for (long j = level.first; j <= last; ++j) {
      level.values.push_back(coefficient_extended(path, BasisIndex::mother(i, j), table, p, tail));
    }
  }
  return out;
}

std::pair<long, long> translate_range(const WaveletTable& table, double scale,
                                      const Interval& window) {
  const long first = static_cast<long>(std::floor(scale * window.lo - table.upper())) + 1;
  const long last = static_cast<long>(std::ceil(scale * window.hi - table.lower())) - 1;
  return {first, last};
}

CoefficientSet::CoefficientSet(double p, int levels) : p_(p), detail_(static_cast<std::size_t>(levels)) {
  if (!(p > 0.0)) throw Error(ErrorCategory::validation, "primary level p must be positive");
  if (levels < 0) throw Error(ErrorCategory::validation, "level count must be >= 0");
}

std::optional<double> CoefficientSet::find(const BasisIndex& index) const {
  if (index.is_father()) {
    if (!father_.contains(index.translate)) return std::nullopt;
    return father_.at(index.translate);
  }
  if (index.level >= levels()) return std::nullopt;
  const auto& level = detail(index.level);
  if (!level.contains(index.translate)) return std::nullopt;
  return level.at(index.translate);
}

CoefficientSet compute_coefficients(const ImputedPath& path, const WaveletTable& table, double p,
                                    int levels, const Interval& window) {
  CoefficientSet coeffs(p, levels);
  auto fill = [&](LevelCoefficients& out, int level) {
    const BasisIndex probe{level, 0};
    const auto [first, last] = translate_range(table, basis_scale(p, probe), window);
    out.first = first;
    out.values.clear();
    for (long j = first; j <= last; ++j) {
      out.values.push_back(coefficient(path, BasisIndex{level, j}, table, p));
    }
  };
  fill(coeffs.father(), -1);
  for (int i = 0; i < levels; ++i) fill(coeffs.detail(i), i);
  return coeffs;
}

double reconstruct(const CoefficientSet& coeffs, int depth, double threshold, double s,
                   const WaveletTable& table) {
  check_setting(depth, threshold, coeffs);
  const double p = coeffs.primary_level();
  double value = level_sum(coeffs.father(), table, true, p, s, 0.0, false, -1);
  for (int i = 0; i < depth; ++i) {
    value += level_sum(coeffs.detail(i), table, false, std::ldexp(p, i), s, threshold, true, i);
  }
  return value;
}

Eigen::VectorXd reconstruct_on_grid(const CoefficientSet& coeffs, const WaveletTable& table,
                                    double xi, std::span<const EstimatorSetting> settings) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(settings.size()));
  for (std::size_t m = 0; m < settings.size(); ++m) {
    const auto& setting = settings[m];
    out[static_cast<Eigen::Index>(m)] =
        reconstruct(coeffs, setting.depth, setting.threshold, static_cast<double>(m) * xi, table);
  }
  return out;
}

double estimate_sigma(const SampleStream& prefix) {
  const std::size_t n = prefix.size();
  if (n < 50) {
    throw Error(ErrorCategory::calibration,
                "insufficient-calibration-data: " + std::to_string(n) +
                    " observations, at least 50 required");
  }
  double acc = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (prefix.cell(i) != prefix.cell(i - 1) + 1) {
      throw Error(ErrorCategory::validation,
                  "calibration prefix must be sampled on consecutive grid cells");
    }
    const double d = prefix.value(i) - prefix.value(i - 1);
    acc += d * d;
  }
  return std::sqrt(acc / (2.0 * static_cast<double>(n - 1)));
}

double optimal_primary_level(double rate, double sigma, double gamma2, double kappa, int order) {
  if (!(rate > 0.0) || !(sigma > 0.0) || !(gamma2 > 0.0) || !(kappa > 0.0) || order < 1) {
    throw Error(ErrorCategory::validation,
                "optimal_primary_level requires positive rate, sigma, gamma^2, kappa and order");
  }
  const double exponent = 1.0 / (2.0 * order + 1.0);
  return std::pow(kappa * sigma * sigma / gamma2, -exponent) * std::pow(rate, exponent);
}

SettledCoefficients::SettledCoefficients(const WaveletTable& table, double p, int levels,
                                         double start)
    : table_(&table), coeffs_(p, levels) {
  for (int i = 0; i < levels; ++i) {
    const double scale = std::ldexp(p, i);
    coeffs_.detail(i).first = static_cast<long>(std::ceil(scale * start - table.lower()));
  }
}

void SettledCoefficients::advance(const ImputedPath& path) {
  const double horizon = path.horizon();
  const double p = coeffs_.primary_level();
  for (int i = 0; i < coeffs_.levels(); ++i) {
    auto& level = coeffs_.detail(i);
    const double scale = std::ldexp(p, i);
    for (;;) {
      const long j = level.end();
      const double end_time = (table_->upper() + static_cast<double>(j)) / scale;
      if (end_time > horizon + kSettleSlack) break;
      level.values.push_back(coefficient(path, BasisIndex::mother(i, j), *table_, p));
    }
  }
}

}  // namespace dualrate
