#pragma once

// Rank statistics and partial correlation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cogscore/error.hpp"

namespace cogscore {

/// Fractional ranks, 1-based; tied values share the mean of their positions.
struct RankVector {
  std::vector<double> ranks;
};

/// Square, symmetric matrix of named correlations with a unit diagonal.
struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  std::size_t sample_size = 0;

  double at(const std::string& a, const std::string& b) const {
    auto idx = [&](const std::string& n) {
      auto it = std::find(names.begin(), names.end(), n);
      if (it == names.end()) throw InputError("unknown matrix entry: " + n);
      return static_cast<std::size_t>(it - names.begin());
    };
    return values[idx(a)][idx(b)];
  }
};

/// Whether partial correlations use raw scores or their ranks.
enum class PartialMode { kRaw, kRank };

inline RankVector rank_transform(std::span<const double> x) {
  if (x.empty()) throw StatsError("rank_transform: empty input");
  for (double v : x) {
    if (std::isnan(v)) throw StatsError("rank_transform: NaN input");
  }
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

  RankVector out;
  out.ranks.assign(x.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // Positions i..j-1 (0-based) hold ranks i+1..j; their mean is (i+1+j)/2.
    const double shared = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) out.ranks[order[k]] = shared;
    i = j;
  }
  return out;
}

namespace detail {

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Product-moment correlation without the length >= 3 precondition.
inline double pearson_unchecked(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw StatsError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline void check_lengths(std::span<const double> x, std::span<const double> y,
                          std::size_t min_len, const char* what) {
  if (x.size() != y.size()) {
    throw StatsError(std::string(what) + ": length mismatch");
  }
  if (x.size() < min_len) {
    throw StatsError(std::string(what) + ": need at least " + std::to_string(min_len) +
                     " observations");
  }
}

}  // namespace detail

inline double pearson(std::span<const double> x, std::span<const double> y) {
  detail::check_lengths(x, y, 3, "pearson");
  return detail::pearson_unchecked(x, y);
}

/// Spearman correlation with tie correction: Pearson of the fractional ranks.
/// `min_len` may be lowered to 2 for agreement between short rating vectors.
inline double spearman(std::span<const double> x, std::span<const double> y,
                       std::size_t min_len = 3) {
  detail::check_lengths(x, y, min_len, "spearman");
  const RankVector rx = rank_transform(x);
  const RankVector ry = rank_transform(y);
  try {
    return detail::pearson_unchecked(rx.ranks, ry.ranks);
  } catch (const StatsError&) {
    throw StatsError("spearman: constant input");
  }
}

/// Correlation of `a` and `b` after regressing both on `controls` plus an intercept.
inline double partial_correlation(const std::map<std::string, std::vector<double>>& vars,
                                  const std::string& a, const std::string& b,
                                  const std::set<std::string>& controls) {
  auto series = [&](const std::string& name) -> const std::vector<double>& {
    auto it = vars.find(name);
    if (it == vars.end()) throw InputError("partial_correlation: unknown variable " + name);
    return it->second;
  };
  const auto& xa = series(a);
  const auto& xb = series(b);
  if (controls.empty()) return pearson(xa, xb);

  const std::size_t n = xa.size();
  if (xb.size() != n) throw StatsError("partial_correlation: length mismatch");
  if (n < controls.size() + 3) {
    throw StatsError("partial_correlation: need at least " +
                     std::to_string(controls.size() + 3) + " observations");
  }

  Eigen::MatrixXd design(static_cast<Eigen::Index>(n),
                         static_cast<Eigen::Index>(controls.size() + 1));
  design.col(0).setOnes();
  Eigen::Index col = 1;
  for (const auto& name : controls) {
    const auto& c = series(name);
    if (c.size() != n) throw StatsError("partial_correlation: length mismatch in " + name);
    design.col(col++) = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(n));
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    throw StatsError("partial_correlation: control variables are rank deficient");
  }

  auto residual = [&](const std::vector<double>& y, const std::string& name) {
    Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd r = yv - design * qr.solve(yv);
    const double scale = (yv.array() - yv.mean()).matrix().norm();
    if (scale == 0.0 || r.norm() <= 1e-10 * scale) {
      throw StatsError("partial_correlation: " + name +
                       " is a linear function of the controls (zero residual variance)");
    }
    return std::vector<double>(r.data(), r.data() + r.size());
  };
  const auto ra = residual(xa, a);
  const auto rb = residual(xb, b);
  return detail::pearson_unchecked(ra, rb);
}

/// Pairwise partial correlations, each controlling for every other named series.
inline CorrelationMatrix construct_partial_matrix(
    const std::vector<std::string>& names, const std::map<std::string, std::vector<double>>& series,
    PartialMode mode = PartialMode::kRaw) {
  if (names.size() < 2) throw InputError("partial matrix needs at least two constructs");

  std::map<std::string, std::vector<double>> vars;
  for (const auto& name : names) {
    auto it = series.find(name);
    if (it == series.end()) throw InputError("partial matrix: missing series " + name);
    vars[name] = mode == PartialMode::kRank ? rank_transform(it->second).ranks : it->second;
  }

  CorrelationMatrix m;
  m.names = names;
  m.sample_size = vars.at(names.front()).size();
  m.values.assign(names.size(), std::vector<double>(names.size(), 1.0));
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      std::set<std::string> controls;
      for (std::size_t k = 0; k < names.size(); ++k) {
        if (k != i && k != j) controls.insert(names[k]);
      }
      const double r = partial_correlation(vars, names[i], names[j], controls);
      m.values[i][j] = r;
      m.values[j][i] = r;
    }
  }
  return m;
}

}  // namespace cogscore
