#ifndef QUALGATE_STATS_HPP_
#define QUALGATE_STATS_HPP_

// Ordinary least squares with classical inference, Pearson correlation, the
// two-sample Kolmogorov-Smirnov test and a few descriptive helpers.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qualgate/errors.hpp"
#include "qualgate/special.hpp"

namespace qualgate {

// ---------------------------------------------------------------------------
// Significance stars: *p < 0.05, **p < 0.01, ***p < 0.001

inline std::string_view significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

/// Fixed-point coefficient followed by its stars, e.g. "−0.069***". Negative
/// values use U+2212 when `unicode_minus` is set, matching published tables.
inline std::string format_coefficient(double estimate, double p_value,
                                      int digits = 3, bool unicode_minus = true) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, std::fabs(estimate));
  std::string body = buf;
  // A value that rounds to zero prints unsigned.
  const bool negative =
      estimate < 0.0 && body.find_first_not_of("0.") != std::string::npos;
  std::string out;
  if (negative) out = unicode_minus ? "−" : "-";
  out += body;
  out += significance_stars(p_value);
  return out;
}

// ---------------------------------------------------------------------------
// OLS

/// Regressors for one fit. Values are stored column-major.
struct DesignMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> column_labels;
  std::vector<std::vector<double>> columns;
  bool intercept = true;

  std::size_t rows() const { return row_labels.size(); }

  void add_column(std::string name, std::vector<double> values) {
    if (values.size() != row_labels.size())
      throw ConfigError("column '" + name + "' has " +
                        std::to_string(values.size()) + " values, expected " +
                        std::to_string(row_labels.size()));
    column_labels.push_back(std::move(name));
    columns.push_back(std::move(values));
  }
};

struct Coefficient {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;

  std::string_view stars() const { return significance_stars(p_value); }
};

struct RegressionResult {
  std::vector<Coefficient> coefficients;  // intercept first when present
  double r2 = 0.0;
  double adj_r2 = 0.0;
  std::size_t n_obs = 0;
  std::size_t dof = 0;
  bool intercept = true;

  const Coefficient& at(std::string_view name) const {
    for (const auto& c : coefficients)
      if (c.name == name) return c;
    throw ConfigError("no coefficient named '" + std::string(name) + "'");
  }
};

inline constexpr std::string_view kInterceptName = "Intercept";

/// Least squares via Householder QR. Standard errors are the classical
/// sigma^2 (X'X)^-1 with sigma^2 = RSS / (n - p); p-values are two-sided
/// from Student-t with n - p degrees of freedom.
inline RegressionResult ols_fit(const DesignMatrix& X, std::span<const double> y) {
  const std::size_t n = X.rows();
  if (y.size() != n)
    throw ConfigError("response has " + std::to_string(y.size()) +
                      " values, design has " + std::to_string(n) + " rows");
  for (double v : y)
    if (!std::isfinite(v)) throw NumericError("response contains non-finite values");

  std::vector<std::string> names;
  std::vector<std::vector<double>> a;  // working columns
  if (X.intercept) {
    names.emplace_back(kInterceptName);
    a.emplace_back(n, 1.0);
  }
  for (std::size_t c = 0; c < X.columns.size(); ++c) {
    for (double v : X.columns[c])
      if (!std::isfinite(v))
        throw NumericError("column '" + X.column_labels[c] +
                           "' contains missing or non-finite values");
    names.push_back(X.column_labels[c]);
    a.push_back(X.columns[c]);
  }
  const std::size_t p = a.size();
  if (p == 0) throw ConfigError("design matrix has no columns");
  if (n <= p)
    throw NumericError("need more observations than columns (n=" +
                       std::to_string(n) + ", p=" + std::to_string(p) + ")");

  // Householder QR, in place. After step j, a[j][j..] holds R's diagonal in
  // rdiag[j] and the reflector below it.
  std::vector<double> qty(y.begin(), y.end());
  std::vector<double> rdiag(p);
  for (std::size_t j = 0; j < p; ++j) {
    auto& col = a[j];
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm = std::hypot(norm, col[i]);
    if (norm == 0.0) {
      rdiag[j] = 0.0;
      continue;
    }
    const double alpha = col[j] > 0.0 ? -norm : norm;
    // v = x - alpha e1, stored in col[j..]; H = I - 2 v v' / (v'v)
    col[j] -= alpha;
    double vtv = 0.0;
    for (std::size_t i = j; i < n; ++i) vtv += col[i] * col[i];
    auto reflect = [&](std::vector<double>& target) {
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += col[i] * target[i];
      const double scale = 2.0 * dot / vtv;
      for (std::size_t i = j; i < n; ++i) target[i] -= scale * col[i];
    };
    for (std::size_t k = j + 1; k < p; ++k) reflect(a[k]);
    reflect(qty);
    rdiag[j] = alpha;
  }
  auto r = [&](std::size_t i, std::size_t j) { return i == j ? rdiag[j] : a[j][i]; };

  double rmax = 0.0;
  for (double d : rdiag) rmax = std::max(rmax, std::fabs(d));
  std::vector<std::string> dependent;
  for (std::size_t j = 0; j < p; ++j)
    if (!(std::fabs(rdiag[j]) > 1e-10 * rmax)) dependent.push_back(names[j]);
  if (!dependent.empty()) {
    std::string list;
    for (const auto& d : dependent) list += (list.empty() ? "" : ", ") + d;
    throw NumericError("design matrix is rank deficient; linearly dependent "
                       "column(s): " + list);
  }

  std::vector<double> beta(p);
  for (std::size_t jj = p; jj-- > 0;) {
    double s = qty[jj];
    for (std::size_t k = jj + 1; k < p; ++k) s -= r(jj, k) * beta[k];
    beta[jj] = s / r(jj, jj);
  }

  // R^-1, upper triangular, by columns.
  std::vector<std::vector<double>> rinv(p, std::vector<double>(p, 0.0));
  for (std::size_t col = 0; col < p; ++col) {
    for (std::size_t i = col + 1; i-- > 0;) {
      double s = (i == col) ? 1.0 : 0.0;
      for (std::size_t k = i + 1; k <= col; ++k) s -= r(i, k) * rinv[k][col];
      rinv[i][col] = s / r(i, i);
    }
  }

  // Residuals against the original design.
  double rss = 0.0;
  double y_mean = 0.0;
  for (double v : y) y_mean += v;
  y_mean /= static_cast<double>(n);
  double tss = 0.0;
  double yy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fitted = X.intercept ? beta[0] : 0.0;
    const std::size_t offset = X.intercept ? 1 : 0;
    for (std::size_t c = 0; c < X.columns.size(); ++c)
      fitted += beta[c + offset] * X.columns[c][i];
    const double e = y[i] - fitted;
    rss += e * e;
    tss += (y[i] - y_mean) * (y[i] - y_mean);
    yy += y[i] * y[i];
  }
  if (X.intercept && tss == 0.0)
    throw NumericError("dependent variable has zero variance");

  RegressionResult out;
  out.n_obs = n;
  out.dof = n - p;
  out.intercept = X.intercept;
  const double sigma2 = rss / static_cast<double>(out.dof);
  for (std::size_t j = 0; j < p; ++j) {
    double v = 0.0;
    for (std::size_t k = j; k < p; ++k) v += rinv[j][k] * rinv[j][k];
    Coefficient c;
    c.name = names[j];
    c.estimate = beta[j];
    c.std_error = std::sqrt(sigma2 * v);
    if (c.std_error > 0.0) {
      c.t_stat = c.estimate / c.std_error;
      c.p_value = special::t_two_sided_p(c.t_stat, static_cast<double>(out.dof));
    } else {
      // Exact fit: any nonzero estimate is infinitely significant.
      c.t_stat = c.estimate == 0.0 ? 0.0
                                   : std::copysign(
                                         std::numeric_limits<double>::infinity(),
                                         c.estimate);
      c.p_value = c.estimate == 0.0 ? 1.0 : 0.0;
    }
    out.coefficients.push_back(std::move(c));
  }

  const double nd = static_cast<double>(n);
  if (X.intercept) {
    const double k = static_cast<double>(p - 1);
    out.r2 = 1.0 - rss / tss;
    out.adj_r2 = 1.0 - (1.0 - out.r2) * (nd - 1.0) / (nd - k - 1.0);
  } else {
    out.r2 = yy > 0.0 ? 1.0 - rss / yy : 0.0;
    out.adj_r2 = 1.0 - (1.0 - out.r2) * nd / (nd - static_cast<double>(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pearson correlation

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

inline CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ConfigError("pearson: vectors differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw NumericError("pearson: need at least 3 observations");
  const double nd = static_cast<double>(n);
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nd;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / nd;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw NumericError("pearson: zero variance input");

  CorrelationResult out;
  out.n = n;
  out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::fabs(out.r) == 1.0) {
    out.p_value = 0.0;
  } else {
    const double t = out.r * std::sqrt((nd - 2.0) / (1.0 - out.r * out.r));
    out.p_value = special::t_two_sided_p(t, nd - 2.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov

struct KsResult {
  double d_stat = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/// Kolmogorov limiting survival function Q(lambda) =
/// 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Dual theta series, which converges fast for small lambda.
    const double a = -M_PI * M_PI / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(a * odd * odd);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * M_PI) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n1 -
                              static_cast<double>(j) / n2));
  }
  return d;
}

/// Two-sided test with the asymptotic p-value.
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw NumericError("ks_two_sample: empty sample");
  for (double v : a)
    if (std::isnan(v)) throw NumericError("ks_two_sample: NaN in sample");
  for (double v : b)
    if (std::isnan(v)) throw NumericError("ks_two_sample: NaN in sample");

  KsResult out;
  out.n1 = a.size();
  out.n2 = b.size();
  out.d_stat = ks_statistic({a.begin(), a.end()}, {b.begin(), b.end()});
  const double n1 = static_cast<double>(out.n1);
  const double n2 = static_cast<double>(out.n2);
  const double ne = n1 * n2 / (n1 + n2);
  const double sq = std::sqrt(ne);
  const double lambda = (sq + 0.12 + 0.11 / sq) * out.d_stat;
  out.p_value = kolmogorov_q(lambda);
  return out;
}

// ---------------------------------------------------------------------------
// Transforms and descriptive statistics

/// log2 of every value. Values <= 0 or below `floor` are rejected, with the
/// offending row ids in the message.
inline std::vector<double> log2_transform(std::span<const double> values,
                                          std::span<const std::string> row_ids,
                                          double floor) {
  if (!(floor > 0.0)) throw ConfigError("log2_transform floor must be > 0");
  std::vector<double> out;
  out.reserve(values.size());
  std::string non_positive, below;
  auto id = [&](std::size_t i) {
    return i < row_ids.size() ? row_ids[i] : "#" + std::to_string(i);
  };
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(v > 0.0)) {
      non_positive += (non_positive.empty() ? "" : ", ") + id(i);
    } else if (v < floor) {
      below += (below.empty() ? "" : ", ") + id(i);
    }
    out.push_back(std::log2(v));
  }
  if (!non_positive.empty())
    throw NumericError("log2 of non-positive value in row(s): " + non_positive);
  if (!below.empty())
    throw NumericError("value below floor " + std::to_string(floor) +
                       " in row(s): " + below);
  return out;
}

/// Equal-width bins over [lo, hi]; the last bin is closed on the right.
inline std::vector<std::size_t> histogram(std::span<const double> values,
                                          std::size_t bins = 20, double lo = 0.0,
                                          double hi = 1.0) {
  std::vector<std::size_t> counts(bins, 0);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    if (!(v >= lo && v <= hi))
      throw NumericError("histogram value " + std::to_string(v) +
                         " outside [" + std::to_string(lo) + ", " +
                         std::to_string(hi) + "]");
    auto bin = static_cast<std::size_t>((v - lo) / width);
    counts[std::min(bin, bins - 1)]++;
  }
  return counts;
}

/// Linear-interpolation quantile of sorted data (the "type 7" definition).
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw NumericError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace qualgate

#endif  // QUALGATE_STATS_HPP_
