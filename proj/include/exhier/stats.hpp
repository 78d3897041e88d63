#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace exhier {

struct TestReport {
  std::string name;
  double statistic = 0;
  double dof = 0;
  double threshold = 0;
  double p_value = 1;
  bool pass = true;
  std::map<std::string, std::string> witness;

  std::string text() const {
    std::ostringstream os;
    os << name << ": " << (pass ? "PASS" : "FAIL") << "  statistic=" << statistic << " dof=" << dof
       << " threshold=" << threshold << " p=" << p_value;
    for (const auto& [k, v] : witness) os << "  " << k << "=" << v;
    return os.str();
  }
  std::string machine() const {
    std::ostringstream os;
    os << "test=" << name << "\npass=" << (pass ? 1 : 0) << "\nstatistic=" << statistic << "\ndof=" << dof
       << "\nthreshold=" << threshold << "\np_value=" << p_value << "\n";
    for (const auto& [k, v] : witness) os << k << "=" << v << "\n";
    return os.str();
  }
};

class InsufficientCounts : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double chi_square_upper(double stat, double dof) {
  if (dof <= 0) return 1.0;
  boost::math::chi_squared d(dof);
  return boost::math::cdf(boost::math::complement(d, stat));
}

inline double chi_square_quantile(double significance, double dof) {
  if (dof <= 0) return 0.0;
  boost::math::chi_squared d(dof);
  return boost::math::quantile(boost::math::complement(d, significance));
}

using CountTable = std::map<std::string, std::uint64_t>;

// Two-sample chi-square; cells whose expected count falls below min_expected
// in either sample are pooled into one cell.
inline TestReport chi_square_two_sample(const CountTable& a, const CountTable& b, double significance,
                                        double min_expected = 5.0) {
  double na = 0, nb = 0;
  for (const auto& [k, c] : a) na += static_cast<double>(c);
  for (const auto& [k, c] : b) nb += static_cast<double>(c);
  if (na == 0 || nb == 0) throw InsufficientCounts("empty frequency table");
  std::map<std::string, std::pair<double, double>> cells;
  for (const auto& [k, c] : a) cells[k].first += static_cast<double>(c);
  for (const auto& [k, c] : b) cells[k].second += static_cast<double>(c);
  const double fa = na / (na + nb), fb = nb / (na + nb);
  std::vector<std::pair<double, double>> kept;
  std::pair<double, double> pooled{0, 0};
  std::size_t npooled = 0;
  for (const auto& [k, c] : cells) {
    double tot = c.first + c.second;
    if (tot * fa < min_expected || tot * fb < min_expected) {
      pooled.first += c.first;
      pooled.second += c.second;
      ++npooled;
    } else {
      kept.push_back(c);
    }
  }
  double ptot = pooled.first + pooled.second;
  if (npooled > 0 && ptot * std::min(fa, fb) >= min_expected) kept.push_back(pooled);
  else if (npooled > 0 && !kept.empty()) {
    kept.back().first += pooled.first;
    kept.back().second += pooled.second;
  }
  if (kept.empty()) throw InsufficientCounts("no cell reaches the expected-count floor");
  TestReport r;
  r.name = "chi_square_two_sample";
  for (const auto& [x, y] : kept) {
    double t = x + y;
    double ea = t * fa, eb = t * fb;
    r.statistic += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
  }
  r.dof = static_cast<double>(kept.size()) - 1;
  r.threshold = chi_square_quantile(significance, r.dof);
  r.p_value = chi_square_upper(r.statistic, r.dof);
  r.pass = r.p_value >= significance;
  r.witness["cells"] = std::to_string(kept.size());
  r.witness["pooled"] = std::to_string(npooled);
  return r;
}

// Goodness of fit against known cell probabilities, with the same pooling.
inline TestReport chi_square_gof(const CountTable& counts, const std::map<std::string, double>& probs, double significance,
                                 double min_expected = 5.0) {
  double n = 0;
  for (const auto& [k, c] : counts) n += static_cast<double>(c);
  if (n == 0) throw InsufficientCounts("empty frequency table");
  std::vector<std::pair<double, double>> kept;  // observed, expected
  std::pair<double, double> pooled{0, 0};
  std::size_t npooled = 0;
  double covered = 0;
  for (const auto& [k, p] : probs) {
    covered += p;
    double o = counts.count(k) ? static_cast<double>(counts.at(k)) : 0.0;
    if (n * p < min_expected) {
      pooled.first += o;
      pooled.second += n * p;
      ++npooled;
    } else {
      kept.emplace_back(o, n * p);
    }
  }
  double stray = 0;
  for (const auto& [k, c] : counts)
    if (!probs.count(k)) stray += static_cast<double>(c);
  TestReport r;
  r.name = "chi_square_gof";
  if (stray > 0) {
    // Outcomes with zero model probability reject outright.
    r.pass = false;
    r.p_value = 0;
    r.statistic = INFINITY;
    r.witness["stray"] = std::to_string(static_cast<std::uint64_t>(stray));
    return r;
  }
  pooled.second += n * std::max(0.0, 1.0 - covered);
  if (npooled > 0 || pooled.second > 0) {
    if (pooled.second >= min_expected || kept.empty()) kept.push_back(pooled);
    else {
      kept.back().first += pooled.first;
      kept.back().second += pooled.second;
    }
  }
  for (const auto& [o, e] : kept)
    if (e > 0) r.statistic += (o - e) * (o - e) / e;
  r.dof = static_cast<double>(kept.size()) - 1;
  r.threshold = chi_square_quantile(significance, r.dof);
  r.p_value = chi_square_upper(r.statistic, r.dof);
  r.pass = r.p_value >= significance;
  r.witness["cells"] = std::to_string(kept.size());
  return r;
}

// Asymptotic Kolmogorov distribution with the Stephens small-sample correction.
inline double kolmogorov_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = (sn + 0.12 + 0.11 / sn) * d;
  if (t < 1e-3) return 1.0;
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
    s += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

inline TestReport ks_uniform(std::vector<double> x, double significance) {
  if (x.empty()) throw InsufficientCounts("empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  TestReport r;
  r.name = "ks_uniform";
  r.statistic = d;
  r.dof = n;
  r.p_value = kolmogorov_pvalue(d, x.size());
  r.pass = r.p_value >= significance;
  return r;
}

struct MeanEstimate {
  double mean = 0, sd = 0, se = 0;
  std::size_t n = 0;
};

inline MeanEstimate mean_of(const std::vector<double>& x) {
  MeanEstimate m;
  m.n = x.size();
  if (x.empty()) return m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(m.n);
  double ss = 0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.sd = m.n > 1 ? std::sqrt(ss / static_cast<double>(m.n - 1)) : 0.0;
  m.se = m.sd / std::sqrt(static_cast<double>(m.n));
  return m;
}

inline double binomial_se(double p, std::size_t n) { return std::sqrt(std::max(p * (1 - p), 0.0) / static_cast<double>(n)); }

}  // namespace exhier
