// Statistics of recorded receiver signals: scintillation index, normalized
// histogram and a Gaussian fit with its Kolmogorov-Smirnov distance.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uvmci/fading_pdf.hpp"

namespace uvmci {

inline constexpr std::size_t kMinMeasurementSamples = 100;

/// Receiver samples with optional time stamps (empty when the log has one column).
struct MeasurementLog {
  std::vector<double> time;
  std::vector<double> value;
};

/// Reads one- or two-column numeric text (whitespace or comma separated).
/// Blank lines and `#` comments are skipped, as is a non-numeric first line.
inline MeasurementLog parse_measurements(std::istream& in) {
  MeasurementLog log;
  std::string line;
  int lineno = 0;
  std::size_t columns = 0;
  bool any_data = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    bool numeric = true;
    while (fields >> tok) {
      double v = 0.0;
      const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (!any_data && lineno == 1) continue;  // column header
      throw std::invalid_argument("measurements line " + std::to_string(lineno) + ": non-numeric field '" + tok + "'");
    }
    if (row.empty()) continue;
    if (row.size() > 2)
      throw std::invalid_argument("measurements line " + std::to_string(lineno) + ": expected 1 or 2 columns");
    if (columns == 0) columns = row.size();
    if (row.size() != columns)
      throw std::invalid_argument("measurements line " + std::to_string(lineno) + ": inconsistent column count");
    any_data = true;
    if (columns == 2) log.time.push_back(row[0]);
    log.value.push_back(row.back());
  }
  return log;
}

struct HistogramBin {
  double lo;
  double hi;
  double density;
};

struct MeasurementStats {
  std::size_t count = 0;
  double mean = 0.0;
  double scintillation_index = 0.0;  // E[R^2] / E[R]^2 - 1
  DistributionFit gaussian;          // fitted to the mean-normalized samples
  std::vector<HistogramBin> histogram;
};

/// Kolmogorov-Smirnov distance between samples and N(mu, sigma^2).
inline double ks_distance_gaussian(std::vector<double> x, double mu, double sigma) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = sigma > 0.0 ? detail::std_normal_cdf((x[i] - mu) / sigma) : (x[i] >= mu ? 1.0 : 0.0);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline MeasurementStats analyze_measurements(std::span<const double> values, std::size_t bins = 50) {
  if (values.size() < kMinMeasurementSamples)
    throw std::invalid_argument("analyze_measurements: need at least " + std::to_string(kMinMeasurementSamples) +
                                " samples, got " + std::to_string(values.size()));
  if (bins < 1) throw std::invalid_argument("analyze_measurements: need at least one histogram bin");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("analyze_measurements: non-finite sample");

  MeasurementStats st;
  st.count = values.size();
  const double n = static_cast<double>(values.size());
  double s1 = 0.0;
  for (double v : values) s1 += v;
  st.mean = s1 / n;
  double residual = 0.0, s2 = 0.0;
  for (double v : values) residual += v - st.mean;
  st.mean += residual / n;
  if (!(st.mean > 0.0)) throw std::invalid_argument("analyze_measurements: mean signal must be > 0");
  for (double v : values) s2 += (v - st.mean) * (v - st.mean);
  st.scintillation_index = s2 / n / (st.mean * st.mean);

  std::vector<double> x(values.begin(), values.end());
  for (double& v : x) v /= st.mean;
  double var = 0.0;
  for (double v : x) var += (v - 1.0) * (v - 1.0);
  var /= n;
  st.gaussian.mu = 1.0;
  st.gaussian.sigma = std::sqrt(var);
  st.gaussian.ks = ks_distance_gaussian(x, st.gaussian.mu, st.gaussian.sigma);

  auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo < 1e-12) lo -= 1e-3, hi += 1e-3;
  const double w = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double v : x) ++counts[std::min(bins - 1, static_cast<std::size_t>((v - lo) / w))];
  for (std::size_t b = 0; b < bins; ++b)
    st.histogram.push_back({lo + static_cast<double>(b) * w, lo + static_cast<double>(b + 1) * w,
                            static_cast<double>(counts[b]) / (n * w)});
  return st;
}

}  // namespace uvmci
