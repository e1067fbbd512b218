// Gridded densities of the equivalent fading coefficient: per-order
// log-normal mixtures, their weighted convolution, moments and fits.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "uvmci/turbulence.hpp"

namespace uvmci {

/// Thrown when discretisation pushes more than the allowed mass past eta_max.
struct GridOverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Density sampled on nodes eta_i = i * h, i = 0 .. G-1. Node i stands for
/// the cell [(i - 1/2) h, (i + 1/2) h], so mass_i = density_i * h.
struct EtaGrid {
  double eta_max = 4.0;
  std::vector<double> density;

  EtaGrid() = default;
  EtaGrid(double eta_max_, std::size_t points) : eta_max(eta_max_), density(points, 0.0) {
    if (!(eta_max_ > 0.0) || points < 16) throw std::invalid_argument("EtaGrid: need eta_max > 0 and >= 16 points");
  }

  std::size_t size() const { return density.size(); }
  double step() const { return eta_max / static_cast<double>(density.size() - 1); }
  double node(std::size_t i) const { return static_cast<double>(i) * step(); }

  std::vector<double> masses() const {
    std::vector<double> m(density.size());
    const double h = step();
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = density[i] * h;
    return m;
  }
  void set_masses(const std::vector<double>& m) {
    const double h = step();
    density.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) density[i] = m[i] / h;
  }

  double integral() const {
    double s = 0.0;
    for (double d : density) s += d;
    return s * step();
  }
  double mean() const {
    const double h = step();
    double s = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) s += node(i) * density[i];
    return s * h / integral();
  }
  double variance() const {
    const double h = step();
    const double m = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) {
      const double x = node(i) - m;
      s += x * x * density[i];
    }
    return s * h / integral();
  }
  /// CDF at the upper edge of every cell.
  std::vector<double> cdf_at_edges() const {
    std::vector<double> c(density.size());
    const double h = step();
    const double total = integral();
    double acc = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) {
      acc += density[i] * h;
      c[i] = acc / total;
    }
    return c;
  }
};

/// Compressed record of the per-path log-variance sums s = sum_i sigma_ln2(d_i).
///
/// Histogram mode keeps a count and running sum per log-spaced bin over
/// [kMinS, kMaxS] (plus zero and overflow bins); exact mode keeps every value.
/// Both merge by plain addition, so reductions are associative.
class SigmaAccumulator {
 public:
  enum class Mode { histogram, exact };
  static constexpr std::size_t kBins = 512;
  static constexpr double kMinS = 1e-10;
  static constexpr double kMaxS = 1e3;

  struct Component {
    double weight;
    double s;
  };

  explicit SigmaAccumulator(Mode mode = Mode::histogram) : mode_(mode) {
    if (mode_ == Mode::histogram) {
      counts_.assign(kBins + 2, 0);
      sums_.assign(kBins + 2, 0.0);
    }
  }

  Mode mode() const { return mode_; }

  void add(double s) {
    ++total_;
    if (mode_ == Mode::exact) {
      values_.push_back(s);
      return;
    }
    const std::size_t b = bin_of(s);
    ++counts_[b];
    sums_[b] += s;
  }

  void merge(const SigmaAccumulator& other) {
    if (other.mode_ != mode_) throw std::logic_error("SigmaAccumulator: mode mismatch in merge");
    total_ += other.total_;
    if (mode_ == Mode::exact) {
      values_.insert(values_.end(), other.values_.begin(), other.values_.end());
      return;
    }
    for (std::size_t b = 0; b < counts_.size(); ++b) {
      counts_[b] += other.counts_[b];
      sums_[b] += other.sums_[b];
    }
  }

  std::uint64_t count() const { return total_; }

  /// Mixture components with weights summing to 1.
  std::vector<Component> components() const {
    std::vector<Component> out;
    if (total_ == 0) return out;
    const double inv = 1.0 / static_cast<double>(total_);
    if (mode_ == Mode::exact) {
      out.reserve(values_.size());
      for (double v : values_) out.push_back({inv, v});
      return out;
    }
    for (std::size_t b = 0; b < counts_.size(); ++b)
      if (counts_[b] > 0)
        out.push_back({static_cast<double>(counts_[b]) * inv, sums_[b] / static_cast<double>(counts_[b])});
    return out;
  }

 private:
  static std::size_t bin_of(double s) {
    if (s < kMinS) return 0;
    if (s >= kMaxS) return kBins + 1;
    const double t = std::log(s / kMinS) / std::log(kMaxS / kMinS);
    return 1 + std::min(kBins - 1, static_cast<std::size_t>(t * static_cast<double>(kBins)));
  }

  Mode mode_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> counts_;
  std::vector<double> sums_;
  std::vector<double> values_;
};

namespace detail {
inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Adds `weight` times the cell masses of a unit-mean log-normal with
/// log-variance s (s below 1e-12 is a point mass at eta = 1).
inline void add_ln_cell_masses(std::vector<double>& mass, double h, double weight, double s) {
  const std::size_t G = mass.size();
  if (s < 1e-12) {
    const auto i = static_cast<std::size_t>(std::llround(1.0 / h));
    if (i < G) mass[i] += weight;
    return;
  }
  const double sd = std::sqrt(s);
  const double mu = -0.5 * s;
  // Outside +-10 standard deviations in log space the cell masses vanish.
  const double lo = std::exp(mu - 10.0 * sd);
  const double hi = std::exp(mu + 10.0 * sd);
  const double i_lo_d = std::floor(lo / h - 0.5);
  const double i_hi_d = std::ceil(hi / h + 0.5);
  const std::size_t i_lo = i_lo_d <= 0.0 ? 0 : static_cast<std::size_t>(i_lo_d);
  const std::size_t i_hi = i_hi_d >= static_cast<double>(G - 1) ? G - 1 : static_cast<std::size_t>(i_hi_d);
  if (i_lo >= G) return;
  auto cdf = [&](double x) { return x <= 0.0 ? 0.0 : std_normal_cdf((std::log(x) - mu) / sd); };
  double prev = cdf((static_cast<double>(i_lo) - 0.5) * h);
  for (std::size_t i = i_lo; i <= i_hi; ++i) {
    const double next = cdf((static_cast<double>(i) + 0.5) * h);
    mass[i] += weight * (next - prev);
    prev = next;
  }
}
}  // namespace detail

/// Density of one order's equivalent fading coefficient: the equal-weight
/// mixture over accepted paths of unit-mean log-normals with parameter s.
/// Evaluated as exact cell masses, so narrow components keep their mass.
inline EtaGrid order_pdf(const SigmaAccumulator& acc, double eta_max, std::size_t points) {
  if (acc.count() == 0) throw std::invalid_argument("order_pdf: no accepted paths");
  EtaGrid grid(eta_max, points);
  std::vector<double> mass(points, 0.0);
  const double h = grid.step();
  for (const auto& c : acc.components()) detail::add_ln_cell_masses(mass, h, c.weight, c.s);
  grid.set_masses(mass);
  return grid;
}

/// Density of sum_n w_n X_n for independent X_n with the given gridded densities.
///
/// Each input is first rescaled to w_n X_n by re-binning its piecewise-uniform
/// CDF, then the cell masses are convolved on the common lattice. The result
/// is renormalised to unit integral; GridOverflowError is raised when more
/// than 1e-3 of the mass lies beyond eta_max, counting mass the inputs
/// already lost to truncation.
inline EtaGrid pdf_convolve(const std::vector<EtaGrid>& pdfs, const std::vector<double>& weights) {
  if (pdfs.empty() || pdfs.size() != weights.size())
    throw std::invalid_argument("pdf_convolve: need one weight per density");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("pdf_convolve: weights must be > 0");
    wsum += w;
  }
  if (std::fabs(wsum - 1.0) > 1e-9) throw std::invalid_argument("pdf_convolve: weights must sum to 1");
  const std::size_t G = pdfs.front().size();
  const double eta_max = pdfs.front().eta_max;
  for (const auto& p : pdfs)
    if (p.size() != G || p.eta_max != eta_max) throw std::invalid_argument("pdf_convolve: grids differ");

  auto rescale = [G](const EtaGrid& src, double w) {
    const std::vector<double> m = src.masses();
    std::vector<double> edge(G + 1, 0.0);  // CDF at (i - 1/2) h, i = 0..G
    for (std::size_t i = 0; i < G; ++i) edge[i + 1] = edge[i] + m[i];
    const double h = src.step();
    // Node 0 only owns [0, h/2]: its mass is uniform there.
    auto cdf = [&](double x) {
      if (x <= 0.0) return 0.0;
      if (x < 0.5 * h) return m[0] * x / (0.5 * h);
      const double pos = x / h + 0.5;
      const auto j = static_cast<std::size_t>(pos);
      if (j >= G) return edge[G];
      return edge[j] + (pos - static_cast<double>(j)) * m[j];
    };
    std::vector<double> out(G, 0.0);
    double prev = 0.0;
    for (std::size_t i = 0; i < G; ++i) {
      const double next = cdf((static_cast<double>(i) + 0.5) * h / w);
      out[i] = next - prev;
      prev = next;
    }
    return out;
  };

  double overflow = 0.0;
  for (const auto& p : pdfs) overflow += std::max(0.0, 1.0 - p.integral());
  std::vector<double> acc = rescale(pdfs[0], weights[0]);
  for (std::size_t k = 1; k < pdfs.size(); ++k) {
    const std::vector<double> b = rescale(pdfs[k], weights[k]);
    std::vector<double> out(G, 0.0);
    for (std::size_t i = 0; i < G; ++i) {
      const double ai = acc[i];
      if (ai < 1e-300) continue;
      const std::size_t jmax = G - 1 - i;
      for (std::size_t j = 0; j <= jmax; ++j) out[i + j] += ai * b[j];
      double tail = 0.0;
      for (std::size_t j = jmax + 1; j < G; ++j) tail += b[j];
      overflow += ai * tail;
    }
    acc = std::move(out);
  }
  if (overflow > 1e-3)
    throw GridOverflowError("pdf_convolve: " + std::to_string(overflow) + " of the mass exceeds eta_max");
  double total = 0.0;
  for (double v : acc) total += v;
  EtaGrid result(eta_max, G);
  for (double& v : acc) v /= total;
  result.set_masses(acc);
  return result;
}

struct DistributionFit {
  double mu = 0.0;     // log-mean (LN) or mean (Gaussian)
  double sigma = 0.0;  // log-std (LN) or std (Gaussian)
  double ks = 0.0;     // Kolmogorov-Smirnov distance to the gridded density
};

namespace detail {
template <class Cdf>
double grid_ks(const EtaGrid& grid, Cdf&& model_cdf) {
  const auto c = grid.cdf_at_edges();
  const double h = grid.step();
  double d = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double x = (static_cast<double>(i) + 0.5) * h;
    const double f = model_cdf(x);
    // Both cell edges bound the supremum of a piecewise-linear CDF against a smooth one.
    d = std::max({d, std::fabs(c[i] - f), std::fabs(prev - model_cdf(x - h))});
    prev = c[i];
  }
  return d;
}
}  // namespace detail

/// Log-normal fitted by matching the grid's mean and variance.
inline DistributionFit fit_log_normal(const EtaGrid& grid) {
  const double m = grid.mean();
  const double v = grid.variance();
  DistributionFit fit;
  const double s2 = std::log1p(v / (m * m));
  fit.sigma = std::sqrt(s2);
  fit.mu = std::log(m) - 0.5 * s2;
  fit.ks = detail::grid_ks(grid, [&](double x) {
    if (x <= 0.0) return 0.0;
    if (fit.sigma == 0.0) return std::log(x) >= fit.mu ? 1.0 : 0.0;
    return detail::std_normal_cdf((std::log(x) - fit.mu) / fit.sigma);
  });
  return fit;
}

/// Gaussian fitted by matching the grid's mean and variance.
inline DistributionFit fit_gaussian(const EtaGrid& grid) {
  DistributionFit fit;
  fit.mu = grid.mean();
  fit.sigma = std::sqrt(grid.variance());
  fit.ks = detail::grid_ks(grid, [&](double x) {
    if (fit.sigma == 0.0) return x >= fit.mu ? 1.0 : 0.0;
    return detail::std_normal_cdf((x - fit.mu) / fit.sigma);
  });
  return fit;
}

}  // namespace uvmci
