// Monte-Carlo-integration estimators for the turbulent multiple-scattering
// channel: per-order received power, turbulent variance, the density of the
// equivalent fading coefficient, and the conventional simulation baseline.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "uvmci/atmosphere.hpp"
#include "uvmci/fading_pdf.hpp"
#include "uvmci/geometry.hpp"
#include "uvmci/random.hpp"
#include "uvmci/sampler.hpp"
#include "uvmci/turbulence.hpp"

namespace uvmci {

/// Raised when an estimate cannot be formed, e.g. no path reached the receiver.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Path-sampling block size. The partition of M into blocks depends on M
/// alone, so results do not change with the number of workers.
inline constexpr std::uint64_t kBlockSize = 4096;

struct RunOptions {
  std::uint64_t samples = 1'000'000;  // M
  int orders = 3;                     // N
  std::uint64_t seed = 1;
  unsigned workers = 1;
  SigmaAccumulator::Mode pdf_mode = SigmaAccumulator::Mode::histogram;
  std::optional<double> eta_max;         // nullopt: chosen from the data
  std::optional<std::size_t> eta_points; // nullopt: chosen from eta_max
  std::size_t cdf_resolution = kDefaultCdfResolution;

  bool operator==(const RunOptions&) const = default;
};

/// Everything an estimator needs about the channel, with the phase-function
/// CDF table built once and shared read-only.
struct ChannelModel {
  AtmosphereModel atmosphere;
  TurbulenceModel turbulence;  // regime already resolved
  GeometryConfig geometry;
  PhaseCdfTable cdf;

  ChannelModel(AtmosphereModel atm, TurbulenceModel turb, GeometryConfig geom,
               std::size_t cdf_resolution = kDefaultCdfResolution)
      : atmosphere(std::move(atm)),
        turbulence(resolve_regime(turb, regime_reference_distance(geom.r, atmosphere.k_e_tot()))),
        geometry(geom),
        cdf(build_cdf_table(atmosphere, cdf_resolution)) {
    geometry.validate();
    turbulence.optical.validate();
  }
};

/// Conditional probability that a sampled n-order path reaches the receiver.
inline double conditional_prob(const PathSample& path, const AtmosphereModel& atmosphere,
                               const GeometryConfig& geometry) {
  if (!path.accepted) return 0.0;
  const double albedo_n = std::pow(atmosphere.albedo(), path.n);
  const double attenuation = std::exp(-atmosphere.k_e_tot() * path.d_n);
  const double detect = std::min(1.0, total_phase(path.theta_rn, atmosphere) * solid_angle(path.d_n, geometry));
  return albedo_n * attenuation * std::cos(path.phi_r) * detect;
}

struct OrderEstimate {
  int n = 0;
  std::uint64_t M = 0;
  double P_n = 0.0;
  double stderr_P = 0.0;
  std::optional<double> sigma2_n;  // empty when no path was accepted
  std::uint64_t count = 0;
  SigmaAccumulator pdf_accumulator;
};

struct ChannelEstimate {
  std::vector<OrderEstimate> orders;
  double P_tot = 0.0;
  double sigma2_tot = 0.0;
  EtaGrid pdf_grid;
  std::vector<std::string> warnings;
};

namespace detail {

struct OrderPartial {
  double sum_o = 0.0;
  double sum_o2 = 0.0;
  double sum_excess = 0.0;  // sum over accepted paths of prod M2 - 1
  std::uint64_t count = 0;
  SigmaAccumulator sigma;

  explicit OrderPartial(SigmaAccumulator::Mode mode) : sigma(mode) {}
};

/// Runs `job(block_index)` for every block on `workers` threads. Jobs write
/// to per-block slots, so the caller reduces in block order afterwards.
inline void parallel_blocks(std::uint64_t blocks, unsigned workers,
                            const std::function<void(std::uint64_t)>& job) {
  workers = std::max(1u, workers);
  if (workers == 1 || blocks <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) job(b);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  const unsigned n = static_cast<unsigned>(std::min<std::uint64_t>(workers, blocks));
  pool.reserve(n);
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::uint64_t b = next++; b < blocks; b = next++) job(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = blocks;
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Samples one n-order path per the importance density into `path`.
inline void sample_path(RandomStream& rng, int n, const ChannelModel& model, PathSample& path,
                        std::vector<double>& d, std::vector<double>& theta, std::vector<double>& phi) {
  const double k_e = model.atmosphere.k_e_tot();
  for (int i = 0; i < n; ++i) {
    d[i] = sample_distance(rng, k_e);
    theta[i] = i == 0 ? sample_theta0(rng, model.geometry.beta_T) : sample_theta(rng, model.cdf);
    phi[i] = sample_phi(rng);
  }
  build_path_into(path, model.geometry, d, theta, phi);
}

inline std::uint64_t block_count(std::uint64_t M) { return (M + kBlockSize - 1) / kBlockSize; }
inline std::uint64_t block_length(std::uint64_t M, std::uint64_t b) {
  return std::min(kBlockSize, M - b * kBlockSize);
}

}  // namespace detail

/// Sum over legs 0..n (the last being the receiver leg d_n) of the per-leg
/// log-variance parameter.
inline double path_sigma_sum(const PathSample& path, const TurbulenceModel& turbulence) {
  double s = 0.0;
  for (double di : path.d) s += second_moment(di, turbulence).sigma_ln2;
  return s + second_moment(path.d_n, turbulence).sigma_ln2;
}

/// Estimates power, turbulent variance and the fading-parameter record for
/// scattering order n from M importance-sampled paths.
inline OrderEstimate estimate_order(int n, const ChannelModel& model, const RunOptions& opts) {
  if (n < 1) throw std::invalid_argument("estimate_order: n must be >= 1");
  if (opts.samples < 1) throw std::invalid_argument("estimate_order: M must be >= 1");
  const std::uint64_t M = opts.samples;
  const std::uint64_t blocks = detail::block_count(M);
  std::vector<detail::OrderPartial> partial(blocks, detail::OrderPartial(opts.pdf_mode));

  detail::parallel_blocks(blocks, opts.workers, [&](std::uint64_t b) {
    RandomStream rng(opts.seed, make_stream_id(StreamPurpose::power, static_cast<std::uint64_t>(n), b));
    auto& acc = partial[b];
    PathSample path;
    std::vector<double> d(n), theta(n), phi(n);
    const std::uint64_t len = detail::block_length(M, b);
    for (std::uint64_t m = 0; m < len; ++m) {
      detail::sample_path(rng, n, model, path, d, theta, phi);
      if (!path.accepted) continue;
      const double o = conditional_prob(path, model.atmosphere, model.geometry);
      acc.sum_o += o;
      acc.sum_o2 += o * o;
      ++acc.count;
      // prod_i M2(d_i) = exp(sum_i sigma_ln2(d_i)) in every regime.
      const double s = path_sigma_sum(path, model.turbulence);
      acc.sum_excess += std::expm1(s);
      acc.sigma.add(s);
    }
  });

  detail::OrderPartial total(opts.pdf_mode);
  for (const auto& p : partial) {
    total.sum_o += p.sum_o;
    total.sum_o2 += p.sum_o2;
    total.sum_excess += p.sum_excess;
    total.count += p.count;
    total.sigma.merge(p.sigma);
  }

  OrderEstimate est;
  est.n = n;
  est.M = M;
  const double Md = static_cast<double>(M);
  est.P_n = total.sum_o / Md;
  if (M > 1) {
    const double var_o = std::max(0.0, (total.sum_o2 - Md * est.P_n * est.P_n) / (Md - 1.0));
    est.stderr_P = std::sqrt(var_o / Md);
  }
  est.count = total.count;
  if (total.count > 0) est.sigma2_n = total.sum_excess / static_cast<double>(total.count);
  est.pdf_accumulator = std::move(total.sigma);
  return est;
}

inline constexpr double kDefaultEtaMax = 4.0;
inline constexpr std::size_t kDefaultEtaPoints = 4096;
inline constexpr std::size_t kMaxEtaPoints = 32768;
inline constexpr double kMaxAutoEtaMax = 1024.0;

/// Picks the eta range so every order's density keeps all but 1e-3 of its
/// second moment and all but 1e-6 of its mass, starting from [0, 4] and
/// doubling as needed.
inline double choose_eta_max(const std::vector<const SigmaAccumulator*>& accs) {
  double x = kDefaultEtaMax;
  auto fits = [&](double eta_max) {
    const double lim = std::log(eta_max);
    for (std::size_t k = 0; k < accs.size(); ++k) {
      double m2 = 0.0, m2_tail = 0.0, mass_tail = 0.0;
      for (const auto& c : accs[k]->components()) {
        if (c.s < 1e-12) {
          m2 += c.weight;
          if (lim < 0.0) mass_tail += c.weight, m2_tail += c.weight;
          continue;
        }
        const double sd = std::sqrt(c.s);
        const double e = std::exp(c.s);
        m2 += c.weight * e;
        m2_tail += c.weight * e * (1.0 - detail::std_normal_cdf((lim - 1.5 * c.s) / sd));
        mass_tail += c.weight * (1.0 - detail::std_normal_cdf((lim + 0.5 * c.s) / sd));
      }
      if (m2_tail > 1e-3 * m2 || mass_tail > 1e-6) return false;
    }
    return true;
  };
  while (x < kMaxAutoEtaMax && !fits(x)) x *= 2.0;
  return x;
}

/// Estimates all orders 1..N and combines them into the channel-level totals.
inline ChannelEstimate estimate_channel(const ChannelModel& model, const RunOptions& opts) {
  if (opts.orders < 1) throw std::invalid_argument("estimate_channel: N must be >= 1");
  if (opts.pdf_mode == SigmaAccumulator::Mode::exact && opts.samples > 100'000)
    throw std::invalid_argument("estimate_channel: exact pdf mode is limited to M <= 1e5");
  ChannelEstimate ch;
  for (int n = 1; n <= opts.orders; ++n) ch.orders.push_back(estimate_order(n, model, opts));

  for (const auto& o : ch.orders) ch.P_tot += o.P_n;
  std::vector<const OrderEstimate*> live;
  for (const auto& o : ch.orders) {
    if (o.count == 0) {
      ch.warnings.push_back("order " + std::to_string(o.n) + " has no accepted paths; dropped from totals");
      continue;
    }
    live.push_back(&o);
  }
  if (live.empty() || !(ch.P_tot > 0.0)) throw NumericalError("no accepted paths in any scattering order");

  std::vector<double> weights;
  std::vector<const SigmaAccumulator*> accs;
  for (const auto* o : live) {
    const double w = o->P_n / ch.P_tot;
    ch.sigma2_tot += w * w * *o->sigma2_n;
    weights.push_back(w);
    accs.push_back(&o->pdf_accumulator);
  }
  // Guard against rounding in the weight sum before the convolution contract check.
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  for (double& w : weights) w /= wsum;

  const double eta_max = opts.eta_max.value_or(choose_eta_max(accs));
  std::size_t points = kDefaultEtaPoints;
  if (opts.eta_points) {
    points = *opts.eta_points;
  } else if (!opts.eta_max) {
    const double h = std::max(kDefaultEtaMax / static_cast<double>(kDefaultEtaPoints - 1),
                              eta_max / static_cast<double>(kMaxEtaPoints - 1));
    points = static_cast<std::size_t>(std::llround(eta_max / h)) + 1;
  }

  std::vector<EtaGrid> pdfs;
  for (const auto* acc : accs) pdfs.push_back(order_pdf(*acc, eta_max, points));
  ch.pdf_grid = pdf_convolve(pdfs, weights);
  return ch;
}

/// Path loss in dB for a received probability P (unit transmit power).
inline double path_loss_db(double P) {
  if (!(P > 0.0)) throw NumericalError("path loss undefined: no accepted paths (P = 0)");
  return -10.0 * std::log10(P);
}

struct McsPoint {
  std::uint64_t M = 0;
  double mean_power = 0.0;
  double variance = 0.0;             // across repetitions
  double normalized_variance = 0.0;  // variance / mean^2
};

struct McsCompareResult {
  std::vector<McsPoint> points;
  double slope = 0.0;  // of log10(variance) against log10(M)
  double slope_stderr = 0.0;
};

/// Least-squares slope (and its standard error) of y against x.
inline std::pair<double, double> fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("fit_slope: need >= 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  double se = 0.0;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - my - slope * (x[i] - mx);
      rss += r * r;
    }
    se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return {slope, se};
}

/// Conventional simulation baseline: each repetition estimates the total
/// received power with every accepted path's objective multiplied by fading
/// draws on all of its legs, and the spread of those estimates is recorded
/// per M. That spread is sampling noise and falls as 1/M.
inline McsCompareResult mcs_variance_experiment(const std::vector<std::uint64_t>& M_list, int reps,
                                                const ChannelModel& model, const RunOptions& opts) {
  if (reps < 30) throw std::invalid_argument("mcs_variance_experiment: reps must be >= 30");
  if (M_list.size() < 2) throw std::invalid_argument("mcs_variance_experiment: need >= 2 values of M");
  McsCompareResult result;
  std::vector<double> lx, ly;
  for (std::size_t mi = 0; mi < M_list.size(); ++mi) {
    const std::uint64_t M = M_list[mi];
    if (M < 1) throw std::invalid_argument("mcs_variance_experiment: M must be >= 1");
    const std::uint64_t blocks = detail::block_count(M);
    std::vector<double> estimates(reps, 0.0);
    for (int rep = 0; rep < reps; ++rep) {
      std::vector<double> block_sum(blocks * opts.orders, 0.0);
      detail::parallel_blocks(blocks * opts.orders, opts.workers, [&](std::uint64_t job) {
        const int n = static_cast<int>(job / blocks) + 1;
        const std::uint64_t b = job % blocks;
        const std::uint64_t id_b = (static_cast<std::uint64_t>(mi) << 32) | (static_cast<std::uint64_t>(n) << 24) | b;
        RandomStream rng(opts.seed, make_stream_id(StreamPurpose::conventional, static_cast<std::uint64_t>(rep), id_b));
        PathSample path;
        std::vector<double> d(n), theta(n), phi(n);
        double s = 0.0;
        const std::uint64_t len = detail::block_length(M, b);
        for (std::uint64_t m = 0; m < len; ++m) {
          detail::sample_path(rng, n, model, path, d, theta, phi);
          if (!path.accepted) continue;
          double eta = 1.0;
          for (double di : path.d) eta *= draw_fading(rng, di, model.turbulence);
          eta *= draw_fading(rng, path.d_n, model.turbulence);
          s += conditional_prob(path, model.atmosphere, model.geometry) * eta;
        }
        block_sum[job] = s;
      });
      double total = 0.0;
      for (double v : block_sum) total += v;
      estimates[rep] = total / static_cast<double>(M);
    }
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= reps;
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    var /= (reps - 1);
    McsPoint pt{M, mean, var, mean > 0.0 ? var / (mean * mean) : 0.0};
    if (!(var > 0.0)) throw NumericalError("mcs_variance_experiment: zero variance at M = " + std::to_string(M));
    result.points.push_back(pt);
    lx.push_back(std::log10(static_cast<double>(M)));
    ly.push_back(std::log10(var));
  }
  std::tie(result.slope, result.slope_stderr) = fit_slope(lx, ly);
  return result;
}

}  // namespace uvmci
