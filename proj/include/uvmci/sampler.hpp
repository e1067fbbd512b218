// Random variates for the importance-sampling density: exponential path
// lengths, cone-uniform emission angle, phase-function scattering angles and
// uniform azimuths.
#pragma once

#include <algorithm>
#include <concepts>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "uvmci/atmosphere.hpp"
#include "uvmci/random.hpp"

namespace uvmci {

namespace detail {
inline double clamp_below_one(double u) {
  return u >= 1.0 ? std::nextafter(1.0, 0.0) : u;
}
}  // namespace detail

inline double distance_from_uniform(double u, double k_e) {
  if (!(k_e > 0.0)) throw std::domain_error("sample_distance: extinction must be > 0");
  return -std::log1p(-detail::clamp_below_one(u)) / k_e;
}

inline double sample_distance(RandomStream& rng, double k_e) {
  return distance_from_uniform(rng.uniform(), k_e);
}

inline double theta0_from_uniform(double u, double beta_T) {
  return std::acos(1.0 - u * (1.0 - std::cos(0.5 * beta_T)));
}

/// Emission angle off the Tx axis for a source uniform over its cone.
inline double sample_theta0(RandomStream& rng, double beta_T) {
  if (!(beta_T > 0.0 && beta_T < kPi)) throw std::domain_error("sample_theta0: beta_T must lie in (0, pi)");
  return theta0_from_uniform(rng.uniform(), beta_T);
}

inline double phi_from_uniform(double u) { return 2.0 * kPi * u; }
inline double sample_phi(RandomStream& rng) { return phi_from_uniform(rng.uniform()); }

/// Tabulated CDF of the scattering angle, F(theta) = int_0^theta 2 pi p(t) sin t dt.
struct PhaseCdfTable {
  std::vector<double> theta;
  std::vector<double> cdf;
  double raw_integral = 1.0;

  std::size_t resolution() const { return theta.size(); }

  /// Inverse CDF: binary search for the cell, then linear interpolation.
  double inverse(double u) const {
    if (u <= 0.0) return theta.front();
    if (u >= 1.0) return theta.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t hi = static_cast<std::size_t>(it - cdf.begin());
    const std::size_t lo = hi - 1;
    if (cdf[lo] == u) return theta[lo];
    const double t = (u - cdf[lo]) / (cdf[hi] - cdf[lo]);
    return theta[lo] + t * (theta[hi] - theta[lo]);
  }

  /// Linearly interpolated CDF value.
  double evaluate(double th) const {
    if (th <= theta.front()) return 0.0;
    if (th >= theta.back()) return 1.0;
    const auto it = std::upper_bound(theta.begin(), theta.end(), th);
    const std::size_t hi = static_cast<std::size_t>(it - theta.begin());
    const std::size_t lo = hi - 1;
    const double t = (th - theta[lo]) / (theta[hi] - theta[lo]);
    return cdf[lo] + t * (cdf[hi] - cdf[lo]);
  }
};

inline constexpr std::size_t kDefaultCdfResolution = 4096;

/// Builds the CDF table of an arbitrary phase function on [0, pi].
///
/// Nodes follow theta_j = pi (1 - cos(j pi / (2 (R - 1)))), which packs them
/// quadratically toward theta = 0 where forward peaks live. Each cell is
/// integrated with Simpson's rule on its midpoint.
template <class PhaseFn>
  requires std::invocable<PhaseFn&, double>
PhaseCdfTable build_cdf_table(PhaseFn&& phase, std::size_t resolution = kDefaultCdfResolution) {
  if (resolution < 256) throw std::invalid_argument("build_cdf_table: resolution must be >= 256");
  PhaseCdfTable table;
  table.theta.resize(resolution);
  table.cdf.resize(resolution);
  const double step = kPi / (2.0 * static_cast<double>(resolution - 1));
  for (std::size_t j = 0; j < resolution; ++j)
    table.theta[j] = kPi * (1.0 - std::cos(static_cast<double>(j) * step));
  table.theta.back() = kPi;

  auto integrand = [&](double t) { return 2.0 * kPi * phase(t) * std::sin(t); };
  double acc = 0.0;
  double f_lo = integrand(table.theta[0]);
  table.cdf[0] = 0.0;
  for (std::size_t j = 1; j < resolution; ++j) {
    const double a = table.theta[j - 1];
    const double b = table.theta[j];
    const double f_hi = integrand(b);
    acc += (b - a) / 6.0 * (f_lo + 4.0 * integrand(0.5 * (a + b)) + f_hi);
    table.cdf[j] = acc;
    f_lo = f_hi;
  }

  table.raw_integral = acc;
  if (!(std::fabs(acc - 1.0) <= 1e-4))
    throw std::runtime_error("build_cdf_table: phase function does not integrate to 1 (got " +
                             std::to_string(acc) + ")");
  for (double& c : table.cdf) c /= acc;
  table.cdf.back() = 1.0;
  for (std::size_t j = 1; j < resolution; ++j)
    if (!(table.cdf[j] > table.cdf[j - 1]))
      throw std::runtime_error("build_cdf_table: CDF is not strictly increasing");
  return table;
}

inline PhaseCdfTable build_cdf_table(const AtmosphereModel& model,
                                     std::size_t resolution = kDefaultCdfResolution) {
  return build_cdf_table([&model](double t) { return total_phase(t, model); }, resolution);
}

inline double sample_theta(RandomStream& rng, const PhaseCdfTable& table) {
  return table.inverse(rng.uniform());
}

}  // namespace uvmci
