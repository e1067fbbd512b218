// Link geometry, photon trajectories and receiver-side quantities.
//
// Frame: Rx at the origin, Tx at (0, r, 0). Zenith angles are measured from
// +z and azimuths in the x-y plane from +x, so a pointing (theta, phi) has
// direction (sin theta cos phi, sin theta sin phi, cos theta). With
// phi_T = -90 deg and phi_R = 90 deg the two ends lean toward each other.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "uvmci/atmosphere.hpp"

namespace uvmci {

using Vec3 = Eigen::Vector3d;

inline Vec3 direction_from_angles(double zenith, double azimuth) {
  return {std::sin(zenith) * std::cos(azimuth), std::sin(zenith) * std::sin(azimuth), std::cos(zenith)};
}

/// Angle between two nonzero vectors, robust near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

struct GeometryConfig {
  double r = 500.0;
  double theta_T = kPi / 4.0;
  double phi_T = -kPi / 2.0;
  double theta_R = kPi / 4.0;
  double phi_R = kPi / 2.0;
  double beta_T = 17.0 * kPi / 180.0;  // full divergence
  double beta_R = 30.0 * kPi / 180.0;  // full field of view
  double A_r = 1.77e-4;

  Vec3 tx_position() const { return {0.0, r, 0.0}; }
  Vec3 mu_T() const { return direction_from_angles(theta_T, phi_T); }
  Vec3 mu_R() const { return direction_from_angles(theta_R, phi_R); }
  double r_A() const { return std::sqrt(A_r / kPi); }

  void validate() const {
    if (!(r > 0.0)) throw std::invalid_argument("r must be > 0");
    if (!(beta_T > 0.0 && beta_T < kPi)) throw std::invalid_argument("beta_T must lie in (0, pi)");
    if (!(beta_R > 0.0 && beta_R < kPi)) throw std::invalid_argument("beta_R must lie in (0, pi)");
    if (!(A_r > 0.0)) throw std::invalid_argument("A_r must be > 0");
    if (!(theta_T >= 0.0 && theta_T <= kPi && theta_R >= 0.0 && theta_R <= kPi))
      throw std::invalid_argument("pointing zenith angles must lie in [0, pi]");
    if (!std::isfinite(phi_T) || !std::isfinite(phi_R))
      throw std::invalid_argument("pointing azimuths must be finite");
  }
  bool operator==(const GeometryConfig&) const = default;
};

/// Direction obtained by turning `mu_prev` through polar angle theta_s and
/// azimuth phi_s about itself.
///
/// The azimuth reference is the usual radiative-transfer local frame; for
/// |mu_z| > 1 - 1e-9 the global x axis is the reference instead.
inline Vec3 scatter_direction(const Vec3& mu_prev, double theta_s, double phi_s) {
  if (theta_s == 0.0) return mu_prev;
  const double ct = std::cos(theta_s);
  const double st = std::sin(theta_s);
  const double cp = std::cos(phi_s);
  const double sp = std::sin(phi_s);
  const double ux = mu_prev.x(), uy = mu_prev.y(), uz = mu_prev.z();
  Vec3 out;
  if (std::fabs(uz) > 1.0 - 1e-9) {
    const double sign = uz > 0.0 ? 1.0 : -1.0;
    out = {st * cp, sign * st * sp, sign * ct};
  } else {
    const double tmp = std::sqrt(1.0 - uz * uz);
    out = {st * (ux * uz * cp - uy * sp) / tmp + ux * ct,
           st * (uy * uz * cp + ux * sp) / tmp + uy * ct,
           -st * cp * tmp + uz * ct};
  }
  return out.normalized();
}

/// Initial photon direction: angle theta_0 off the Tx axis, azimuth phi_0 about it.
inline Vec3 initial_direction(double theta_0, double phi_0, const GeometryConfig& config) {
  return scatter_direction(config.mu_T(), theta_0, phi_0);
}

/// True iff r_n lies inside the receiver FOV cone (boundary inclusive).
inline bool fov_indicator(const Vec3& r_n, const GeometryConfig& config) {
  const double len = r_n.norm();
  if (len == 0.0) return true;
  // Relative slack of a few ulps keeps points constructed exactly on the cone inside it.
  return r_n.dot(config.mu_R()) >= len * (std::cos(0.5 * config.beta_R) - 1e-12);
}

/// Solid angle subtended by the aperture from distance d_n.
inline double solid_angle(double d_n, const GeometryConfig& config) {
  if (!(d_n >= 0.0)) throw std::domain_error("solid_angle: distance must be >= 0");
  const double ra2 = config.A_r / kPi;
  const double hyp = std::sqrt(d_n * d_n + ra2);
  // 2 pi (1 - d/hyp) rewritten to avoid cancellation at large d.
  return 2.0 * kPi * ra2 / (hyp * (hyp + d_n));
}

struct PathSample {
  int n = 0;
  std::vector<double> d, theta, phi;
  std::vector<Vec3> positions;  // r_1 .. r_n
  std::vector<Vec3> mu;         // mu_0 .. mu_{n-1}
  double d_n = 0.0;
  double theta_rn = 0.0;
  double phi_r = 0.0;
  bool accepted = false;
};

/// Fills `out` from sampled legs, reusing its storage.
inline void build_path_into(PathSample& out, const GeometryConfig& config, std::span<const double> d,
                            std::span<const double> theta, std::span<const double> phi) {
  const std::size_t n = d.size();
  if (n == 0) throw std::invalid_argument("build_path: need at least one leg");
  if (theta.size() != n || phi.size() != n) throw std::invalid_argument("build_path: length mismatch");
  for (double di : d)
    if (!(di >= 0.0)) throw std::invalid_argument("build_path: negative distance");

  out.n = static_cast<int>(n);
  out.d.assign(d.begin(), d.end());
  out.theta.assign(theta.begin(), theta.end());
  out.phi.assign(phi.begin(), phi.end());
  out.positions.resize(n);
  out.mu.resize(n);

  Vec3 pos = config.tx_position();
  Vec3 dir = initial_direction(theta[0], phi[0], config);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) dir = scatter_direction(dir, theta[i], phi[i]);
    out.mu[i] = dir;
    pos += d[i] * dir;
    out.positions[i] = pos;
  }

  const Vec3& rn = out.positions.back();
  out.d_n = rn.norm();
  if (out.d_n > 0.0) {
    out.theta_rn = angle_between(out.mu.back(), -rn);
    out.phi_r = angle_between(config.mu_R(), rn);
  } else {
    out.theta_rn = 0.0;
    out.phi_r = 0.0;
  }
  out.accepted = fov_indicator(rn, config);
}

inline PathSample build_path(const GeometryConfig& config, std::span<const double> d,
                             std::span<const double> theta, std::span<const double> phi) {
  PathSample p;
  build_path_into(p, config, d, theta, phi);
  return p;
}

}  // namespace uvmci
