// Particle and turbulence scattering/absorption physics for UV links.
#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

namespace uvmci {

inline constexpr double kPi = std::numbers::pi;

namespace detail {
inline void check_angle(double theta, const char* what) {
  if (!(theta >= 0.0 && theta <= kPi))
    throw std::domain_error(std::string(what) + ": scattering angle outside [0, pi]");
}
}  // namespace detail

/// Rayleigh (gamma) and Mie (g, f) phase-function parameters.
struct ScatteringParams {
  double gamma = 0.017;
  double g = 0.72;
  double f = 0.5;

  void validate() const {
    if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
    if (!(g > -1.0 && g < 1.0)) throw std::invalid_argument("g must lie in (-1, 1)");
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("f must lie in [0, 1]");
  }
  bool operator==(const ScatteringParams&) const = default;
};

/// Refractive-index turbulence parameters (Booker-Gordon spectrum inputs).
struct TurbulenceOpticalParams {
  double d0 = 1e-3;         // average eddy size [m]
  double L0 = 100.0;        // outer scale [m]
  double Cn2 = 1e-15;       // structure parameter [m^-2/3]
  double lambda = 260e-9;   // wavelength [m]

  double wavenumber() const { return 2.0 * kPi / lambda; }

  /// Refractive-index variance <n1^2> for isotropic turbulence.
  double index_variance() const { return Cn2 * std::pow(L0, 2.0 / 3.0) / 1.91; }

  void validate() const {
    if (!(d0 > 0.0)) throw std::invalid_argument("d0 must be > 0");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
    if (!(Cn2 >= 0.0)) throw std::invalid_argument("Cn2 must be >= 0");
    if (!(L0 > 0.0)) throw std::invalid_argument("L0 must be > 0");
  }
  bool operator==(const TurbulenceOpticalParams&) const = default;
};

inline double rayleigh_phase(double theta, const ScatteringParams& p) {
  detail::check_angle(theta, "rayleigh_phase");
  const double c = std::cos(theta);
  return 3.0 * (1.0 + 3.0 * p.gamma + (1.0 - p.gamma) * c * c) /
         (16.0 * kPi * (1.0 + 2.0 * p.gamma));
}

/// Two-term Mie approximation: Henyey-Greenstein plus a (3cos^2 - 1) correction.
inline double mie_phase(double theta, const ScatteringParams& p) {
  detail::check_angle(theta, "mie_phase");
  if (!(p.g > -1.0 && p.g < 1.0)) throw std::domain_error("mie_phase: |g| must be < 1");
  const double c = std::cos(theta);
  const double g2 = p.g * p.g;
  const double hg = 1.0 / std::pow(1.0 + g2 - 2.0 * p.g * c, 1.5);
  const double corr = p.f * (3.0 * c * c - 1.0) / (2.0 * std::pow(1.0 + g2, 1.5));
  return (1.0 - g2) / (4.0 * kPi) * (hg + corr);
}

/// Turbulence-induced phase function for the Booker-Gordon spectrum.
inline double turbulence_phase(double theta, const TurbulenceOpticalParams& t) {
  detail::check_angle(theta, "turbulence_phase");
  const double k = t.wavenumber();
  const double a = 4.0 * k * k * t.d0 * t.d0;
  const double s = std::sin(0.5 * theta);
  const double den = 1.0 + a * s * s;
  return (1.0 + a) / (4.0 * kPi * den * den);
}

/// Solid-angle integral of the turbulence differential cross section, 8 k^4 <n1^2> d0^3 / (1 + 4 k^2 d0^2).
inline double turbulence_scattering_coefficient(const TurbulenceOpticalParams& t) {
  const double k = t.wavenumber();
  const double k2 = k * k;
  return 8.0 * k2 * k2 * t.index_variance() * t.d0 * t.d0 * t.d0 /
         (1.0 + 4.0 * k2 * t.d0 * t.d0);
}

/// Absorption due to the turbulent continuum for a near-ground atmosphere
/// (eps_r = 1.00059, conductivity 2.2e-14 S/m, eps_i = 60 lambda delta).
/// Returned as the small-loss attenuation Im(k sqrt(eps)) = k eps_i / (2 sqrt(eps_r)).
inline double turbulence_absorption(double lambda) {
  if (!(lambda > 0.0)) throw std::domain_error("turbulence_absorption: lambda must be > 0");
  constexpr double eps_r = 1.00059;
  constexpr double conductivity = 2.2e-14;
  const double k = 2.0 * kPi / lambda;
  const double eps_i = 60.0 * lambda * conductivity;
  return 0.5 * k * eps_i / std::sqrt(eps_r);
}

/// Scattering and absorption coefficients of the channel, all in 1/m.
///
/// Derived quantities (total scattering, extinction, albedo) are recomputed on
/// every call. Turbulence-induced scattering is carried separately and only
/// enters the totals when explicitly enabled.
class AtmosphereModel {
 public:
  AtmosphereModel() = default;
  AtmosphereModel(double k_s_ray, double k_s_mie, double k_a_par, ScatteringParams scattering = {})
      : k_s_ray_(k_s_ray), k_s_mie_(k_s_mie), k_a_par_(k_a_par), scattering_(scattering) {
    validate();
  }

  double k_s_ray() const { return k_s_ray_; }
  double k_s_mie() const { return k_s_mie_; }
  double k_a_par() const { return k_a_par_; }
  const ScatteringParams& scattering() const { return scattering_; }
  const std::optional<TurbulenceOpticalParams>& turbulence_scattering() const { return turbulence_; }

  void set_k_s_ray(double v) { k_s_ray_ = v; validate(); }
  void set_k_s_mie(double v) { k_s_mie_ = v; validate(); }
  void set_k_a_par(double v) { k_a_par_ = v; validate(); }
  void set_scattering(const ScatteringParams& s) { scattering_ = s; validate(); }

  /// Include (or, with nullopt, exclude) turbulence-induced scattering in the totals.
  void set_turbulence_scattering(std::optional<TurbulenceOpticalParams> t) {
    if (t) t->validate();
    turbulence_ = t;
    validate();
  }

  double k_s_tur() const { return turbulence_ ? turbulence_scattering_coefficient(*turbulence_) : 0.0; }
  double k_s_tot() const { return k_s_ray_ + k_s_mie_ + k_s_tur(); }
  double k_e_tot() const { return k_s_tot() + k_a_par_; }
  double albedo() const { return k_s_tot() / k_e_tot(); }

  void validate() const {
    if (!(k_s_ray_ >= 0.0 && k_s_mie_ >= 0.0 && k_a_par_ >= 0.0))
      throw std::invalid_argument("atmosphere coefficients must be >= 0");
    if (!(k_s_ray_ + k_s_mie_ + k_a_par_ + k_s_tur() > 0.0))
      throw std::invalid_argument("total extinction coefficient must be > 0");
    scattering_.validate();
  }

 private:
  double k_s_ray_ = 0.266e-3;
  double k_s_mie_ = 0.284e-3;
  double k_a_par_ = 0.802e-3;
  ScatteringParams scattering_{};
  std::optional<TurbulenceOpticalParams> turbulence_{};
};

/// Scattering-weighted mixture of the component phase functions.
inline double total_phase(double theta, const AtmosphereModel& m) {
  const double ks = m.k_s_tot();
  if (!(ks > 0.0)) throw std::domain_error("total_phase: total scattering coefficient is zero");
  double p = 0.0;
  if (m.k_s_ray() > 0.0) p += m.k_s_ray() / ks * rayleigh_phase(theta, m.scattering());
  if (m.k_s_mie() > 0.0) p += m.k_s_mie() / ks * mie_phase(theta, m.scattering());
  if (const auto& t = m.turbulence_scattering()) p += m.k_s_tur() / ks * turbulence_phase(theta, *t);
  else detail::check_angle(theta, "total_phase");
  return p;
}

}  // namespace uvmci
