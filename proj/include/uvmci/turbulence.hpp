// Turbulent fading statistics: Rytov variance, log-normal and Gamma-Gamma
// laws, per-leg second moments and fading draws.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <gsl/gsl_cdf.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include "uvmci/atmosphere.hpp"
#include "uvmci/random.hpp"

namespace uvmci {

/// Fading family used for per-leg statistics. `automatic` is resolved against
/// the link distance before any estimator runs (see resolve_regime).
enum class FadingRegime { automatic, log_normal, gamma_gamma, hybrid };

/// How the log-normal log-variance is tied to the Rytov variance.
///   moment_matched: log-variance = sigma_r^2, so E[eta^2] = exp(sigma_r^2).
///   literal:        log-variance = exp(sigma_r^2) - 1.
enum class LogNormalConvention { moment_matched, literal };

inline std::string_view to_string(FadingRegime r) {
  switch (r) {
    case FadingRegime::automatic: return "auto";
    case FadingRegime::log_normal: return "ln";
    case FadingRegime::gamma_gamma: return "gg";
    case FadingRegime::hybrid: return "hybrid";
  }
  return "?";
}

inline std::string_view to_string(LogNormalConvention c) {
  return c == LogNormalConvention::literal ? "literal" : "moment_matched";
}

struct TurbulenceModel {
  TurbulenceOpticalParams optical{};
  FadingRegime regime = FadingRegime::log_normal;
  LogNormalConvention ln_convention = LogNormalConvention::moment_matched;

  bool operator==(const TurbulenceModel&) const = default;
};

/// Per-leg fading moments. m2 == exp(sigma_ln2) in every regime.
struct FadingMoments {
  double m2 = 1.0;
  double sigma_ln2 = 0.0;
};

/// Plane-wave Rytov variance 1.23 Cn2 k^(7/6) d^(11/6).
inline double rytov_variance(double d, const TurbulenceModel& model) {
  if (!(d >= 0.0)) throw std::domain_error("rytov_variance: distance must be >= 0");
  const double k = model.optical.wavenumber();
  return 1.23 * model.optical.Cn2 * std::pow(k, 7.0 / 6.0) * std::pow(d, 11.0 / 6.0);
}

/// Sigma_r^2 below which `automatic` selects log-normal.
inline constexpr double kAutoRegimeThreshold = 0.3;

/// Distance at which `automatic` tests the Rytov variance: the baseline plus
/// ten extinction lengths. Multiple-scattering legs routinely reach that far,
/// and the log-normal second moment exp(sigma_r^2(d)) grows faster in d than
/// the exponential path-length density decays, so log-normal is only kept
/// when it stays weak over that whole range.
inline double regime_reference_distance(double baseline, double k_e) { return baseline + 10.0 / k_e; }

/// Replaces `automatic` with log-normal when sigma_r^2(reference) < 0.3 and
/// with the hybrid GG-matched log-normal otherwise.
inline TurbulenceModel resolve_regime(TurbulenceModel model, double reference_distance) {
  if (model.regime == FadingRegime::automatic)
    model.regime = rytov_variance(reference_distance, model) < kAutoRegimeThreshold ? FadingRegime::log_normal
                                                                                   : FadingRegime::hybrid;
  return model;
}

/// Unit-mean log-normal density with log-variance sigma_ln2.
inline double ln_pdf(double eta, double sigma_ln2) {
  if (!(sigma_ln2 > 0.0)) throw std::domain_error("ln_pdf: sigma_ln2 must be > 0");
  if (!(eta > 0.0)) return 0.0;
  const double z = std::log(eta) + 0.5 * sigma_ln2;
  return std::exp(-z * z / (2.0 * sigma_ln2)) / (eta * std::sqrt(2.0 * kPi * sigma_ln2));
}

inline double ln_cdf(double eta, double sigma_ln2) {
  if (!(eta > 0.0)) return 0.0;
  if (sigma_ln2 <= 0.0) return eta >= 1.0 ? 1.0 : 0.0;
  const double z = (std::log(eta) + 0.5 * sigma_ln2) / std::sqrt(sigma_ln2);
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

struct GammaGammaParams {
  double alpha;
  double beta;
  double variance() const { return 1.0 / alpha + 1.0 / beta + 1.0 / (alpha * beta); }
  double second_moment() const { return (1.0 + 1.0 / alpha) * (1.0 + 1.0 / beta); }
};

/// Large- and small-scale effective eddy counts for a given Rytov variance.
inline GammaGammaParams gg_params(double sigma_r2) {
  if (!(sigma_r2 > 0.0))
    throw std::domain_error("gg_params: Rytov variance must be > 0 (no-turbulence path has no GG form)");
  const double s125 = std::pow(sigma_r2, 6.0 / 5.0);  // sigma_r^(12/5)
  const double a_exp = 0.49 * sigma_r2 / std::pow(1.0 + 1.11 * s125, 7.0 / 6.0);
  const double b_exp = 0.51 * sigma_r2 / std::pow(1.0 + 0.69 * s125, 5.0 / 6.0);
  return {1.0 / std::expm1(a_exp), 1.0 / std::expm1(b_exp)};
}

namespace detail {
/// log K_nu(x) through GSL's scaled evaluation, valid far beyond the range
/// where K_nu itself under- or overflows.
inline double log_bessel_k(double nu, double x) {
  // GSL's default handler aborts; status codes are checked instead.
  static const bool handler_off = (gsl_set_error_handler_off(), true);
  (void)handler_off;
  gsl_sf_result res;
  const int status = gsl_sf_bessel_lnKnu_e(std::fabs(nu), x, &res);
  if (status != GSL_SUCCESS) throw std::runtime_error("log_bessel_k: GSL evaluation failed");
  return res.val;
}
}  // namespace detail

/// Unit-mean Gamma-Gamma density, evaluated in log space.
inline double gg_pdf(double eta, double alpha, double beta) {
  if (!(alpha > 0.0 && beta > 0.0)) throw std::domain_error("gg_pdf: alpha and beta must be > 0");
  if (eta < 0.0) return 0.0;
  eta = std::max(eta, 1e-12);
  const double ab = alpha * beta;
  const double half_sum = 0.5 * (alpha + beta);
  const double log_f = std::log(2.0) + half_sum * std::log(ab) + (half_sum - 1.0) * std::log(eta) -
                       std::lgamma(alpha) - std::lgamma(beta) +
                       detail::log_bessel_k(alpha - beta, 2.0 * std::sqrt(ab * eta));
  const double f = std::exp(log_f);
  return f < 1e-300 ? 0.0 : f;
}

/// Second moment of the fading on one leg of length d for the model's regime.
inline FadingMoments second_moment(double d, const TurbulenceModel& model) {
  const double sr2 = rytov_variance(d, model);
  if (sr2 == 0.0) return {};
  switch (model.regime) {
    case FadingRegime::log_normal: {
      const double s = model.ln_convention == LogNormalConvention::literal ? std::expm1(sr2) : sr2;
      return {std::exp(s), s};
    }
    case FadingRegime::gamma_gamma:
    case FadingRegime::hybrid: {
      const auto gg = gg_params(sr2);
      return {gg.second_moment(), std::log1p(gg.variance())};
    }
    case FadingRegime::automatic: break;
  }
  throw std::logic_error("second_moment: regime must be resolved before use");
}

/// Log-normal parameter moment-matched to the Gamma-Gamma variance, ln(Var_GG + 1).
inline double hybrid_sigma_ln2(double d, const TurbulenceModel& model) {
  const double sr2 = rytov_variance(d, model);
  if (sr2 == 0.0) return 0.0;
  return std::log1p(gg_params(sr2).variance());
}

/// One unit-mean fading coefficient for a leg of length d.
inline double draw_fading(RandomStream& rng, double d, const TurbulenceModel& model) {
  const double sr2 = rytov_variance(d, model);
  if (sr2 == 0.0) return 1.0;
  if (model.regime == FadingRegime::gamma_gamma) {
    const auto gg = gg_params(sr2);
    std::gamma_distribution<double> large(gg.alpha, 1.0 / gg.alpha);
    std::gamma_distribution<double> small(gg.beta, 1.0 / gg.beta);
    const double x = large(rng);
    return x * small(rng);
  }
  const double s = second_moment(d, model).sigma_ln2;
  const double z = gsl_cdf_ugaussian_Pinv(rng.uniform_open());
  return std::exp(-0.5 * s + std::sqrt(s) * z);
}

}  // namespace uvmci
