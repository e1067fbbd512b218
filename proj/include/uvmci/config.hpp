// Scenario configuration: flat `key = value` text with unit-suffixed keys.
//
//   # comment
//   r_m = 500
//   theta_T_deg = 45
//   k_a_par_per_km = 0.802
//
// Every dimensioned quantity must carry a unit suffix; unknown keys and keys
// that set the same quantity twice are rejected. serialize() writes the
// canonical form (SI units, radians, 17 significant digits), which parses
// back to an identical ScenarioConfig.
#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "uvmci/atmosphere.hpp"
#include "uvmci/geometry.hpp"
#include "uvmci/mci.hpp"
#include "uvmci/turbulence.hpp"

namespace uvmci {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ScenarioConfig {
  GeometryConfig geometry{};
  double k_s_ray = 0.266e-3;  // 1/m
  double k_s_mie = 0.284e-3;  // 1/m
  double k_a_par = 0.802e-3;  // 1/m
  ScatteringParams scattering{};
  bool include_turbulence_scattering = false;
  TurbulenceModel turbulence{.optical = {}, .regime = FadingRegime::automatic};
  RunOptions run{};

  AtmosphereModel atmosphere() const {
    AtmosphereModel m(k_s_ray, k_s_mie, k_a_par, scattering);
    if (include_turbulence_scattering) m.set_turbulence_scattering(turbulence.optical);
    return m;
  }

  ChannelModel channel() const { return ChannelModel(atmosphere(), turbulence, geometry, run.cdf_resolution); }

  /// Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Shortest decimal text with 17 significant digits; exact round trip for finite doubles.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view text, const std::string& field) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError(field + ": expected a finite number, got '" + std::string(text) + "'");
  return v;
}

inline std::uint64_t parse_u64(std::string_view text, const std::string& field) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec == std::errc() && p == text.data() + text.size()) return v;
  // Accept integral values written in floating form, e.g. 1e6.
  const double d = parse_double(text, field);
  if (d < 0.0 || d != std::floor(d) || d > 1.8e19)
    throw ConfigError(field + ": expected a non-negative integer, got '" + std::string(text) + "'");
  return static_cast<std::uint64_t>(d);
}

inline bool parse_bool(std::string_view text, const std::string& field) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(field + ": expected true or false, got '" + std::string(text) + "'");
}

/// One physical quantity and the spellings it accepts.
struct QuantitySpec {
  std::string base;                              // e.g. "r"
  std::vector<std::pair<std::string, double>> units;  // suffix -> factor to canonical units
  std::function<void(ScenarioConfig&, double)> set;
  std::function<double(const ScenarioConfig&)> get;
};

/// Dimensionless or enumerated settings.
struct SettingSpec {
  std::string key;
  std::function<void(ScenarioConfig&, std::string_view, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

constexpr double kDeg = kPi / 180.0;

inline const std::vector<QuantitySpec>& quantity_specs() {
  static const std::vector<QuantitySpec> specs = [] {
    using C = ScenarioConfig;
    const std::vector<std::pair<std::string, double>> angle{{"rad", 1.0}, {"deg", kDeg}};
    const std::vector<std::pair<std::string, double>> rate{{"per_m", 1.0}, {"per_km", 1e-3}};
    std::vector<QuantitySpec> v;
    v.push_back({"r", {{"m", 1.0}, {"km", 1e3}}, [](C& c, double x) { c.geometry.r = x; },
                 [](const C& c) { return c.geometry.r; }});
    v.push_back({"theta_T", angle, [](C& c, double x) { c.geometry.theta_T = x; },
                 [](const C& c) { return c.geometry.theta_T; }});
    v.push_back({"phi_T", angle, [](C& c, double x) { c.geometry.phi_T = x; },
                 [](const C& c) { return c.geometry.phi_T; }});
    v.push_back({"theta_R", angle, [](C& c, double x) { c.geometry.theta_R = x; },
                 [](const C& c) { return c.geometry.theta_R; }});
    v.push_back({"phi_R", angle, [](C& c, double x) { c.geometry.phi_R = x; },
                 [](const C& c) { return c.geometry.phi_R; }});
    v.push_back({"beta_T", angle, [](C& c, double x) { c.geometry.beta_T = x; },
                 [](const C& c) { return c.geometry.beta_T; }});
    v.push_back({"beta_R", angle, [](C& c, double x) { c.geometry.beta_R = x; },
                 [](const C& c) { return c.geometry.beta_R; }});
    v.push_back({"A_r", {{"m2", 1.0}, {"cm2", 1e-4}}, [](C& c, double x) { c.geometry.A_r = x; },
                 [](const C& c) { return c.geometry.A_r; }});
    v.push_back({"k_s_ray", rate, [](C& c, double x) { c.k_s_ray = x; }, [](const C& c) { return c.k_s_ray; }});
    v.push_back({"k_s_mie", rate, [](C& c, double x) { c.k_s_mie = x; }, [](const C& c) { return c.k_s_mie; }});
    v.push_back({"k_a_par", rate, [](C& c, double x) { c.k_a_par = x; }, [](const C& c) { return c.k_a_par; }});
    v.push_back({"Cn2", {{"m^-2/3", 1.0}}, [](C& c, double x) { c.turbulence.optical.Cn2 = x; },
                 [](const C& c) { return c.turbulence.optical.Cn2; }});
    v.push_back({"L0", {{"m", 1.0}}, [](C& c, double x) { c.turbulence.optical.L0 = x; },
                 [](const C& c) { return c.turbulence.optical.L0; }});
    v.push_back({"d0", {{"m", 1.0}, {"mm", 1e-3}}, [](C& c, double x) { c.turbulence.optical.d0 = x; },
                 [](const C& c) { return c.turbulence.optical.d0; }});
    v.push_back({"lambda", {{"m", 1.0}, {"nm", 1e-9}}, [](C& c, double x) { c.turbulence.optical.lambda = x; },
                 [](const C& c) { return c.turbulence.optical.lambda; }});
    return v;
  }();
  return specs;
}

inline FadingRegime parse_regime(std::string_view t, const std::string& field) {
  if (t == "auto") return FadingRegime::automatic;
  if (t == "ln") return FadingRegime::log_normal;
  if (t == "gg") return FadingRegime::gamma_gamma;
  if (t == "hybrid") return FadingRegime::hybrid;
  throw ConfigError(field + ": expected auto, ln, gg or hybrid, got '" + std::string(t) + "'");
}

inline const std::vector<SettingSpec>& setting_specs() {
  static const std::vector<SettingSpec> specs = [] {
    using C = ScenarioConfig;
    using SV = std::string_view;
    using S = const std::string&;
    std::vector<SettingSpec> v;
    v.push_back({"gamma", [](C& c, SV t, S f) { c.scattering.gamma = parse_double(t, f); },
                 [](const C& c) { return format_double(c.scattering.gamma); }});
    v.push_back({"g", [](C& c, SV t, S f) { c.scattering.g = parse_double(t, f); },
                 [](const C& c) { return format_double(c.scattering.g); }});
    v.push_back({"f", [](C& c, SV t, S f) { c.scattering.f = parse_double(t, f); },
                 [](const C& c) { return format_double(c.scattering.f); }});
    v.push_back({"include_turbulence_scattering",
                 [](C& c, SV t, S f) { c.include_turbulence_scattering = parse_bool(t, f); },
                 [](const C& c) { return std::string(c.include_turbulence_scattering ? "true" : "false"); }});
    v.push_back({"regime", [](C& c, SV t, S f) { c.turbulence.regime = parse_regime(t, f); },
                 [](const C& c) { return std::string(to_string(c.turbulence.regime)); }});
    v.push_back({"ln_convention",
                 [](C& c, SV t, S f) {
                   if (t == "moment_matched") c.turbulence.ln_convention = LogNormalConvention::moment_matched;
                   else if (t == "literal") c.turbulence.ln_convention = LogNormalConvention::literal;
                   else throw ConfigError(f + ": expected moment_matched or literal, got '" + std::string(t) + "'");
                 },
                 [](const C& c) { return std::string(to_string(c.turbulence.ln_convention)); }});
    v.push_back({"samples", [](C& c, SV t, S f) { c.run.samples = parse_u64(t, f); },
                 [](const C& c) { return std::to_string(c.run.samples); }});
    v.push_back({"orders",
                 [](C& c, SV t, S f) {
                   const auto n = parse_u64(t, f);
                   if (n > 64) throw ConfigError(f + ": at most 64 scattering orders are supported");
                   c.run.orders = static_cast<int>(n);
                 },
                 [](const C& c) { return std::to_string(c.run.orders); }});
    v.push_back({"seed", [](C& c, SV t, S f) { c.run.seed = parse_u64(t, f); },
                 [](const C& c) { return std::to_string(c.run.seed); }});
    v.push_back({"workers",
                 [](C& c, SV t, S f) {
                   const auto n = parse_u64(t, f);
                   if (n > 4096) throw ConfigError(f + ": at most 4096 workers");
                   c.run.workers = static_cast<unsigned>(n);
                 },
                 [](const C& c) { return std::to_string(c.run.workers); }});
    v.push_back({"eta_max",
                 [](C& c, SV t, S f) {
                   if (t == "auto") c.run.eta_max.reset();
                   else c.run.eta_max = parse_double(t, f);
                 },
                 [](const C& c) { return c.run.eta_max ? format_double(*c.run.eta_max) : std::string("auto"); }});
    v.push_back({"eta_points",
                 [](C& c, SV t, S f) {
                   if (t == "auto") c.run.eta_points.reset();
                   else c.run.eta_points = static_cast<std::size_t>(parse_u64(t, f));
                 },
                 [](const C& c) {
                   return c.run.eta_points ? std::to_string(*c.run.eta_points) : std::string("auto");
                 }});
    v.push_back({"pdf_mode",
                 [](C& c, SV t, S f) {
                   if (t == "histogram") c.run.pdf_mode = SigmaAccumulator::Mode::histogram;
                   else if (t == "exact") c.run.pdf_mode = SigmaAccumulator::Mode::exact;
                   else throw ConfigError(f + ": expected histogram or exact, got '" + std::string(t) + "'");
                 },
                 [](const C& c) {
                   return std::string(c.run.pdf_mode == SigmaAccumulator::Mode::exact ? "exact" : "histogram");
                 }});
    v.push_back({"cdf_resolution",
                 [](C& c, SV t, S f) { c.run.cdf_resolution = static_cast<std::size_t>(parse_u64(t, f)); },
                 [](const C& c) { return std::to_string(c.run.cdf_resolution); }});
    return v;
  }();
  return specs;
}

}  // namespace detail

inline void ScenarioConfig::validate() const {
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  wrap("geometry", [&] { geometry.validate(); });
  wrap("atmosphere", [&] { (void)atmosphere(); });
  wrap("turbulence", [&] { turbulence.optical.validate(); });
  if (run.samples < 1) throw ConfigError("samples: must be >= 1");
  if (run.orders < 1) throw ConfigError("orders: must be >= 1");
  if (run.workers < 1) throw ConfigError("workers: must be >= 1");
  if (run.eta_max && !(*run.eta_max > 1.0)) throw ConfigError("eta_max: must be > 1");
  if (run.eta_points && (*run.eta_points < 16 || *run.eta_points > (1u << 22)))
    throw ConfigError("eta_points: must lie in [16, 4194304]");
  if (run.cdf_resolution < 256 || run.cdf_resolution > (1u << 22))
    throw ConfigError("cdf_resolution: must lie in [256, 4194304]");
  if (run.pdf_mode == SigmaAccumulator::Mode::exact && run.samples > 100'000)
    throw ConfigError("pdf_mode: exact mode is limited to samples <= 100000");
}

/// Applies one `key = value` assignment. `seen` tracks the quantities already
/// set so two spellings of the same quantity are caught.
inline void apply_setting(ScenarioConfig& config, std::string_view key, std::string_view value,
                          std::map<std::string, std::string>& seen, const std::string& where = {}) {
  const std::string k(key);
  const std::string field = where.empty() ? k : where + ": " + k;
  auto claim = [&](const std::string& quantity) {
    const auto [it, fresh] = seen.emplace(quantity, k);
    if (!fresh) throw ConfigError(field + ": '" + quantity + "' already set by '" + it->second + "'");
  };
  for (const auto& q : detail::quantity_specs()) {
    if (k == q.base) {
      std::string options;
      for (const auto& [u, _] : q.units) options += (options.empty() ? "" : ", ") + q.base + "_" + u;
      throw ConfigError(field + ": missing unit suffix (use one of " + options + ")");
    }
    for (const auto& [unit, factor] : q.units) {
      if (k == q.base + "_" + unit) {
        claim(q.base);
        q.set(config, detail::parse_double(value, field) * factor);
        return;
      }
    }
  }
  for (const auto& s : detail::setting_specs()) {
    if (k == s.key) {
      claim(s.key);
      s.set(config, value, field);
      return;
    }
  }
  throw ConfigError(field + ": unknown key");
}

/// Parses config text; unspecified fields keep their defaults.
inline ScenarioConfig parse_config(std::istream& in, const std::string& source = "config") {
  ScenarioConfig config;
  std::map<std::string, std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text(line);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const auto key = detail::trim(text.substr(0, eq));
    const auto value = detail::trim(text.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(where + ": expected 'key = value'");
    apply_setting(config, key, value, seen, where);
  }
  config.validate();
  return config;
}

inline ScenarioConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "config");
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

/// Canonical text: one `key = value` line per field in a fixed order.
inline std::string serialize(const ScenarioConfig& config) {
  std::string out;
  for (const auto& q : detail::quantity_specs())
    out += q.base + "_" + q.units.front().first + " = " + format_double(q.get(config)) + "\n";
  for (const auto& s : detail::setting_specs()) out += s.key + " = " + s.get(config) + "\n";
  return out;
}

/// 64-bit FNV-1a over the canonical serialization.
inline std::uint64_t config_hash(const ScenarioConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : serialize(config)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace uvmci
