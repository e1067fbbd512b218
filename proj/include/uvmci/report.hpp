// Command implementations and their plain-text reports.
//
// A report is a `#`-commented metadata block followed by data sections:
//
//   # uvmci 0.1.0
//   # command = scenario
//   # config_hash = ...
//   ...
//   [orders]
//   n,P_n,stderr_P,path_loss_db,count,sigma2_n
//   1,2.4e-12,...
//
// Numbers use 17 significant digits and nothing depends on wall-clock time,
// so reruns with the same config, seed and worker count are byte-identical.
#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "uvmci/config.hpp"
#include "uvmci/measurements.hpp"
#include "uvmci/mci.hpp"

#ifndef UVMCI_VERSION
#define UVMCI_VERSION "0.1.0"
#endif

namespace uvmci {

struct Section {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Report {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> notes;
  std::string config_text;
  std::vector<Section> sections;

  const Section* find(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }

  void write(std::ostream& out) const {
    out << "# uvmci " << UVMCI_VERSION << "\n";
    for (const auto& [k, v] : meta) out << "# " << k << " = " << v << "\n";
    for (const auto& n : notes) out << "# note: " << n << "\n";
    if (!config_text.empty()) {
      out << "# config:\n";
      std::istringstream lines(config_text);
      for (std::string l; std::getline(lines, l);) out << "#   " << l << "\n";
    }
    for (const auto& s : sections) {
      out << "[" << s.name << "]\n";
      for (std::size_t i = 0; i < s.columns.size(); ++i) out << (i ? "," : "") << s.columns[i];
      out << "\n";
      for (const auto& row : s.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
      }
    }
  }

  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }
};

/// Everything after the metadata block, i.e. the lines that carry results.
inline std::string data_sections(const std::string& report_text) {
  std::istringstream in(report_text);
  std::string out;
  for (std::string l; std::getline(in, l);)
    if (l.empty() || l[0] != '#') out += l + "\n";
  return out;
}

namespace detail {
inline Report report_header(const std::string& command, const ScenarioConfig& config) {
  Report r;
  r.meta = {{"command", command},
            {"config_hash", hex64(config_hash(config))},
            {"seed", std::to_string(config.run.seed)},
            {"workers", std::to_string(config.run.workers)},
            {"samples", std::to_string(config.run.samples)},
            {"orders", std::to_string(config.run.orders)},
            {"block_size", std::to_string(kBlockSize)}};
  r.config_text = serialize(config);
  return r;
}

inline double total_stderr(const ChannelEstimate& ch) {
  double v = 0.0;
  for (const auto& o : ch.orders) v += o.stderr_P * o.stderr_P;
  return std::sqrt(v);
}
}  // namespace detail

/// Runs the channel estimators on `config` and formats the result.
inline Report run_scenario(const ScenarioConfig& config) {
  config.validate();
  const ChannelModel model = config.channel();
  const ChannelEstimate ch = estimate_channel(model, config.run);

  Report r = detail::report_header("scenario", config);
  r.meta.emplace_back("regime", std::string(to_string(model.turbulence.regime)));
  for (const auto& w : ch.warnings) r.notes.push_back(w);

  Section orders{"orders", {"n", "P_n", "stderr_P", "path_loss_db", "count", "sigma2_n"}, {}};
  for (const auto& o : ch.orders)
    orders.rows.push_back({std::to_string(o.n), format_double(o.P_n), format_double(o.stderr_P),
                           o.P_n > 0.0 ? format_double(path_loss_db(o.P_n)) : "inf", std::to_string(o.count),
                           o.sigma2_n ? format_double(*o.sigma2_n) : "undefined"});
  r.sections.push_back(std::move(orders));

  Section totals{"totals", {"P_tot", "stderr_P_tot", "path_loss_db", "sigma2_tot"}, {}};
  totals.rows.push_back({format_double(ch.P_tot), format_double(detail::total_stderr(ch)),
                         format_double(path_loss_db(ch.P_tot)), format_double(ch.sigma2_tot)});
  r.sections.push_back(std::move(totals));

  if (ch.sigma2_tot == 0.0) {
    r.notes.push_back("sigma2_tot = 0 (no turbulence): fading pdf omitted");
    return r;
  }
  const auto& g = ch.pdf_grid;
  Section fit{"pdf_fit", {"eta_max", "points", "mean", "variance", "ln_mu", "ln_sigma", "ln_ks", "gauss_mu",
                          "gauss_sigma", "gauss_ks"}, {}};
  const auto ln = fit_log_normal(g);
  const auto ga = fit_gaussian(g);
  fit.rows.push_back({format_double(g.eta_max), std::to_string(g.size()), format_double(g.mean()),
                      format_double(g.variance()), format_double(ln.mu), format_double(ln.sigma),
                      format_double(ln.ks), format_double(ga.mu), format_double(ga.sigma), format_double(ga.ks)});
  r.sections.push_back(std::move(fit));

  Section pdf{"pdf", {"eta", "density"}, {}};
  pdf.rows.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) pdf.rows.push_back({format_double(g.node(i)), format_double(g.density[i])});
  r.sections.push_back(std::move(pdf));
  return r;
}

enum class SweepAxis { distance, zenith, cn2 };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::distance: return "distance_m";
    case SweepAxis::zenith: return "zenith_deg";
    case SweepAxis::cn2: return "Cn2_m^-2/3";
  }
  return "?";
}

/// Applies one sweep value: distance in m, zenith in degrees (both ends), Cn2 in m^-2/3.
inline void apply_sweep_value(ScenarioConfig& config, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::distance: config.geometry.r = value; break;
    case SweepAxis::zenith: config.geometry.theta_T = config.geometry.theta_R = value * kPi / 180.0; break;
    case SweepAxis::cn2: config.turbulence.optical.Cn2 = value; break;
  }
}

/// One independent channel estimate per value, row i seeded with derive_seed(seed, i).
/// A failing row is recorded with its error and the sweep carries on.
inline Report run_sweep(const ScenarioConfig& config, SweepAxis axis, const std::vector<double>& values,
                        std::size_t* failed_rows = nullptr) {
  if (values.empty()) throw ConfigError("sweep: need at least one value");
  config.validate();
  Report r = detail::report_header("sweep", config);
  r.meta.emplace_back("axis", std::string(to_string(axis)));
  Section rows{"sweep",
               {"index", std::string(to_string(axis)), "seed", "regime", "status", "P_tot", "stderr_P_tot",
                "path_loss_db", "sigma2_tot", "message"},
               {}};
  std::size_t failed = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    ScenarioConfig row = config;
    row.run.seed = derive_seed(config.run.seed, i);
    apply_sweep_value(row, axis, values[i]);
    std::vector<std::string> cells{std::to_string(i), format_double(values[i]), std::to_string(row.run.seed)};
    try {
      row.validate();
      const ChannelModel model = row.channel();
      const ChannelEstimate ch = estimate_channel(model, row.run);
      cells.insert(cells.end(), {std::string(to_string(model.turbulence.regime)), "ok", format_double(ch.P_tot),
                                 format_double(detail::total_stderr(ch)), format_double(path_loss_db(ch.P_tot)),
                                 format_double(ch.sigma2_tot), ""});
    } catch (const std::exception& e) {
      ++failed;
      std::string msg = e.what();
      for (char& c : msg)
        if (c == ',' || c == '\n') c = ';';
      cells.insert(cells.end(), {"", dynamic_cast<const ConfigError*>(&e) ? "invalid" : "failed", "", "", "", "", msg});
    }
    rows.rows.push_back(std::move(cells));
  }
  r.sections.push_back(std::move(rows));
  if (failed_rows) *failed_rows = failed;
  return r;
}

/// Conventional-simulation spread against the MCI variance estimate for each M.
inline Report run_mcs_compare(const ScenarioConfig& config, const std::vector<std::uint64_t>& M_list, int reps) {
  config.validate();
  const ChannelModel model = config.channel();
  const McsCompareResult mcs = mcs_variance_experiment(M_list, reps, model, config.run);

  Report r = detail::report_header("mcs-compare", config);
  r.meta.emplace_back("reps", std::to_string(reps));
  r.meta.emplace_back("regime", std::string(to_string(model.turbulence.regime)));
  Section rows{"mcs",
               {"M", "conventional_mean_P", "conventional_var_P", "conventional_norm_var", "mci_seed", "mci_P_tot",
                "mci_sigma2_tot"},
               {}};
  for (std::size_t i = 0; i < mcs.points.size(); ++i) {
    const auto& p = mcs.points[i];
    RunOptions opts = config.run;
    opts.samples = p.M;
    opts.seed = derive_seed(config.run.seed, i);
    const ChannelEstimate ch = estimate_channel(model, opts);
    rows.rows.push_back({std::to_string(p.M), format_double(p.mean_power), format_double(p.variance),
                         format_double(p.normalized_variance), std::to_string(opts.seed), format_double(ch.P_tot),
                         format_double(ch.sigma2_tot)});
  }
  r.sections.push_back(std::move(rows));
  r.sections.push_back({"fit", {"slope", "slope_stderr"}, {{format_double(mcs.slope), format_double(mcs.slope_stderr)}}});
  return r;
}

/// Angle grid for phase tables: 0 followed by `points` log-spaced angles from theta_min to pi.
inline std::vector<double> phase_angle_grid(double theta_min = 1e-8, std::size_t points = 1024) {
  if (!(theta_min > 0.0 && theta_min < kPi) || points < 2)
    throw std::invalid_argument("phase grid: need 0 < theta_min < pi and >= 2 points");
  std::vector<double> t{0.0};
  const double a = std::log(theta_min), b = std::log(kPi);
  for (std::size_t i = 0; i < points; ++i)
    t.push_back(std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1)));
  t.back() = kPi;
  return t;
}

/// Phase functions of the configured atmosphere plus the turbulence phase
/// function for each requested eddy size d0 [m].
inline Report phase_function_report(const ScenarioConfig& config, const std::vector<double>& thetas,
                                    const std::vector<double>& d0_list) {
  config.validate();
  const AtmosphereModel atm = config.atmosphere();
  Report r = detail::report_header("phase", config);
  Section s{"phase", {"theta_rad", "p_ray", "p_mie", "p_tot"}, {}};
  std::vector<TurbulenceOpticalParams> tur;
  for (double d0 : d0_list) {
    TurbulenceOpticalParams t = config.turbulence.optical;
    t.d0 = d0;
    t.validate();
    tur.push_back(t);
    s.columns.push_back("p_tur_d0_" + format_double(d0) + "m");
  }
  for (double th : thetas) {
    std::vector<std::string> row{format_double(th), format_double(rayleigh_phase(th, atm.scattering())),
                                 format_double(mie_phase(th, atm.scattering())), format_double(total_phase(th, atm))};
    for (const auto& t : tur) row.push_back(format_double(turbulence_phase(th, t)));
    s.rows.push_back(std::move(row));
  }
  r.sections.push_back(std::move(s));
  return r;
}

inline Report analyze_report(const MeasurementLog& log, std::size_t bins, const std::string& source) {
  const MeasurementStats st = analyze_measurements(log.value, bins);
  Report r;
  r.meta = {{"command", "analyze"}, {"input", source}, {"bins", std::to_string(bins)}};
  r.notes.push_back("samples are normalized by their mean before histogramming and fitting");
  r.sections.push_back({"summary",
                        {"count", "mean", "scintillation_index", "gauss_mu", "gauss_sigma", "gauss_ks"},
                        {{std::to_string(st.count), format_double(st.mean), format_double(st.scintillation_index),
                          format_double(st.gaussian.mu), format_double(st.gaussian.sigma),
                          format_double(st.gaussian.ks)}}});
  Section h{"histogram", {"lo", "hi", "density"}, {}};
  for (const auto& b : st.histogram) h.rows.push_back({format_double(b.lo), format_double(b.hi), format_double(b.density)});
  r.sections.push_back(std::move(h));
  return r;
}

}  // namespace uvmci
