// Command-line front end: scenario, sweep, mcs-compare, phase, analyze.
//
// Settings are resolved as: built-in defaults < --config file < --set
// key=value < UVMCI_* environment variables < explicit flags.
// Exit codes: 0 success, 1 invalid input, 2 numerical failure.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uvmci/uvmci.hpp"

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitNumerical = 2;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> set;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> samples;
  std::optional<int> orders;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool run_flags = true) {
  cmd->add_option("--config", o.config_path, "Scenario config file (key = value)")->envname("UVMCI_CONFIG");
  cmd->add_option("--set", o.set, "Override one config entry, e.g. --set r_m=300 (repeatable)");
  cmd->add_option("--out", o.out, "Write the report here instead of stdout")->envname("UVMCI_OUT");
  if (!run_flags) return;
  cmd->add_option("--seed", o.seed, "Base random seed")->envname("UVMCI_SEED");
  cmd->add_option("--workers", o.workers, "Worker threads (results do not depend on it)")
      ->envname("UVMCI_WORKERS")
      ->check(CLI::Range(1u, 4096u));
  cmd->add_option("--samples", o.samples, "Paths per scattering order (M)")
      ->envname("UVMCI_SAMPLES")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--orders", o.orders, "Scattering orders (N)")->envname("UVMCI_ORDERS")->check(CLI::Range(1, 64));
}

uvmci::ScenarioConfig resolve_config(const CommonOptions& o) {
  uvmci::ScenarioConfig c = o.config_path.empty() ? uvmci::ScenarioConfig{} : uvmci::load_config(o.config_path);
  // Keys from --set may legitimately re-set what the file set, so they get their own ledger.
  std::map<std::string, std::string> seen;
  for (const auto& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw uvmci::ConfigError("--set: expected key=value, got '" + kv + "'");
    uvmci::apply_setting(c, uvmci::detail::trim(std::string_view(kv).substr(0, eq)),
                         uvmci::detail::trim(std::string_view(kv).substr(eq + 1)), seen, "--set");
  }
  if (o.seed) c.run.seed = *o.seed;
  if (o.workers) c.run.workers = *o.workers;
  if (o.samples) c.run.samples = *o.samples;
  if (o.orders) c.run.orders = *o.orders;
  c.validate();
  return c;
}

void emit(const uvmci::Report& report, const std::string& out) {
  if (out.empty() || out == "-") {
    report.write(std::cout);
    return;
  }
  std::ofstream f(out);
  if (!f) throw uvmci::ConfigError("cannot open output file '" + out + "'");
  report.write(f);
  if (!f) throw std::runtime_error("failed writing '" + out + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turbulent multiple-scattering UV channel simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("uvmci ") + UVMCI_VERSION);

  CommonOptions scenario_opts;
  auto* scenario = app.add_subcommand("scenario", "Estimate power, turbulent variance and fading pdf");
  add_common(scenario, scenario_opts);

  CommonOptions sweep_opts;
  std::vector<double> distances, zeniths, cn2s;
  auto* sweep = app.add_subcommand("sweep", "Repeat the scenario along one parameter axis");
  add_common(sweep, sweep_opts);
  auto* ax_d = sweep->add_option("--distance-m", distances, "Baseline distances [m]")->delimiter(',');
  auto* ax_z = sweep->add_option("--zenith-deg", zeniths, "Tx and Rx zenith angles [deg]")->delimiter(',');
  auto* ax_c = sweep->add_option("--cn2", cn2s, "Refractive-index structure parameters [m^-2/3]")->delimiter(',');
  ax_d->excludes(ax_z)->excludes(ax_c);
  ax_z->excludes(ax_c);

  CommonOptions mcs_opts;
  std::vector<std::uint64_t> m_list{100, 1000, 10000, 100000};
  int reps = 100;
  auto* mcs = app.add_subcommand("mcs-compare", "Conventional Monte-Carlo spread against the MCI estimate");
  add_common(mcs, mcs_opts);
  mcs->add_option("--m-list", m_list, "Sample sizes M to compare")->delimiter(',')->capture_default_str();
  mcs->add_option("--reps", reps, "Repetitions per M")->capture_default_str();

  CommonOptions phase_opts;
  std::vector<double> d0_list{1e-4, 1e-3, 1e-2};
  double theta_min = 1e-8;
  std::size_t points = 1024;
  auto* phase = app.add_subcommand("phase", "Tabulate the phase functions");
  add_common(phase, phase_opts, false);
  phase->add_option("--d0-m", d0_list, "Eddy sizes for the turbulence phase columns [m]")
      ->delimiter(',')
      ->capture_default_str();
  phase->add_option("--theta-min", theta_min, "Smallest nonzero angle [rad]")->capture_default_str();
  phase->add_option("--points", points, "Log-spaced angles between theta-min and pi")->capture_default_str();

  std::string input;
  std::string analyze_out;
  std::size_t bins = 50;
  auto* analyze = app.add_subcommand("analyze", "Statistics of a recorded receiver signal");
  analyze->add_option("input", input, "One- or two-column text file (time, value)")->required();
  analyze->add_option("--bins", bins, "Histogram bins")->capture_default_str()->check(CLI::Range(1, 100000));
  analyze->add_option("--out", analyze_out, "Write the report here instead of stdout")->envname("UVMCI_OUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*scenario) {
      emit(uvmci::run_scenario(resolve_config(scenario_opts)), scenario_opts.out);
    } else if (*sweep) {
      uvmci::SweepAxis axis;
      const std::vector<double>* values;
      if (!distances.empty()) axis = uvmci::SweepAxis::distance, values = &distances;
      else if (!zeniths.empty()) axis = uvmci::SweepAxis::zenith, values = &zeniths;
      else if (!cn2s.empty()) axis = uvmci::SweepAxis::cn2, values = &cn2s;
      else throw uvmci::ConfigError("sweep: give one of --distance-m, --zenith-deg, --cn2");
      std::size_t failed = 0;
      emit(uvmci::run_sweep(resolve_config(sweep_opts), axis, *values, &failed), sweep_opts.out);
      if (failed > 0) std::cerr << "uvmci: " << failed << " of " << values->size() << " sweep rows failed\n";
      if (failed == values->size()) return kExitNumerical;
    } else if (*mcs) {
      if (reps < 30) throw uvmci::ConfigError("--reps: need at least 30 repetitions");
      emit(uvmci::run_mcs_compare(resolve_config(mcs_opts), m_list, reps), mcs_opts.out);
    } else if (*phase) {
      emit(uvmci::phase_function_report(resolve_config(phase_opts), uvmci::phase_angle_grid(theta_min, points),
                                        d0_list),
           phase_opts.out);
    } else if (*analyze) {
      std::ifstream in(input);
      if (!in) throw uvmci::ConfigError("cannot open measurement file '" + input + "'");
      emit(uvmci::analyze_report(uvmci::parse_measurements(in), bins, input), analyze_out);
    }
  } catch (const uvmci::NumericalError& e) {
    std::cerr << "uvmci: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const uvmci::GridOverflowError& e) {
    std::cerr << "uvmci: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "uvmci: invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::domain_error& e) {
    std::cerr << "uvmci: invalid input: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "uvmci: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
