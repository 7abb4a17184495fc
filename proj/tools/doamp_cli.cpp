// doamp: command-line front end over the C API.
//
//   doamp run --config exp.cfg [--set key=value]... [--output dir]
//   doamp sweep --grid grid.cfg [--set key=value]... [--workers n] [--out sweep.csv]
//   doamp inspect-channel --config exp.cfg [--samples n] [--out spectrum.csv]

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "doamp.h"

namespace {

int report_failure(doamp_status status, const char* what) {
  std::cerr << "doamp: " << what << ": " << doamp_status_string(status);
  const char* detail = doamp_last_error();
  if (detail && *detail) std::cerr << " (" << detail << ")";
  std::cerr << "\n";
  return 1;
}

// Splits "key=value"; returns false when there is no '='.
bool split_setting(const std::string& kv, std::string& key, std::string& value) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) return false;
  key = kv.substr(0, eq);
  value = kv.substr(eq + 1);
  return true;
}

doamp_config* load_config(const std::string& path, const std::vector<std::string>& sets) {
  doamp_config* cfg = nullptr;
  doamp_status st = path.empty() ? doamp_config_new(&cfg) : doamp_config_load(path.c_str(), &cfg);
  if (st != DOAMP_OK) {
    report_failure(st, "loading config");
    return nullptr;
  }
  for (const auto& kv : sets) {
    std::string key, value;
    if (!split_setting(kv, key, value)) {
      std::cerr << "doamp: --set expects key=value, got '" << kv << "'\n";
      doamp_config_free(cfg);
      return nullptr;
    }
    st = doamp_config_set(cfg, key.c_str(), value.c_str());
    if (st != DOAMP_OK) {
      report_failure(st, ("setting " + key).c_str());
      doamp_config_free(cfg);
      return nullptr;
    }
  }
  return cfg;
}

bool emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return true;
  }
  std::ofstream out(path);
  if (!out) {
    std::cerr << "doamp: cannot write " << path << "\n";
    return false;
  }
  out << text;
  return static_cast<bool>(out);
}

int cmd_run(const std::string& config, const std::vector<std::string>& sets,
            const std::string& output) {
  doamp_config* cfg = load_config(config, sets);
  if (!cfg) return 1;
  if (!output.empty()) doamp_config_set(cfg, "output", output.c_str());
  doamp_report* report = nullptr;
  doamp_status st = doamp_run(cfg, &report);
  doamp_config_free(cfg);
  if (st != DOAMP_OK) return report_failure(st, "run");
  char* csv = nullptr;
  st = doamp_report_csv(report, &csv);
  size_t failures = 0;
  doamp_report_summary(report, nullptr, nullptr, nullptr, nullptr, &failures);
  doamp_report_free(report);
  if (st != DOAMP_OK) return report_failure(st, "formatting report");
  std::cout << csv;
  doamp_string_free(csv);
  return failures == 0 ? 0 : 2;
}

int cmd_sweep(const std::string& grid, const std::vector<std::string>& sets, std::size_t workers,
              const std::string& out) {
  std::vector<const char*> overrides;
  for (const auto& kv : sets) overrides.push_back(kv.c_str());
  char* csv = nullptr;
  const doamp_status st =
      doamp_sweep(grid.c_str(), overrides.data(), overrides.size(), workers, &csv);
  if (st != DOAMP_OK) return report_failure(st, "sweep");
  const bool ok = emit(csv, out);
  doamp_string_free(csv);
  return ok ? 0 : 1;
}

int cmd_inspect(const std::string& config, const std::vector<std::string>& sets,
                std::size_t trial, std::size_t dim, std::size_t samples, std::uint64_t ks_seed,
                const std::string& out, const std::string& export_path) {
  doamp_config* cfg = load_config(config, sets);
  if (!cfg) return 1;
  doamp_channel* ch = nullptr;
  doamp_status st = doamp_channel_from_config(cfg, trial, dim, &ch);
  if (st != DOAMP_OK) {
    doamp_config_free(cfg);
    return report_failure(st, "generating channel");
  }
  size_t rows = 0, cols = 0, rank = 0;
  double kappa = 0.0;
  doamp_channel_dims(ch, &rows, &cols);
  doamp_channel_singular_values(ch, nullptr, 0, &rank);
  std::vector<double> sv(rank);
  doamp_channel_singular_values(ch, sv.data(), sv.size(), &rank);
  doamp_channel_condition_number(ch, &kappa);

  std::string spectrum = "index,singular_value\n";
  char line[64];
  for (std::size_t i = 0; i < sv.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.17g\n", i, sv[i]);
    spectrum += line;
  }
  int rc = emit(spectrum, out) ? 0 : 1;
  std::ostream& info = (out.empty() || out == "-") ? std::cerr : std::cout;
  info << "rows=" << rows << " cols=" << cols << " rank=" << rank
       << " condition_number=" << kappa << "\n";

  if (!export_path.empty()) {
    st = doamp_channel_export(ch, export_path.c_str());
    if (st != DOAMP_OK) rc = report_failure(st, "exporting channel");
  }
  doamp_channel_free(ch);

  if (samples > 0) {
    double stat = 0.0, p = 0.0;
    st = doamp_fading_ks(cfg, samples, ks_seed, &stat, &p);
    if (st == DOAMP_OK) {
      info << "rayleigh_ks_statistic=" << stat << " rayleigh_ks_p_value=" << p
           << " samples=" << samples << "\n";
    } else if (st != DOAMP_ERR_INVALID_PARAMETER) {
      rc = report_failure(st, "Rayleigh fit");
    }
  }
  doamp_config_free(cfg);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-multiplexing transmission with an iterative OAMP receiver"};
  app.require_subcommand(1);
  app.set_version_flag("--version", doamp_version());

  std::string config, grid, output, out, export_path;
  std::vector<std::string> sets;
  std::size_t workers = 0, trial = 0, dim = 0, samples = 100000;
  std::uint64_t ks_seed = 1;

  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("-c,--config", config, "Config file (key=value or JSON)");
  run->add_option("-s,--set", sets, "Override a config key (key=value)");
  run->add_option("-o,--output", output, "Output directory for traces and reconstructions");

  auto* sw = app.add_subcommand("sweep", "Run a grid of configs");
  sw->add_option("-g,--grid", grid, "Grid file; beta, sigma, channel and prior accept lists")
      ->required();
  sw->add_option("-s,--set", sets, "Override a key on every grid point (key=value)");
  sw->add_option("-w,--workers", workers, "Concurrent grid points (0 = all cores)");
  sw->add_option("-o,--out", out, "Consolidated CSV path (default stdout)");

  auto* insp = app.add_subcommand("inspect-channel", "Singular spectrum and Rayleigh fit");
  insp->add_option("-c,--config", config, "Config file (key=value or JSON)");
  insp->add_option("-s,--set", sets, "Override a config key (key=value)");
  insp->add_option("--trial", trial, "Trial index selecting the channel seed");
  insp->add_option("--dim", dim, "Channel dimension (default: compressed length)");
  insp->add_option("--samples", samples, "Tap amplitudes for the Rayleigh KS test (0 skips)");
  insp->add_option("--ks-seed", ks_seed, "Seed for the KS tap draws");
  insp->add_option("-o,--out", out, "Spectrum CSV path (default stdout)");
  insp->add_option("--export", export_path, "Write the dense channel matrix (OAMPMAT1)");

  CLI11_PARSE(app, argc, argv);

  if (*run) return cmd_run(config, sets, output);
  if (*sw) return cmd_sweep(grid, sets, workers, out);
  if (*insp) return cmd_inspect(config, sets, trial, dim, samples, ks_seed, out, export_path);
  return 1;
}
