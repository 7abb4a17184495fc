#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "doamp/channel.hpp"
#include "doamp/diffusion.hpp"
#include "doamp/metrics.hpp"
#include "doamp/nle.hpp"
#include "doamp/oamp.hpp"

namespace doamp {

enum class SourceKind { kGaussian, kGaussMixture, kPiecewiseConstant, kFile };

struct SourceSpec {
  SourceKind kind = SourceKind::kGaussMixture;
  std::string path;
  /// Synthetic sources: length n, laid out as rows x cols when both are set.
  std::size_t n = 4096;
  std::size_t rows = 0;
  std::size_t cols = 0;
  GaussMixture mixture{{0.7, 0.3}, {0.05, 0.8}, {0.001, 0.005}};
  /// Piecewise-constant: number of segments; levels are uniform on [0, 1].
  std::size_t segments = 16;
};

struct SourceSignal {
  Vec values;
  ImageShape shape;
  bool is_image = false;
};

SourceSignal load_source(const SourceSpec& spec, std::uint64_t seed);

enum class PriorKind {
  kAnalytic,
  kDdim,
  kFlowMatching,
  kDctThreshold,
  kBridge,
  kIdentity,
  kLmmse,
};

const char* to_string(PriorKind k);
PriorKind parse_prior_kind(const std::string& s);

struct PriorSpec {
  PriorKind kind = PriorKind::kAnalytic;
  /// Defaults to the source mixture for synthetic sources.
  std::optional<GaussMixture> mixture;
  std::size_t ddim_steps = 50;
  DdimMode ddim_mode = DdimMode::kFullTrajectory;
  std::size_t fm_steps = 20;
  ThresholdRule dct_rule = ThresholdRule::kUniversal;
  double dct_multiplier = 1.0;
  std::string endpoint;
  std::size_t timeout_ms = 5000;
  TimeConvention bridge_time = TimeConvention::kDdim;
};

struct Seeds {
  std::uint64_t source = 4;
  std::uint64_t op = 1;
  std::uint64_t channel = 2;
  std::uint64_t noise = 3;
};

struct ExperimentConfig {
  std::string name = "run";
  SourceSpec source;
  double beta = 0.5;
  double sigma = 0.05;
  ChannelSpec channel;  // dim, sigma2 and seed are filled per trial
  PriorSpec prior;
  ReceiverConfig receiver;
  Seeds seeds;
  std::size_t num_trials = 1;
  /// Empty disables file output. Relative paths resolve against
  /// $DOAMP_OUTPUT_ROOT when it is set.
  std::string output;

  void validate() const;
  /// Applies one key=value setting; unknown keys throw kInvalidParameter.
  void set(const std::string& key, const std::string& value);
  std::string to_json() const;
};

/// Flat settings in file order. JSON objects are flattened with dotted keys,
/// arrays become comma-separated values.
using Settings = std::vector<std::pair<std::string, std::string>>;
Settings parse_settings(const std::string& text);
Settings read_settings_file(const std::string& path);

ExperimentConfig config_from_settings(const Settings& settings);

/// Keys whose comma-separated values span a sweep grid.
bool is_grid_axis(const std::string& key);
/// Cartesian product over the grid axes (beta, sigma, channel, prior).
std::vector<ExperimentConfig> expand_grid(const Settings& settings);

std::filesystem::path resolve_output(const std::string& output);

struct TrialResult {
  std::size_t trial = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::size_t iterations = 0;
  std::uint64_t nfe = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::string error;
  IterationTrace trace;
  Vec estimate;
};

struct MetricReport {
  std::vector<TrialResult> trials;
  std::size_t m = 0;
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
  double iterations_mean = 0.0;
  double nfe_mean = 0.0;
  std::size_t failures = 0;
};

/// Builds the NLE for a config; returns null for the LMMSE-only baseline.
std::unique_ptr<NlePrior> make_prior(const PriorSpec& spec, const SourceSpec& source,
                                     const ImageShape& shape);

/// One full trial: operator, channel, transmission, receiver and metrics.
TrialResult run_trial(const ExperimentConfig& cfg, std::size_t trial);

MetricReport run_experiment(const ExperimentConfig& cfg);

/// beta,sigma,channel,prior,m,trials,psnr_mean,psnr_std,ssim_mean,ssim_std,
/// iters_mean,nfe_mean,failures
std::string summary_header();
std::string summary_row(const ExperimentConfig& cfg, const MetricReport& report);

/// Runs grid points on up to `workers` threads (0 = hardware concurrency);
/// returns the consolidated CSV, one row per point ordered by (beta, sigma).
std::string sweep(std::vector<ExperimentConfig> grid, std::size_t workers = 0);

/// Fading taps normalized by their tap power, pooled across independent
/// seeds until `samples` amplitudes are collected.
std::vector<double> fading_amplitudes(const FadingProfile& profile, std::size_t samples,
                                      std::uint64_t seed);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
  std::size_t samples = 0;
};

/// One-sample Kolmogorov-Smirnov test of normalized amplitudes against the
/// unit-power Rayleigh CDF 1 - exp(-r^2).
KsResult rayleigh_ks_test(std::vector<double> amplitudes);

/// Asymptotic Kolmogorov survival function P(K > x).
double kolmogorov_survival(double x);

}  // namespace doamp
