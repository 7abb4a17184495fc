#include "doamp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "doamp/bridge.hpp"
#include "doamp/csv.hpp"
#include "doamp/diffusion.hpp"
#include "doamp/errors.hpp"
#include "doamp/io.hpp"
#include "doamp/rm_operator.hpp"
#include "doamp/rng.hpp"
#include "json.hpp"

namespace doamp {

// ---------------------------------------------------------------------------
// Sources

namespace {

Vec draw_mixture(const GaussMixture& mix, std::size_t n, CounterRng& rng) {
  Vec out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < mix.weights.size() && u >= mix.weights[k]) {
      u -= mix.weights[k];
      ++k;
    }
    out[static_cast<Eigen::Index>(i)] = mix.means[k] + std::sqrt(mix.variances[k]) * rng.normal();
  }
  return out;
}

Vec draw_piecewise(std::size_t n, std::size_t segments, CounterRng& rng) {
  segments = std::clamp<std::size_t>(segments, 1, n);
  // Breakpoints: segments - 1 distinct positions in 1..n-1 by partial shuffle.
  std::vector<std::size_t> cuts(n - 1);
  std::iota(cuts.begin(), cuts.end(), 1);
  for (std::size_t i = 0; i + 1 < segments; ++i) {
    std::swap(cuts[i], cuts[i + rng.below(cuts.size() - i)]);
  }
  cuts.resize(segments - 1);
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(n);
  Vec out(static_cast<Eigen::Index>(n));
  std::size_t start = 0;
  for (std::size_t cut : cuts) {
    const double level = rng.uniform();
    for (std::size_t i = start; i < cut; ++i) out[static_cast<Eigen::Index>(i)] = level;
    start = cut;
  }
  return out;
}

bool has_extension(const std::string& path, std::initializer_list<const char*> exts) {
  const std::string ext = std::filesystem::path(path).extension().string();
  return std::any_of(exts.begin(), exts.end(), [&](const char* e) { return ext == e; });
}

}  // namespace

SourceSignal load_source(const SourceSpec& spec, std::uint64_t seed) {
  SourceSignal src;
  if (spec.kind == SourceKind::kFile) {
    if (spec.path.empty()) fail(ErrorCode::kInvalidParameter, "file source needs source.path");
    if (has_extension(spec.path, {".pgm", ".ppm", ".pnm"})) {
      Image img = load_pnm(spec.path);
      src.values = std::move(img.pixels);
      src.shape = img.shape;
      src.is_image = true;
    } else {
      const Mat a = read_matrix(spec.path);
      src.values.resize(a.size());
      Eigen::Index k = 0;
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) src.values[k++] = a(r, c);
      }
      src.shape = {static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols()), 1};
      src.is_image = a.rows() > 1 && a.cols() > 1;
    }
    if (!src.values.allFinite()) fail(ErrorCode::kFormat, "source contains non-finite values");
    return src;
  }
  require(spec.n >= 1, ErrorCode::kInvalidDimension, "source length must be >= 1");
  CounterRng rng(seed);
  switch (spec.kind) {
    case SourceKind::kGaussian:
    case SourceKind::kGaussMixture:
      src.values = draw_mixture(spec.mixture, spec.n, rng);
      break;
    case SourceKind::kPiecewiseConstant:
      src.values = draw_piecewise(spec.n, spec.segments, rng);
      break;
    case SourceKind::kFile:
      break;
  }
  if (spec.rows > 0 && spec.cols > 0 && spec.rows * spec.cols == spec.n) {
    src.shape = {spec.rows, spec.cols, 1};
    src.is_image = true;
  } else {
    src.shape = {1, spec.n, 1};
  }
  return src;
}

// ---------------------------------------------------------------------------
// Config

const char* to_string(PriorKind k) {
  switch (k) {
    case PriorKind::kAnalytic: return "analytic";
    case PriorKind::kDdim: return "ddim";
    case PriorKind::kFlowMatching: return "flow-matching";
    case PriorKind::kDctThreshold: return "dct-threshold";
    case PriorKind::kBridge: return "bridge";
    case PriorKind::kIdentity: return "identity";
    case PriorKind::kLmmse: return "lmmse";
  }
  return "?";
}

PriorKind parse_prior_kind(const std::string& s) {
  if (s == "analytic" || s == "gm" || s == "gaussian") return PriorKind::kAnalytic;
  if (s == "ddim") return PriorKind::kDdim;
  if (s == "flow-matching" || s == "fm") return PriorKind::kFlowMatching;
  if (s == "dct-threshold" || s == "dct") return PriorKind::kDctThreshold;
  if (s == "bridge") return PriorKind::kBridge;
  if (s == "identity") return PriorKind::kIdentity;
  if (s == "lmmse") return PriorKind::kLmmse;
  fail(ErrorCode::kInvalidParameter, "unknown prior '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    fail(ErrorCode::kInvalidParameter, key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  const bool hex = v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X');
  const char* begin = v.data() + (hex ? 2 : 0);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(begin, v.data() + v.size(), out, hex ? 16 : 10);
  if (ec != std::errc() || ptr != v.data() + v.size() || begin == v.data() + v.size()) {
    fail(ErrorCode::kInvalidParameter, key + ": expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorCode::kInvalidParameter, key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

SourceKind parse_source_kind(const std::string& s) {
  if (s == "gaussian") return SourceKind::kGaussian;
  if (s == "gm" || s == "gauss-mixture") return SourceKind::kGaussMixture;
  if (s == "piecewise" || s == "piecewise-constant") return SourceKind::kPiecewiseConstant;
  if (s == "file") return SourceKind::kFile;
  fail(ErrorCode::kInvalidParameter, "unknown source '" + s + "'");
}

const char* to_string(SourceKind k) {
  switch (k) {
    case SourceKind::kGaussian: return "gaussian";
    case SourceKind::kGaussMixture: return "gm";
    case SourceKind::kPiecewiseConstant: return "piecewise";
    case SourceKind::kFile: return "file";
  }
  return "?";
}

GaussMixture& prior_mixture(PriorSpec& p, const SourceSpec& s) {
  if (!p.mixture) p.mixture = s.mixture;
  return *p.mixture;
}

void flatten_json(const nlohmann::json& j, const std::string& prefix, Settings& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten_json(v, prefix.empty() ? k : prefix + "." + k, out);
    return;
  }
  auto scalar = [](const nlohmann::json& x) {
    return x.is_string() ? x.get<std::string>() : x.dump();
  };
  if (j.is_array()) {
    std::string joined;
    for (std::size_t i = 0; i < j.size(); ++i) joined += (i ? "," : "") + scalar(j[i]);
    out.emplace_back(prefix, joined);
  } else {
    out.emplace_back(prefix, scalar(j));
  }
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "name") {
    name = v;
  } else if (key == "output") {
    output = v;
  } else if (key == "beta") {
    beta = to_double(key, v);
  } else if (key == "sigma") {
    sigma = to_double(key, v);
  } else if (key == "trials") {
    num_trials = to_count(key, v);
  } else if (key == "source") {
    source.kind = parse_source_kind(v);
    if (source.kind == SourceKind::kGaussian) source.mixture = GaussMixture::gaussian(0.5, 0.05);
  } else if (key == "source.path") {
    source.path = v;
    source.kind = SourceKind::kFile;
  } else if (key == "source.n") {
    source.n = to_count(key, v);
  } else if (key == "source.rows") {
    source.rows = to_count(key, v);
  } else if (key == "source.cols") {
    source.cols = to_count(key, v);
  } else if (key == "source.segments") {
    source.segments = to_count(key, v);
  } else if (key == "source.mean") {
    source.mixture = GaussMixture::gaussian(to_double(key, v), source.mixture.variances.at(0));
  } else if (key == "source.var") {
    source.mixture = GaussMixture::gaussian(source.mixture.means.at(0), to_double(key, v));
  } else if (key == "source.weights") {
    source.mixture.weights = to_doubles(key, v);
  } else if (key == "source.means") {
    source.mixture.means = to_doubles(key, v);
  } else if (key == "source.variances") {
    source.mixture.variances = to_doubles(key, v);
  } else if (key == "channel") {
    channel.type = parse_channel_type(v);
  } else if (key == "channel.kappa") {
    channel.kappa = to_double(key, v);
  } else if (key == "channel.shape") {
    channel.shape = parse_spectrum_shape(v);
  } else if (key == "channel.basis") {
    channel.basis = parse_basis_kind(v);
  } else if (key == "channel.taps") {
    channel.profile.num_taps = to_count(key, v);
    channel.profile.tap_powers.assign(channel.profile.num_taps,
                                      1.0 / static_cast<double>(std::max<std::size_t>(1, channel.profile.num_taps)));
  } else if (key == "channel.tap_powers") {
    channel.profile.tap_powers = to_doubles(key, v);
    channel.profile.num_taps = channel.profile.tap_powers.size();
  } else if (key == "channel.doppler") {
    channel.profile.doppler_rate = to_double(key, v);
  } else if (key == "channel.symbols") {
    channel.profile.num_symbols = to_count(key, v);
  } else if (key == "prior") {
    prior.kind = parse_prior_kind(v);
  } else if (key == "prior.weights") {
    prior_mixture(prior, source).weights = to_doubles(key, v);
  } else if (key == "prior.means") {
    prior_mixture(prior, source).means = to_doubles(key, v);
  } else if (key == "prior.variances") {
    prior_mixture(prior, source).variances = to_doubles(key, v);
  } else if (key == "prior.ddim_steps") {
    prior.ddim_steps = to_count(key, v);
  } else if (key == "prior.ddim_mode") {
    if (v == "full") {
      prior.ddim_mode = DdimMode::kFullTrajectory;
    } else if (v == "single") {
      prior.ddim_mode = DdimMode::kSingleShot;
    } else {
      fail(ErrorCode::kInvalidParameter, key + ": expected full or single");
    }
  } else if (key == "prior.fm_steps") {
    prior.fm_steps = to_count(key, v);
  } else if (key == "prior.dct_rule") {
    if (v == "universal") {
      prior.dct_rule = ThresholdRule::kUniversal;
    } else if (v == "fixed") {
      prior.dct_rule = ThresholdRule::kFixed;
    } else {
      fail(ErrorCode::kInvalidParameter, key + ": expected universal or fixed");
    }
  } else if (key == "prior.dct_multiplier") {
    prior.dct_multiplier = to_double(key, v);
  } else if (key == "prior.endpoint") {
    prior.endpoint = v;
  } else if (key == "prior.timeout_ms") {
    prior.timeout_ms = to_count(key, v);
  } else if (key == "prior.time") {
    if (v == "ddim") {
      prior.bridge_time = TimeConvention::kDdim;
    } else if (v == "fm" || v == "flow-matching") {
      prior.bridge_time = TimeConvention::kFlowMatching;
    } else {
      fail(ErrorCode::kInvalidParameter, key + ": expected ddim or fm");
    }
  } else if (key == "iters") {
    receiver.max_iters = to_count(key, v);
  } else if (key == "tol") {
    receiver.tolerance = to_double(key, v);
  } else if (key == "variance_floor") {
    receiver.variance_floor = to_double(key, v);
  } else if (key == "trace_divisor") {
    if (v == "m" || v == "M" || v == "rows") {
      receiver.trace_divisor = TraceDivisor::kRows;
    } else if (v == "n" || v == "N" || v == "cols") {
      receiver.trace_divisor = TraceDivisor::kCols;
    } else {
      fail(ErrorCode::kInvalidParameter, key + ": expected m or n");
    }
  } else if (key == "subtract_noise_floor") {
    receiver.subtract_noise_floor = to_bool(key, v);
  } else if (key == "damping") {
    receiver.damping = to_double(key, v);
  } else if (key == "final_estimate") {
    if (v == "prior") {
      receiver.final_estimate = FinalEstimate::kPriorMessage;
    } else if (v == "denoiser") {
      receiver.final_estimate = FinalEstimate::kDenoiserOutput;
    } else {
      fail(ErrorCode::kInvalidParameter, key + ": expected prior or denoiser");
    }
  } else if (key == "seed.source") {
    seeds.source = to_u64(key, v);
  } else if (key == "seed.operator") {
    seeds.op = to_u64(key, v);
  } else if (key == "seed.channel") {
    seeds.channel = to_u64(key, v);
  } else if (key == "seed.noise") {
    seeds.noise = to_u64(key, v);
  } else if (key == "seed.divergence") {
    receiver.divergence_seed = to_u64(key, v);
  } else {
    fail(ErrorCode::kInvalidParameter, "unknown config key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  require(beta > 0.0 && beta <= 1.0, ErrorCode::kInvalidParameter, "beta must lie in (0, 1]");
  require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::kInvalidParameter, "sigma must be >= 0");
  require(num_trials >= 1, ErrorCode::kInvalidParameter, "trials must be >= 1");
  receiver.validate();
  if (source.kind != SourceKind::kFile) {
    require(source.n >= 1, ErrorCode::kInvalidDimension, "source.n must be >= 1");
    source.mixture.validate();
  }
  if (prior.mixture) prior.mixture->validate();
  if (channel.type == ChannelType::kConditioned) {
    require(channel.kappa >= 1.0, ErrorCode::kInvalidParameter, "channel.kappa must be >= 1");
  }
  if (channel.type == ChannelType::kFading) channel.profile.validate();
  require(channel.type != ChannelType::kMatrix, ErrorCode::kInvalidParameter,
          "matrix channels are not supported in experiments");
  if (prior.kind == PriorKind::kBridge) {
    require(!prior.endpoint.empty(), ErrorCode::kInvalidParameter, "bridge prior needs prior.endpoint");
  }
}

std::string ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["beta"] = beta;
  j["sigma"] = sigma;
  j["trials"] = num_trials;
  j["source"]["kind"] = to_string(source.kind);
  if (source.kind == SourceKind::kFile) {
    j["source"]["path"] = source.path;
  } else {
    j["source"]["n"] = source.n;
    j["source"]["rows"] = source.rows;
    j["source"]["cols"] = source.cols;
    j["source"]["segments"] = source.segments;
    j["source"]["weights"] = source.mixture.weights;
    j["source"]["means"] = source.mixture.means;
    j["source"]["variances"] = source.mixture.variances;
  }
  j["channel"] = nlohmann::ordered_json::parse(channel.to_json());
  j["prior"]["kind"] = to_string(prior.kind);
  if (prior.mixture) {
    j["prior"]["weights"] = prior.mixture->weights;
    j["prior"]["means"] = prior.mixture->means;
    j["prior"]["variances"] = prior.mixture->variances;
  }
  j["prior"]["ddim_steps"] = prior.ddim_steps;
  j["prior"]["ddim_mode"] = prior.ddim_mode == DdimMode::kFullTrajectory ? "full" : "single";
  j["prior"]["fm_steps"] = prior.fm_steps;
  j["prior"]["endpoint"] = prior.endpoint;
  j["receiver"]["iters"] = receiver.max_iters;
  j["receiver"]["tol"] = receiver.tolerance;
  j["receiver"]["variance_floor"] = receiver.variance_floor;
  j["receiver"]["trace_divisor"] = receiver.trace_divisor == TraceDivisor::kRows ? "m" : "n";
  j["receiver"]["subtract_noise_floor"] = receiver.subtract_noise_floor;
  j["receiver"]["damping"] = receiver.damping;
  j["receiver"]["final_estimate"] =
      receiver.final_estimate == FinalEstimate::kPriorMessage ? "prior" : "denoiser";
  j["seed"]["source"] = seeds.source;
  j["seed"]["operator"] = seeds.op;
  j["seed"]["channel"] = seeds.channel;
  j["seed"]["noise"] = seeds.noise;
  j["seed"]["divergence"] = receiver.divergence_seed;
  return j.dump(2);
}

Settings parse_settings(const std::string& text) {
  Settings out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kFormat, std::string("config JSON: ") + e.what());
    }
    flatten_json(j, "", out);
    return out;
  }
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kFormat, "config line " + std::to_string(lineno) + ": expected key=value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

Settings read_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_settings(ss.str());
}

ExperimentConfig config_from_settings(const Settings& settings) {
  ExperimentConfig cfg;
  for (const auto& [k, v] : settings) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

bool is_grid_axis(const std::string& key) {
  return key == "beta" || key == "sigma" || key == "channel" || key == "prior";
}

std::vector<ExperimentConfig> expand_grid(const Settings& settings) {
  Settings base;
  std::map<std::string, std::vector<std::string>> axes;
  for (const auto& [k, v] : settings) {
    if (is_grid_axis(k)) {
      axes[k] = split_list(v);
    } else {
      base.emplace_back(k, v);
    }
  }
  std::vector<Settings> points{base};
  for (const char* axis : {"beta", "sigma", "channel", "prior"}) {
    const auto it = axes.find(axis);
    if (it == axes.end()) continue;
    std::vector<Settings> next;
    for (const auto& p : points) {
      for (const auto& value : it->second) {
        Settings q = p;
        // Axis values go first so per-axis keys (e.g. channel.kappa) apply on top.
        q.insert(q.begin(), {axis, value});
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  std::vector<ExperimentConfig> grid;
  for (const auto& p : points) grid.push_back(config_from_settings(p));
  return grid;
}

std::filesystem::path resolve_output(const std::string& output) {
  std::filesystem::path p(output);
  if (p.is_relative()) {
    if (const char* root = std::getenv("DOAMP_OUTPUT_ROOT"); root && *root) {
      p = std::filesystem::path(root) / p;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Experiments

std::unique_ptr<NlePrior> make_prior(const PriorSpec& spec, const SourceSpec& source,
                                     const ImageShape& shape) {
  auto mixture = [&]() {
    if (spec.mixture) return *spec.mixture;
    if (source.kind == SourceKind::kGaussian || source.kind == SourceKind::kGaussMixture) {
      return source.mixture;
    }
    fail(ErrorCode::kInvalidParameter,
         std::string("prior '") + to_string(spec.kind) + "' needs prior.weights/means/variances");
  };
  switch (spec.kind) {
    case PriorKind::kAnalytic:
      return std::make_unique<AnalyticPrior>(mixture());
    case PriorKind::kDdim:
      return std::make_unique<DdimPrior>(DdimSchedule::geometric(spec.ddim_steps),
                                         analytic_noise_predictor(mixture()), spec.ddim_mode);
    case PriorKind::kFlowMatching:
      return std::make_unique<FlowMatchingPrior>(analytic_velocity_predictor(mixture()),
                                                 spec.fm_steps);
    case PriorKind::kDctThreshold: {
      DctSoftThresholdPrior::Options opt;
      opt.rule = spec.dct_rule;
      opt.multiplier = spec.dct_multiplier;
      opt.rows = shape.rows;
      opt.cols = shape.cols;
      opt.channels = shape.channels;
      return std::make_unique<DctSoftThresholdPrior>(opt);
    }
    case PriorKind::kBridge:
      return std::make_unique<BridgePrior>(open_bridge(spec.endpoint),
                                           std::chrono::milliseconds(spec.timeout_ms),
                                           spec.bridge_time);
    case PriorKind::kIdentity:
      return std::make_unique<CallablePrior>(
          "identity", [](const Vec& s, double, double) { return s; });
    case PriorKind::kLmmse:
      return nullptr;
  }
  return nullptr;
}

TrialResult run_trial(const ExperimentConfig& cfg, std::size_t trial) {
  TrialResult r;
  r.trial = trial;
  const auto start = std::chrono::steady_clock::now();
  try {
    const SourceSignal src = load_source(cfg.source, cfg.seeds.source + trial);
    const std::size_t n = static_cast<std::size_t>(src.values.size());
    const std::size_t m = compressed_length(n, cfg.beta);
    auto op = std::make_shared<const RmOperator>(n, m, cfg.seeds.op + trial);
    ChannelSpec chspec = cfg.channel;
    chspec.dim = m;
    chspec.sigma2 = cfg.sigma * cfg.sigma;
    chspec.seed = cfg.seeds.channel + trial;
    const ChannelInstance ch = generate_channel(chspec);
    const Vec y = transmit(ch, op->forward(src.values), cfg.seeds.noise + trial);

    ReceiverConfig rc = cfg.receiver;
    rc.psnr_peak = 1.0;
    auto prior = make_prior(cfg.prior, cfg.source, src.shape);
    ReceiverResult out = prior ? run_receiver(y, ch, op, *prior, rc, &src.values)
                               : run_lmmse_baseline(y, ch, op, rc, &src.values);
    r.psnr = psnr(src.values, out.s_hat, 1.0);
    r.ssim = ssim(src.values, out.s_hat, src.shape);
    r.iterations = out.trace.records.size();
    r.nfe = out.trace.nfe;
    r.converged = out.trace.converged;
    r.error = out.trace.error;
    r.trace = std::move(out.trace);
    r.estimate = std::move(out.s_hat);
  } catch (const Error& e) {
    r.error = e.what();
    r.psnr = std::numeric_limits<double>::quiet_NaN();
    r.ssim = std::numeric_limits<double>::quiet_NaN();
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

namespace {

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  if (xs.empty()) {
    mean = sd = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

void write_outputs(const ExperimentConfig& cfg, const MetricReport& report,
                   const SourceSignal& shape_source) {
  const auto dir = resolve_output(cfg.output);
  std::filesystem::create_directories(dir);
  write_text(dir / "config.json", cfg.to_json() + "\n");

  std::ostringstream metrics;
  std::ostringstream timing;
  metrics << "trial,psnr,ssim,iterations,nfe,converged,error\n";
  timing << "trial,wall_seconds\n";
  for (const auto& t : report.trials) {
    std::string error = t.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    metrics << t.trial << ',' << csv_number(t.psnr) << ',' << csv_number(t.ssim) << ','
            << t.iterations << ',' << t.nfe << ',' << (t.converged ? 1 : 0) << ',' << error << '\n';
    timing << t.trial << ',' << csv_number(t.wall_seconds) << '\n';

    std::ofstream trace(dir / ("trace_trial" + std::to_string(t.trial) + ".csv"));
    t.trace.write_csv(trace);
    if (t.estimate.size() == 0) continue;
    const std::string stem = "recon_trial" + std::to_string(t.trial);
    if (shape_source.is_image && (shape_source.shape.channels == 1 || shape_source.shape.channels == 3)) {
      save_pnm((dir / (stem + (shape_source.shape.channels == 1 ? ".pgm" : ".ppm"))).string(),
               Image{shape_source.shape, t.estimate});
    } else {
      write_matrix((dir / (stem + ".oampmat")).string(),
                   Eigen::Map<const Mat>(t.estimate.data(), 1, t.estimate.size()));
    }
  }
  write_text(dir / "metrics.csv", metrics.str());
  write_text(dir / "timing.csv", timing.str());
  write_text(dir / "summary.csv", summary_header() + "\n" + summary_row(cfg, report) + "\n");
}

}  // namespace

MetricReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  MetricReport report;
  std::vector<double> psnrs, ssims, iters, nfes;
  for (std::size_t t = 0; t < cfg.num_trials; ++t) {
    TrialResult r = run_trial(cfg, t);
    if (std::isfinite(r.psnr)) {
      psnrs.push_back(r.psnr);
      ssims.push_back(r.ssim);
      iters.push_back(static_cast<double>(r.iterations));
      nfes.push_back(static_cast<double>(r.nfe));
    } else {
      ++report.failures;
    }
    report.trials.push_back(std::move(r));
  }
  double unused = 0.0;
  mean_std(psnrs, report.psnr_mean, report.psnr_std);
  mean_std(ssims, report.ssim_mean, report.ssim_std);
  mean_std(iters, report.iterations_mean, unused);
  mean_std(nfes, report.nfe_mean, unused);

  const SourceSignal probe = load_source(cfg.source, cfg.seeds.source);
  report.m = compressed_length(static_cast<std::size_t>(probe.values.size()), cfg.beta);
  if (!cfg.output.empty()) write_outputs(cfg, report, probe);
  return report;
}

std::string summary_header() {
  return "beta,sigma,channel,prior,m,trials,psnr_mean,psnr_std,ssim_mean,ssim_std,iters_mean,"
         "nfe_mean,failures";
}

std::string summary_row(const ExperimentConfig& cfg, const MetricReport& report) {
  std::ostringstream os;
  os << csv_number(cfg.beta) << ',' << csv_number(cfg.sigma) << ',' << to_string(cfg.channel.type)
     << ',' << to_string(cfg.prior.kind) << ',' << report.m << ',' << report.trials.size() << ','
     << csv_number(report.psnr_mean) << ',' << csv_number(report.psnr_std) << ','
     << csv_number(report.ssim_mean) << ',' << csv_number(report.ssim_std) << ','
     << csv_number(report.iterations_mean) << ',' << csv_number(report.nfe_mean) << ','
     << report.failures;
  return os.str();
}

std::string sweep(std::vector<ExperimentConfig> grid, std::size_t workers) {
  require(!grid.empty(), ErrorCode::kInvalidParameter, "sweep grid is empty");
  std::stable_sort(grid.begin(), grid.end(), [](const auto& a, const auto& b) {
    return std::tie(a.beta, a.sigma) < std::tie(b.beta, b.sigma);
  });
  for (auto& cfg : grid) {
    if (cfg.output.empty()) continue;
    std::ostringstream sub;
    sub << "b" << csv_number(cfg.beta) << "_s" << csv_number(cfg.sigma) << "_"
        << to_string(cfg.channel.type) << "_" << to_string(cfg.prior.kind);
    cfg.output = (std::filesystem::path(cfg.output) / sub.str()).string();
  }
  std::vector<std::string> rows(grid.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, grid.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        rows[i] = summary_row(grid[i], run_experiment(grid[i]));
      } catch (const Error& e) {
        MetricReport failed;
        failed.failures = grid[i].num_trials;
        failed.psnr_mean = failed.psnr_std = failed.ssim_mean = failed.ssim_std =
            std::numeric_limits<double>::quiet_NaN();
        rows[i] = summary_row(grid[i], failed);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  std::string csv = summary_header() + "\n";
  for (const auto& row : rows) csv += row + "\n";
  return csv;
}

// ---------------------------------------------------------------------------
// Fading statistics

std::vector<double> fading_amplitudes(const FadingProfile& profile, std::size_t samples,
                                      std::uint64_t seed) {
  profile.validate();
  std::vector<double> out;
  out.reserve(samples);
  for (std::uint64_t draw = 0; out.size() < samples; ++draw) {
    const TapProcess taps = draw_fading_taps(profile, derive_seed(seed, draw));
    const auto& last = taps.back();
    for (std::size_t l = 0; l < last.size() && out.size() < samples; ++l) {
      if (profile.tap_powers[l] > 0.0) out.push_back(std::abs(last[l]) / std::sqrt(profile.tap_powers[l]));
    }
    if (draw > 0 && out.empty()) fail(ErrorCode::kInvalidParameter, "fading profile has no powered taps");
  }
  return out;
}

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;  // within 1e-12 of 1; the series converges slowly here
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult rayleigh_ks_test(std::vector<double> amplitudes) {
  require(!amplitudes.empty(), ErrorCode::kInvalidDimension, "KS test needs samples");
  std::sort(amplitudes.begin(), amplitudes.end());
  const double n = static_cast<double>(amplitudes.size());
  double d = 0.0;
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    const double r = amplitudes[i];
    const double cdf = 1.0 - std::exp(-r * r);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  KsResult res;
  res.statistic = d;
  res.samples = amplitudes.size();
  const double sqrt_n = std::sqrt(n);
  res.p_value = kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
  return res;
}

}  // namespace doamp
