#include "doamp.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "doamp/channel.hpp"
#include "doamp/errors.hpp"
#include "doamp/experiment.hpp"
#include "doamp/io.hpp"
#include "doamp/rm_operator.hpp"

struct doamp_config {
  doamp::ExperimentConfig cfg;
};

struct doamp_report {
  doamp::ExperimentConfig cfg;
  doamp::MetricReport report;
};

struct doamp_rm {
  std::shared_ptr<const doamp::RmOperator> op;
};

struct doamp_channel {
  std::unique_ptr<doamp::ChannelInstance> ch;
};

namespace {

thread_local std::string g_last_error;

doamp_status to_status(doamp::ErrorCode code) {
  using doamp::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidDimension: return DOAMP_ERR_INVALID_DIMENSION;
    case ErrorCode::kInvalidParameter: return DOAMP_ERR_INVALID_PARAMETER;
    case ErrorCode::kInvalidMessage: return DOAMP_ERR_INVALID_MESSAGE;
    case ErrorCode::kSingularSystem: return DOAMP_ERR_SINGULAR_SYSTEM;
    case ErrorCode::kNoInformation: return DOAMP_ERR_NO_INFORMATION;
    case ErrorCode::kDegenerateNle: return DOAMP_ERR_DEGENERATE_NLE;
    case ErrorCode::kNleFailure: return DOAMP_ERR_NLE_FAILURE;
    case ErrorCode::kBridgeFailure: return DOAMP_ERR_BRIDGE_FAILURE;
    case ErrorCode::kIntegrationFailure: return DOAMP_ERR_INTEGRATION_FAILURE;
    case ErrorCode::kIo: return DOAMP_ERR_IO;
    case ErrorCode::kFormat: return DOAMP_ERR_FORMAT;
  }
  return DOAMP_ERR_INTERNAL;
}

doamp_status set_error(doamp_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename Fn>
doamp_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const doamp::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(DOAMP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(DOAMP_ERR_INTERNAL, e.what());
  }
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define DOAMP_REQUIRE_ARG(p)                                                 \
  do {                                                                       \
    if (!(p)) return set_error(DOAMP_ERR_NULL_ARGUMENT, #p " must not be NULL"); \
  } while (0)

doamp::ExperimentConfig config_from_text_settings(const doamp::Settings& settings) {
  doamp::ExperimentConfig cfg;
  for (const auto& [k, v] : settings) cfg.set(k, v);
  return cfg;
}

}  // namespace

extern "C" {

const char* doamp_version(void) { return "1.0.0"; }

const char* doamp_status_string(doamp_status status) {
  switch (status) {
    case DOAMP_OK: return "ok";
    case DOAMP_ERR_INVALID_DIMENSION: return "invalid dimension";
    case DOAMP_ERR_INVALID_PARAMETER: return "invalid parameter";
    case DOAMP_ERR_INVALID_MESSAGE: return "invalid message";
    case DOAMP_ERR_SINGULAR_SYSTEM: return "singular system";
    case DOAMP_ERR_NO_INFORMATION: return "no information";
    case DOAMP_ERR_DEGENERATE_NLE: return "degenerate denoiser output";
    case DOAMP_ERR_NLE_FAILURE: return "denoiser failure";
    case DOAMP_ERR_BRIDGE_FAILURE: return "bridge failure";
    case DOAMP_ERR_INTEGRATION_FAILURE: return "integration failure";
    case DOAMP_ERR_IO: return "i/o error";
    case DOAMP_ERR_FORMAT: return "format error";
    case DOAMP_ERR_NULL_ARGUMENT: return "null argument";
    case DOAMP_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case DOAMP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* doamp_last_error(void) { return g_last_error.c_str(); }

void doamp_string_free(char* s) { std::free(s); }

// ---- config -----------------------------------------------------------------

doamp_status doamp_config_new(doamp_config** out) {
  DOAMP_REQUIRE_ARG(out);
  return guarded([&] {
    *out = new doamp_config{};
    return DOAMP_OK;
  });
}

doamp_status doamp_config_parse(const char* text, doamp_config** out) {
  DOAMP_REQUIRE_ARG(text);
  DOAMP_REQUIRE_ARG(out);
  return guarded([&] {
    auto cfg = config_from_text_settings(doamp::parse_settings(text));
    *out = new doamp_config{std::move(cfg)};
    return DOAMP_OK;
  });
}

doamp_status doamp_config_load(const char* path, doamp_config** out) {
  DOAMP_REQUIRE_ARG(path);
  DOAMP_REQUIRE_ARG(out);
  return guarded([&] {
    auto cfg = config_from_text_settings(doamp::read_settings_file(path));
    *out = new doamp_config{std::move(cfg)};
    return DOAMP_OK;
  });
}

doamp_status doamp_config_set(doamp_config* cfg, const char* key, const char* value) {
  DOAMP_REQUIRE_ARG(cfg);
  DOAMP_REQUIRE_ARG(key);
  DOAMP_REQUIRE_ARG(value);
  return guarded([&] {
    cfg->cfg.set(key, value);
    return DOAMP_OK;
  });
}

doamp_status doamp_config_to_json(const doamp_config* cfg, char** json_out) {
  DOAMP_REQUIRE_ARG(cfg);
  DOAMP_REQUIRE_ARG(json_out);
  return guarded([&] {
    *json_out = duplicate(cfg->cfg.to_json());
    return DOAMP_OK;
  });
}

void doamp_config_free(doamp_config* cfg) { delete cfg; }

// ---- experiments ------------------------------------------------------------

doamp_status doamp_run(const doamp_config* cfg, doamp_report** out) {
  DOAMP_REQUIRE_ARG(cfg);
  DOAMP_REQUIRE_ARG(out);
  return guarded([&] {
    auto report = std::make_unique<doamp_report>();
    report->cfg = cfg->cfg;
    report->report = doamp::run_experiment(cfg->cfg);
    *out = report.release();
    return DOAMP_OK;
  });
}

size_t doamp_report_trials(const doamp_report* report) {
  return report ? report->report.trials.size() : 0;
}

doamp_status doamp_report_summary(const doamp_report* report, double* psnr_mean,
                                  double* ssim_mean, double* iters_mean, double* nfe_mean,
                                  size_t* failures) {
  DOAMP_REQUIRE_ARG(report);
  const auto& r = report->report;
  if (psnr_mean) *psnr_mean = r.psnr_mean;
  if (ssim_mean) *ssim_mean = r.ssim_mean;
  if (iters_mean) *iters_mean = r.iterations_mean;
  if (nfe_mean) *nfe_mean = r.nfe_mean;
  if (failures) *failures = r.failures;
  return DOAMP_OK;
}

doamp_status doamp_report_trial(const doamp_report* report, size_t trial, double* psnr,
                                double* ssim, size_t* iterations, uint64_t* nfe) {
  DOAMP_REQUIRE_ARG(report);
  if (trial >= report->report.trials.size()) {
    return set_error(DOAMP_ERR_INVALID_PARAMETER, "trial index out of range");
  }
  const auto& t = report->report.trials[trial];
  if (psnr) *psnr = t.psnr;
  if (ssim) *ssim = t.ssim;
  if (iterations) *iterations = t.iterations;
  if (nfe) *nfe = t.nfe;
  return DOAMP_OK;
}

doamp_status doamp_report_csv(const doamp_report* report, char** csv_out) {
  DOAMP_REQUIRE_ARG(report);
  DOAMP_REQUIRE_ARG(csv_out);
  return guarded([&] {
    *csv_out = duplicate(doamp::summary_header() + "\n" +
                         doamp::summary_row(report->cfg, report->report) + "\n");
    return DOAMP_OK;
  });
}

void doamp_report_free(doamp_report* report) { delete report; }

doamp_status doamp_sweep(const char* grid_path, const char* const* overrides, size_t num_overrides,
                         size_t workers, char** csv_out) {
  DOAMP_REQUIRE_ARG(grid_path);
  DOAMP_REQUIRE_ARG(csv_out);
  if (num_overrides > 0) DOAMP_REQUIRE_ARG(overrides);
  return guarded([&] {
    doamp::Settings settings = doamp::read_settings_file(grid_path);
    for (size_t i = 0; i < num_overrides; ++i) {
      const std::string kv = overrides[i] ? overrides[i] : "";
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        return set_error(DOAMP_ERR_INVALID_PARAMETER, "override '" + kv + "' is not key=value");
      }
      settings.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    *csv_out = duplicate(doamp::sweep(doamp::expand_grid(settings), workers));
    return DOAMP_OK;
  });
}

// ---- RM operator --------------------------------------------------------------

doamp_status doamp_rm_new(size_t n, size_t m, uint64_t seed, doamp_rm** out) {
  DOAMP_REQUIRE_ARG(out);
  return guarded([&] {
    *out = new doamp_rm{std::make_shared<const doamp::RmOperator>(n, m, seed)};
    return DOAMP_OK;
  });
}

doamp_status doamp_rm_dims(const doamp_rm* op, size_t* n, size_t* m) {
  DOAMP_REQUIRE_ARG(op);
  if (n) *n = op->op->n();
  if (m) *m = op->op->m();
  return DOAMP_OK;
}

doamp_status doamp_rm_forward(const doamp_rm* op, const double* s, size_t n, double* x, size_t m) {
  DOAMP_REQUIRE_ARG(op);
  DOAMP_REQUIRE_ARG(s);
  DOAMP_REQUIRE_ARG(x);
  return guarded([&] {
    if (n != op->op->n() || m != op->op->m()) {
      return set_error(DOAMP_ERR_INVALID_DIMENSION, "buffer lengths do not match the operator");
    }
    const doamp::Vec out = op->op->forward(doamp::to_vec({s, n}));
    std::memcpy(x, out.data(), m * sizeof(double));
    return DOAMP_OK;
  });
}

doamp_status doamp_rm_inverse(const doamp_rm* op, const double* x, size_t m, double* s, size_t n) {
  DOAMP_REQUIRE_ARG(op);
  DOAMP_REQUIRE_ARG(x);
  DOAMP_REQUIRE_ARG(s);
  return guarded([&] {
    if (n != op->op->n() || m != op->op->m()) {
      return set_error(DOAMP_ERR_INVALID_DIMENSION, "buffer lengths do not match the operator");
    }
    const doamp::Vec out = op->op->inverse(doamp::to_vec({x, m}));
    std::memcpy(s, out.data(), n * sizeof(double));
    return DOAMP_OK;
  });
}

void doamp_rm_free(doamp_rm* op) { delete op; }

// ---- channels -------------------------------------------------------------------

doamp_status doamp_channel_from_config(const doamp_config* cfg, size_t trial, size_t dim,
                                       doamp_channel** out) {
  DOAMP_REQUIRE_ARG(cfg);
  DOAMP_REQUIRE_ARG(out);
  return guarded([&] {
    const auto& c = cfg->cfg;
    c.validate();
    doamp::ChannelSpec spec = c.channel;
    if (dim == 0) {
      const auto src = doamp::load_source(c.source, c.seeds.source + trial);
      dim = doamp::compressed_length(static_cast<std::size_t>(src.values.size()), c.beta);
    }
    spec.dim = dim;
    spec.sigma2 = c.sigma * c.sigma;
    spec.seed = c.seeds.channel + trial;
    *out = new doamp_channel{std::make_unique<doamp::ChannelInstance>(doamp::generate_channel(spec))};
    return DOAMP_OK;
  });
}

doamp_status doamp_channel_dims(const doamp_channel* ch, size_t* rows, size_t* cols) {
  DOAMP_REQUIRE_ARG(ch);
  if (rows) *rows = ch->ch->m_rows();
  if (cols) *cols = ch->ch->n_cols();
  return DOAMP_OK;
}

doamp_status doamp_channel_singular_values(const doamp_channel* ch, double* values,
                                           size_t capacity, size_t* count) {
  DOAMP_REQUIRE_ARG(ch);
  const auto& sv = ch->ch->singular_values();
  const size_t rank = static_cast<size_t>(sv.size());
  if (count) *count = rank;
  if (capacity > 0) {
    DOAMP_REQUIRE_ARG(values);
    std::memcpy(values, sv.data(), std::min(capacity, rank) * sizeof(double));
  }
  return DOAMP_OK;
}

doamp_status doamp_channel_condition_number(const doamp_channel* ch, double* kappa) {
  DOAMP_REQUIRE_ARG(ch);
  DOAMP_REQUIRE_ARG(kappa);
  *kappa = ch->ch->condition_number();
  return DOAMP_OK;
}

doamp_status doamp_channel_export(const doamp_channel* ch, const char* path) {
  DOAMP_REQUIRE_ARG(ch);
  DOAMP_REQUIRE_ARG(path);
  return guarded([&] {
    doamp::write_matrix(path, ch->ch->to_dense());
    return DOAMP_OK;
  });
}

void doamp_channel_free(doamp_channel* ch) { delete ch; }

doamp_status doamp_fading_ks(const doamp_config* cfg, size_t samples, uint64_t seed,
                             double* statistic, double* p_value) {
  DOAMP_REQUIRE_ARG(cfg);
  return guarded([&] {
    if (cfg->cfg.channel.type != doamp::ChannelType::kFading) {
      return set_error(DOAMP_ERR_INVALID_PARAMETER, "channel is not a fading channel");
    }
    const auto res =
        doamp::rayleigh_ks_test(doamp::fading_amplitudes(cfg->cfg.channel.profile, samples, seed));
    if (statistic) *statistic = res.statistic;
    if (p_value) *p_value = res.p_value;
    return DOAMP_OK;
  });
}

}  // extern "C"
