#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doamp/channel.hpp"
#include "doamp/diffusion.hpp"
#include "doamp/errors.hpp"
#include "doamp/experiment.hpp"

using namespace doamp;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "doamp_experiment_test" / name;
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.source.n = 1024;
  cfg.channel.type = ChannelType::kConditioned;
  cfg.channel.kappa = 10.0;
  cfg.channel.basis = BasisKind::kMultiplexed;
  cfg.receiver.max_iters = 5;
  return cfg;
}

}  // namespace

TEST(Source, SyntheticIsDeterministic) {
  SourceSpec spec;
  spec.kind = SourceKind::kGaussian;
  spec.mixture = GaussMixture::gaussian(0.0, 1.0);
  spec.n = 1024;
  EXPECT_EQ(load_source(spec, 1).values, load_source(spec, 1).values);
  EXPECT_NE(load_source(spec, 1).values, load_source(spec, 2).values);
  const Vec v = load_source(spec, 1).values;
  EXPECT_NEAR(v.mean(), 0.0, 0.1);
  EXPECT_NEAR((v.array() - v.mean()).square().mean(), 1.0, 0.1);
}

TEST(Source, PiecewiseConstantHasSegments) {
  SourceSpec spec;
  spec.kind = SourceKind::kPiecewiseConstant;
  spec.n = 400;
  spec.segments = 4;
  const Vec v = load_source(spec, 3).values;
  std::size_t jumps = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) jumps += v[i] != v[i - 1];
  EXPECT_LE(jumps, 3u);
  EXPECT_GE(v.minCoeff(), 0.0);
  EXPECT_LE(v.maxCoeff(), 1.0);
}

TEST(Source, ImageLayoutFromRowsAndCols) {
  SourceSpec spec;
  spec.n = 64;
  spec.rows = 8;
  spec.cols = 8;
  const SourceSignal s = load_source(spec, 1);
  EXPECT_TRUE(s.is_image);
  EXPECT_EQ(s.shape.rows, 8u);
}

TEST(Config, KeyValueAndJsonAgree) {
  const Settings kv = parse_settings(
      "# comment\nbeta = 0.25\nsigma=0.1\nchannel=conditioned\nchannel.kappa=5\n"
      "prior=gm\nprior.weights=0.5,0.5\nprior.means=0,1\nprior.variances=0.1,0.1\niters=7\n");
  const Settings js = parse_settings(
      R"({"beta": 0.25, "sigma": 0.1, "channel": "conditioned", "channel.kappa": 5,
          "prior": "gm", "prior.weights": [0.5, 0.5], "prior.means": [0, 1],
          "prior.variances": [0.1, 0.1], "iters": 7, "seed": {"noise": 3}})");
  const ExperimentConfig a = config_from_settings(kv);
  EXPECT_EQ(a.beta, 0.25);
  EXPECT_EQ(a.channel.kappa, 5.0);
  EXPECT_EQ(a.prior.kind, PriorKind::kAnalytic);
  EXPECT_EQ(a.receiver.max_iters, 7u);
  ASSERT_TRUE(a.prior.mixture.has_value());
  EXPECT_EQ(a.prior.mixture->means, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(config_from_settings(js).to_json(), a.to_json());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  ExperimentConfig cfg;
  try {
    cfg.set("betta", "0.5");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidParameter);
  }
  EXPECT_THROW(cfg.set("beta", "half"), Error);
  EXPECT_THROW(config_from_settings({{"beta", "1.5"}}), Error);
  EXPECT_THROW(config_from_settings({{"sigma", "-1"}}), Error);
  EXPECT_THROW(parse_settings("beta 0.5"), Error);
  EXPECT_THROW(parse_settings("{not json"), Error);
}

TEST(Grid, CartesianProductOverAxes) {
  const auto grid = expand_grid({{"beta", "0.1,0.4"}, {"sigma", "0.05,0.5"}, {"source.n", "64"}});
  ASSERT_EQ(grid.size(), 4u);
  for (const auto& g : grid) EXPECT_EQ(g.source.n, 64u);
  EXPECT_EQ(grid[0].beta, 0.1);
  EXPECT_EQ(grid[0].sigma, 0.05);
  EXPECT_EQ(grid[3].beta, 0.4);
  EXPECT_EQ(grid[3].sigma, 0.5);
  EXPECT_TRUE(is_grid_axis("prior"));
  EXPECT_FALSE(is_grid_axis("prior.weights"));
}

TEST(Experiment, NoiselessFullRateIdentityHitsCeiling) {
  ExperimentConfig cfg;
  cfg.source.n = 512;
  cfg.beta = 1.0;
  cfg.sigma = 0.0;
  cfg.num_trials = 3;
  const MetricReport r = run_experiment(cfg);
  ASSERT_EQ(r.trials.size(), 3u);
  for (const auto& t : r.trials) EXPECT_EQ(t.psnr, kPsnrCeiling);
  EXPECT_EQ(r.failures, 0u);
}

TEST(Experiment, MoreNoiseLowersPsnr) {
  ExperimentConfig lo = small_config();
  lo.num_trials = 3;
  lo.sigma = 0.05;
  ExperimentConfig hi = lo;
  hi.sigma = 0.5;
  EXPECT_GT(run_experiment(lo).psnr_mean, run_experiment(hi).psnr_mean);
}

TEST(Experiment, HigherRateRaisesPsnr) {
  double prev = -1.0;
  for (double beta : {0.1, 0.4, 0.7}) {
    ExperimentConfig cfg = small_config();
    cfg.source.n = 4096;
    cfg.num_trials = 2;
    cfg.beta = beta;
    const double p = run_experiment(cfg).psnr_mean;
    EXPECT_GE(p, prev) << beta;
    prev = p;
  }
}

TEST(Experiment, NfeMatchesPredictorCalls) {
  const SourceSpec spec = small_config().source;
  const Vec s = load_source(spec, 1).values;
  auto op = std::make_shared<const RmOperator>(build_rm_operator(s.size(), s.size() / 2, 2));
  const auto ch = gen_conditioned_channel(op->m(), 10.0, SpectrumShape::kGeometric, 0.0025, 3,
                                          BasisKind::kMultiplexed);
  const Vec y = transmit(ch, op->forward(s), 4);
  std::uint64_t calls = 0;
  auto inner = analytic_noise_predictor(spec.mixture);
  DdimPrior prior(DdimSchedule::geometric(20), [&](const Vec& x, double a) {
    ++calls;
    return inner(x, a);
  });
  ReceiverConfig rc;
  rc.max_iters = 4;
  const ReceiverResult res = run_receiver(y, ch, op, prior, rc, &s);
  EXPECT_GT(calls, 0u);
  EXPECT_EQ(res.trace.nfe, calls);
}

TEST(Experiment, WritesDocumentedFiles) {
  const auto dir = scratch_dir("files");
  ExperimentConfig cfg = small_config();
  cfg.num_trials = 2;
  cfg.output = dir.string();
  run_experiment(cfg);
  for (const char* f : {"config.json", "metrics.csv", "timing.csv", "summary.csv",
                        "trace_trial0.csv", "trace_trial1.csv", "recon_trial0.oampmat"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  EXPECT_EQ(first_line(dir / "metrics.csv"), "trial,psnr,ssim,iterations,nfe,converged,error");
  EXPECT_EQ(first_line(dir / "timing.csv"), "trial,wall_seconds");
  EXPECT_EQ(first_line(dir / "summary.csv"), summary_header());
  EXPECT_EQ(first_line(dir / "trace_trial0.csv"), "iter,v_pri,v_post,v_orth,t_star,psnr,residual");
}

TEST(Experiment, OutputRootEnvironment) {
  const auto root = scratch_dir("root");
  ::setenv("DOAMP_OUTPUT_ROOT", root.c_str(), 1);
  EXPECT_EQ(resolve_output("a/b"), root / "a/b");
  EXPECT_EQ(resolve_output("/abs"), std::filesystem::path("/abs"));
  ::unsetenv("DOAMP_OUTPUT_ROOT");
  EXPECT_EQ(resolve_output("a/b"), std::filesystem::path("a/b"));
}

TEST(Experiment, ImageSourceWritesPgm) {
  const auto dir = scratch_dir("image");
  ExperimentConfig cfg = small_config();
  cfg.source.rows = 32;
  cfg.source.cols = 32;
  cfg.output = dir.string();
  const MetricReport r = run_experiment(cfg);
  EXPECT_TRUE(std::filesystem::exists(dir / "recon_trial0.pgm"));
  EXPECT_GT(r.ssim_mean, 0.0);
  EXPECT_LE(r.ssim_mean, 1.0);
}

TEST(Experiment, BrokenBridgeIsIsolatedPerTrial) {
  ExperimentConfig cfg = small_config();
  cfg.prior.kind = PriorKind::kBridge;
  cfg.prior.endpoint = "exec:/nonexistent/denoiser";
  cfg.prior.timeout_ms = 300;
  cfg.receiver.max_iters = 2;
  const MetricReport r = run_experiment(cfg);
  ASSERT_EQ(r.trials.size(), 1u);
  EXPECT_EQ(r.failures, 0u);
  for (const auto& rec : r.trials[0].trace.records) EXPECT_FALSE(rec.fault.empty());
}

TEST(Sweep, SinglePointMatchesRunExperiment) {
  ExperimentConfig cfg = small_config();
  cfg.num_trials = 2;
  const std::string csv = sweep({cfg}, 1);
  EXPECT_EQ(csv, summary_header() + "\n" + summary_row(cfg, run_experiment(cfg)) + "\n");
}

TEST(Sweep, OrdersRowsAndIsReproducible) {
  std::vector<ExperimentConfig> grid;
  for (double beta : {0.4, 0.1}) {
    for (double sigma : {0.5, 0.05}) {
      ExperimentConfig cfg = small_config();
      cfg.source.n = 256;
      cfg.beta = beta;
      cfg.sigma = sigma;
      grid.push_back(cfg);
    }
  }
  const std::string a = sweep(grid, 2);
  const std::string b = sweep(grid, 1);
  EXPECT_EQ(a, b);
  std::istringstream in(a);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> prefixes;
  while (std::getline(in, line)) prefixes.push_back(line.substr(0, line.find(',', line.find(',') + 1)));
  EXPECT_EQ(prefixes, (std::vector<std::string>{"0.1,0.05", "0.1,0.5", "0.4,0.05", "0.4,0.5"}));
}

TEST(Sweep, WritesPerPointDirectories) {
  const auto dir = scratch_dir("sweep");
  auto grid = expand_grid({{"beta", "0.25,0.5"}, {"source.n", "128"}, {"output", dir.string()}});
  sweep(grid, 1);
  EXPECT_TRUE(std::filesystem::exists(dir / "b0.25_s0.05_identity_analytic" / "summary.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "b0.5_s0.05_identity_analytic" / "metrics.csv"));
}

TEST(Ks, SurvivalFunctionReferenceValues) {
  EXPECT_NEAR(kolmogorov_survival(1.36), 0.0494, 5e-4);
  EXPECT_NEAR(kolmogorov_survival(1.0), 0.2700, 5e-4);
  EXPECT_NEAR(kolmogorov_survival(1.63), 0.0098, 5e-4);
  EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(Ks, RejectsWrongDistribution) {
  std::vector<double> uniform;
  for (int i = 0; i < 5000; ++i) uniform.push_back(2.0 * (i + 0.5) / 5000.0);
  EXPECT_LT(rayleigh_ks_test(uniform).p_value, 1e-6);
}
