#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doamp.h"

namespace {

struct Config {
  doamp_config* p = nullptr;
  ~Config() { doamp_config_free(p); }
};

std::string take(char* s) {
  std::string out = s ? s : "";
  doamp_string_free(s);
  return out;
}

}  // namespace

TEST(CApi, StatusStringsAndVersion) {
  EXPECT_STRNE(doamp_version(), "");
  EXPECT_STREQ(doamp_status_string(DOAMP_OK), "ok");
  EXPECT_STRNE(doamp_status_string(DOAMP_ERR_BRIDGE_FAILURE), "");
}

TEST(CApi, NullArgumentsAreReported) {
  EXPECT_EQ(doamp_config_new(nullptr), DOAMP_ERR_NULL_ARGUMENT);
  EXPECT_EQ(doamp_rm_forward(nullptr, nullptr, 0, nullptr, 0), DOAMP_ERR_NULL_ARGUMENT);
  EXPECT_NE(std::strlen(doamp_last_error()), 0u);
  doamp_config_free(nullptr);
  doamp_rm_free(nullptr);
  doamp_report_free(nullptr);
  doamp_channel_free(nullptr);
}

TEST(CApi, RmRoundTrip) {
  doamp_rm* op = nullptr;
  ASSERT_EQ(doamp_rm_new(64, 64, 3, &op), DOAMP_OK);
  size_t n = 0, m = 0;
  ASSERT_EQ(doamp_rm_dims(op, &n, &m), DOAMP_OK);
  EXPECT_EQ(n, 64u);
  std::vector<double> s(64), x(64), back(64);
  for (int i = 0; i < 64; ++i) s[static_cast<std::size_t>(i)] = std::sin(0.3 * i);
  ASSERT_EQ(doamp_rm_forward(op, s.data(), 64, x.data(), 64), DOAMP_OK);
  ASSERT_EQ(doamp_rm_inverse(op, x.data(), 64, back.data(), 64), DOAMP_OK);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(back[i], s[i], 1e-12);
  EXPECT_EQ(doamp_rm_forward(op, s.data(), 63, x.data(), 64), DOAMP_ERR_INVALID_DIMENSION);
  doamp_rm_free(op);
  EXPECT_EQ(doamp_rm_new(4, 5, 1, &op), DOAMP_ERR_INVALID_DIMENSION);
}

TEST(CApi, ConfigErrors) {
  Config cfg;
  ASSERT_EQ(doamp_config_new(&cfg.p), DOAMP_OK);
  EXPECT_EQ(doamp_config_set(cfg.p, "no_such_key", "1"), DOAMP_ERR_INVALID_PARAMETER);
  EXPECT_NE(std::string(doamp_last_error()).find("no_such_key"), std::string::npos);
  Config bad;
  EXPECT_EQ(doamp_config_parse("{oops", &bad.p), DOAMP_ERR_FORMAT);
  EXPECT_EQ(bad.p, nullptr);
  EXPECT_EQ(doamp_config_load("/nonexistent/cfg", &bad.p), DOAMP_ERR_IO);
}

TEST(CApi, RunReportsTrials) {
  Config cfg;
  ASSERT_EQ(doamp_config_parse("source.n=512\ntrials=2\nchannel=conditioned\nchannel.kappa=4\n"
                               "channel.basis=multiplexed\niters=4\n",
                               &cfg.p),
            DOAMP_OK);
  doamp_report* report = nullptr;
  ASSERT_EQ(doamp_run(cfg.p, &report), DOAMP_OK) << doamp_last_error();
  EXPECT_EQ(doamp_report_trials(report), 2u);
  double psnr = 0, ssim = 0, iters = 0, nfe = 0;
  size_t failures = 99;
  ASSERT_EQ(doamp_report_summary(report, &psnr, &ssim, &iters, &nfe, &failures), DOAMP_OK);
  EXPECT_EQ(failures, 0u);
  EXPECT_GT(psnr, 10.0);
  double p1 = 0, s1 = 0;
  size_t it1 = 0;
  uint64_t nfe1 = 0;
  ASSERT_EQ(doamp_report_trial(report, 1, &p1, &s1, &it1, &nfe1), DOAMP_OK);
  EXPECT_GE(it1, 1u);
  EXPECT_EQ(doamp_report_trial(report, 2, &p1, &s1, &it1, &nfe1), DOAMP_ERR_INVALID_PARAMETER);
  char* csv = nullptr;
  ASSERT_EQ(doamp_report_csv(report, &csv), DOAMP_OK);
  EXPECT_EQ(take(csv).rfind("beta,sigma,channel,prior,m,trials,", 0), 0u);
  doamp_report_free(report);
}

TEST(CApi, SweepWithOverrides) {
  const auto grid = std::filesystem::temp_directory_path() / "doamp_capi_grid.cfg";
  std::ofstream(grid) << "beta=0.5,0.25\nsigma=0.1\n";
  const char* overrides[] = {"source.n=128", "iters=3"};
  char* csv = nullptr;
  ASSERT_EQ(doamp_sweep(grid.c_str(), overrides, 2, 1, &csv), DOAMP_OK) << doamp_last_error();
  const std::string text = take(csv);
  EXPECT_NE(text.find("\n0.25,0.1,"), std::string::npos);
  EXPECT_LT(text.find("\n0.25,"), text.find("\n0.5,"));
}

TEST(CApi, ChannelInspection) {
  Config cfg;
  ASSERT_EQ(doamp_config_parse("channel=conditioned\nchannel.kappa=50\nsource.n=64\nbeta=0.5\n", &cfg.p),
            DOAMP_OK);
  doamp_channel* ch = nullptr;
  ASSERT_EQ(doamp_channel_from_config(cfg.p, 0, 0, &ch), DOAMP_OK) << doamp_last_error();
  size_t rows = 0, cols = 0, count = 0;
  ASSERT_EQ(doamp_channel_dims(ch, &rows, &cols), DOAMP_OK);
  EXPECT_EQ(rows, 32u);
  double kappa = 0;
  ASSERT_EQ(doamp_channel_condition_number(ch, &kappa), DOAMP_OK);
  EXPECT_NEAR(kappa, 50.0, 1e-9);
  std::vector<double> sv(4);
  ASSERT_EQ(doamp_channel_singular_values(ch, sv.data(), sv.size(), &count), DOAMP_OK);
  EXPECT_EQ(count, 32u);
  EXPECT_GT(sv[0], sv[3]);
  const auto path = std::filesystem::temp_directory_path() / "doamp_capi_channel.oampmat";
  ASSERT_EQ(doamp_channel_export(ch, path.c_str()), DOAMP_OK);
  EXPECT_EQ(std::filesystem::file_size(path), 24u + 32u * 32u * 8u);
  doamp_channel_free(ch);

  double stat = 0, p = 0;
  EXPECT_EQ(doamp_fading_ks(cfg.p, 1000, 1, &stat, &p), DOAMP_ERR_INVALID_PARAMETER);
  ASSERT_EQ(doamp_config_set(cfg.p, "channel", "fading"), DOAMP_OK);
  ASSERT_EQ(doamp_config_set(cfg.p, "channel.taps", "2"), DOAMP_OK);
  ASSERT_EQ(doamp_config_set(cfg.p, "channel.tap_powers", "0.6,0.4"), DOAMP_OK);
  ASSERT_EQ(doamp_fading_ks(cfg.p, 20000, 1, &stat, &p), DOAMP_OK) << doamp_last_error();
  EXPECT_GT(p, 0.01);
  EXPECT_LT(stat, 0.02);
}
