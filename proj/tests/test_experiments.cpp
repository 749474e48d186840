#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "diffwass/experiments.hpp"

using namespace diffwass;
using nlohmann::json;

namespace {

json base(const char* id, int d) {
  return json{{"schema_version", 1}, {"experiment", id}, {"dim", d}, {"horizons", {10.0}}, {"replicas", 4}, {"seed", 7}};
}

ExperimentConfig cfg_of(json j) { return parse_config(j); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("diffwass_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Config, DefaultsAreResolved) {
  const auto c = cfg_of(base("E1", 1));
  EXPECT_EQ(c.grid_n, 4096u);
  EXPECT_EQ(c.lambda_max, 16.0);
  EXPECT_EQ(c.start, StartKind::Uniform);
  EXPECT_EQ(cfg_of(base("E1", 2)).grid_n, 64u);
  EXPECT_EQ(cfg_of(base("E1", 3)).grid_n, 32u);
  EXPECT_EQ(cfg_of(base("E3", 4)).grid_n, 16u);
  EXPECT_EQ(cfg_of(base("E3", 5)).grid_n, 8u);
  const double h = kTwoPi / 64;
  EXPECT_DOUBLE_EQ(resolved_epsilon(cfg_of(base("E1", 2))), 0.5 * h * h);
  EXPECT_NEAR(resolved_epsilon(cfg_of(base("E3", 4))), 0.05 * 4 * M_PI * M_PI, 1e-12);
}

TEST(Config, ReportsEveryViolation) {
  auto j = base("E1", 4);
  j["replicas"] = 0;
  j["bogus"] = 1;
  j["solver"] = {{"relaxation", 2.5}, {"typo", true}};
  j["horizons"] = {10.0, 5.0};
  j["lambda_max"] = 2;
  try {
    parse_config(j);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const auto& v = e.violations();
    auto has = [&](const std::string& s) {
      return std::any_of(v.begin(), v.end(), [&](const std::string& x) { return x.find(s) != std::string::npos; });
    };
    EXPECT_TRUE(has("unknown key bogus"));
    EXPECT_TRUE(has("unknown key solver.typo"));
    EXPECT_TRUE(has("replicas"));
    EXPECT_TRUE(has("strictly increasing"));
    EXPECT_TRUE(has("lambda_max"));
    EXPECT_TRUE(has("relaxation"));
    EXPECT_TRUE(has("E1 requires dim <= 3"));
  }
}

TEST(Config, ExperimentSpecificRules) {
  EXPECT_THROW(cfg_of(base("E3", 3)), ValidationError);
  EXPECT_THROW(cfg_of(base("E2", 4)), ValidationError);
  EXPECT_THROW(cfg_of(base("E4", 1)), ValidationError);  // needs r
  EXPECT_THROW(cfg_of(base("E5", 2)), ValidationError);
  auto pot = base("E7", 1);
  pot["potential"] = {{"kind", "cosine"}, {"amplitude", 0.5}};
  EXPECT_THROW(cfg_of(pot), ValidationError);
  auto bad = base("E9", 1);
  EXPECT_THROW(cfg_of(bad), ValidationError);
  auto types = base("E1", 1);
  types["horizons"] = "long";
  EXPECT_THROW(cfg_of(types), ValidationError);
  auto missing = base("E1", 1);
  missing.erase("seed");
  EXPECT_THROW(cfg_of(missing), ValidationError);
  auto fault = base("E7", 1);
  fault["fault_injection"] = {9};
  EXPECT_THROW(cfg_of(fault), ValidationError);
}

TEST(Config, HashIsStableUnderReorderingAndDefaults) {
  const auto a = json::parse(R"({"schema_version":1,"experiment":"E7","dim":1,"horizons":[10],"replicas":4,"seed":7})");
  const auto b = json::parse(
      R"({"seed":7,"replicas":4,"horizons":[10],"dim":1,"experiment":"E7","schema_version":1,"lambda_max":16,"solver":{"target_tol":0.001}})");
  EXPECT_EQ(config_hash(parse_config(a)), config_hash(parse_config(b)));
  auto c = a;
  c["seed"] = 8;
  EXPECT_NE(config_hash(parse_config(a)), config_hash(parse_config(c)));
  const auto round = parse_config(to_json_value(parse_config(b)));
  EXPECT_EQ(config_hash(round), config_hash(parse_config(a)));
  EXPECT_EQ(config_hash(parse_config(a)).size(), 16u);
}

TEST(Config, LoadFromFile) {
  const auto dir = scratch("load");
  std::filesystem::create_directories(dir);
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "bad.json"), ValidationError);
  std::ofstream(dir / "ok.json") << base("E7", 1).dump();
  EXPECT_EQ(load_config(dir / "ok.json").experiment, ExperimentId::E7);
}

TEST(Run, DeterministicAndThreadIndependent) {
  auto j = base("E7", 2);
  j["replicas"] = 12;
  j["horizons"] = {1.0, 2.0};
  const auto c = cfg_of(j);
  const auto r1 = run_experiment(c, {.threads = 1});
  const auto r3 = run_experiment(c, {.threads = 3});
  ASSERT_EQ(r1.rows.size(), 24u);
  EXPECT_EQ(r1.rows, r3.rows);
  EXPECT_EQ(summary_json(r1).at("aggregates"), summary_json(r3).at("aggregates"));
  EXPECT_EQ(r1.estimate, r3.estimate);
  EXPECT_EQ(r1.config_hash, config_hash(c));
}

TEST(Run, PsiSquaredMatchesClosedForm) {
  auto j = base("E7", 1);
  j["replicas"] = 4000;
  const auto r = run_experiment(cfg_of(j));
  EXPECT_NEAR(r.target, 1.80001, 1e-5);
  EXPECT_NEAR(r.estimate, r.target, 3.0 * r.std_error);
  EXPECT_EQ(r.n_replicas(), 4000u);
}

TEST(Run, FixedStartChangesThePsiTarget) {
  const auto m = enumerate_modes(1, 1.0).front();
  EXPECT_NEAR(detail::expected_psi_squared(m, 10.0, StartKind::Corner), 1.80001 + 0.2 * 0.25, 1e-4);
  EXPECT_EQ(detail::expected_psi_squared(m, 10.0, StartKind::Uniform), expected_psi_squared_stationary(1.0, 10.0));
  auto j = base("E7", 1);
  j["replicas"] = 4000;
  j["horizons"] = {2.0};
  j["start"] = "corner";
  const auto r = run_experiment(cfg_of(j));
  EXPECT_GT(r.target, expected_psi_squared_stationary(1.0, 2.0) + 0.1);
  EXPECT_NEAR(r.estimate, r.target, 3.0 * r.std_error);
}

TEST(Run, DegenerateSingleReplicaSingleStep) {
  for (const char* id : {"E1", "E7"}) {
    auto j = base(id, 1);
    j["replicas"] = 1;
    j["horizons"] = {1e-3};
    j["grid_n"] = 64;
    const auto r = run_experiment(cfg_of(j));
    ASSERT_EQ(r.rows.size(), 1u) << id;
    EXPECT_EQ(r.n_failed(), 0u);
    for (const std::string col : {"t", r.series == "psi_sq" ? "psi_sq" : "t_w2_sq"}) {
      EXPECT_TRUE(std::isfinite(r.rows[0][r.column(col)])) << id << " " << col;
    }
    EXPECT_TRUE(std::isfinite(r.estimate));
    EXPECT_TRUE(std::isnan(r.std_error));
  }
}

TEST(Run, CrashIsolation) {
  auto j = base("E7", 1);
  j["replicas"] = 50;
  j["horizons"] = {1.0};
  const auto clean = run_experiment(cfg_of(j));
  j["fault_injection"] = {3};
  const auto hit = run_experiment(cfg_of(j));
  EXPECT_EQ(hit.n_failed(), 1u);
  EXPECT_EQ(hit.n_replicas(), 49u);
  EXPECT_EQ(hit.failures[0].replica, 3u);
  ASSERT_EQ(hit.rows.size(), 49u);
  std::size_t k = 0;
  for (const auto& row : clean.rows) {
    if (row[0] == 3.0) continue;
    EXPECT_EQ(row, hit.rows[k++]);
  }
  EXPECT_NE(hit.std_error, clean.std_error);
  EXPECT_NEAR(hit.std_error, clean.std_error, 0.3 * clean.std_error);
}

TEST(Run, StandardErrorShrinksAsRootReplicas) {
  auto j = base("E7", 1);
  j["horizons"] = {1.0};
  j["dt"] = 0.01;
  j["replicas"] = 1000;
  const auto small = run_experiment(cfg_of(j));
  j["replicas"] = 4000;
  const auto large = run_experiment(cfg_of(j));
  EXPECT_NEAR(large.std_error / small.std_error, 0.5, 0.1);
}

TEST(Run, CircleLimitMeanWithSandwich) {
  auto j = base("E1", 1);
  j["horizons"] = {20.0};
  j["grid_n"] = 512;
  const auto r = run_experiment(cfg_of(j));
  EXPECT_EQ(r.n_replicas(), 4u);
  EXPECT_NEAR(r.target, 4.0 * std::pow(M_PI, 4) / 90.0, 1e-3);
  EXPECT_EQ(r.extra.at("sandwich_checked").get<int>(), 4);
  EXPECT_EQ(r.extra.at("sandwich_violations").get<int>(), 0);
  for (const auto& row : r.rows) {
    EXPECT_GT(row[r.column("w2_sq")], 0.0);
    EXPECT_LE(row[r.column("w1")], std::sqrt(row[r.column("w2_sq")]) + 1e-12);
    EXPECT_LE(row[r.column("dual_lower")], row[r.column("sandwich_w2_sq")] + 1e-12);
    EXPECT_TRUE(std::isfinite(row[r.column("xi_tail_bound")]));
  }
  ASSERT_NE(r.find("xi", 20.0), nullptr);
}

TEST(Run, TwoTorusUsesSinkhorn) {
  auto j = base("E1", 2);
  j["replicas"] = 2;
  j["horizons"] = {5.0};
  j["grid_n"] = 16;
  const auto r = run_experiment(cfg_of(j));
  EXPECT_NEAR(r.target, 12.0536, 1e-3);
  for (const auto& row : r.rows) {
    EXPECT_GT(row[r.column("w2_sq")], 0.0);
    EXPECT_LE(row[r.column("sinkhorn_gap")], 1e-6);
    EXPECT_TRUE(std::isnan(row[r.column("w1")]));
    EXPECT_GT(row[r.column("xi_tail_bound")], 0.0);
  }
  EXPECT_DOUBLE_EQ(r.extra.at("epsilon").get<double>(), resolved_epsilon(cfg_of(j)));
}

TEST(Run, CirclePotentialTarget) {
  EXPECT_NEAR(detail::potential_limit_target(0.0), 4.0 * std::pow(M_PI, 4) / 90.0, 1e-4);
  auto j = base("E1", 1);
  j["replicas"] = 2;
  j["grid_n"] = 256;
  j["potential"] = {{"kind", "cosine"}, {"amplitude", 0.8}};
  const auto r = run_experiment(cfg_of(j));
  EXPECT_EQ(r.n_replicas(), 2u);
  EXPECT_TRUE(std::isfinite(r.target));
  EXPECT_NE(r.target, detail::potential_limit_target(0.0));
  EXPECT_TRUE(std::isnan(r.rows[0][r.column("xi")]));
}

TEST(Run, CltReportsKsDistances) {
  auto j = base("E2", 1);
  j["replicas"] = 20;
  j["horizons"] = {20.0};
  j["grid_n"] = 256;
  j["solver"] = {{"ks_reference_draws", 2000}};
  const auto r = run_experiment(cfg_of(j));
  EXPECT_EQ(r.headline, "ks_t_w2_sq");
  EXPECT_GT(r.estimate, 0.0);
  EXPECT_LT(r.estimate, 1.0);
  EXPECT_NE(r.find("ks_xi", 20.0), nullptr);
  EXPECT_EQ(r.extra.at("ks_reference_draws").get<int>(), 2000);
}

TEST(Run, RatesFitInHighDimension) {
  auto j = base("E3", 4);
  j["replicas"] = 2;
  j["horizons"] = {2.0, 4.0, 8.0};
  j["grid_n"] = 4;
  const auto r = run_experiment(cfg_of(j));
  EXPECT_EQ(r.aggregates.size(), 3u);
  EXPECT_TRUE(std::isfinite(r.estimate));
  EXPECT_EQ(r.target, -1.0);
  EXPECT_TRUE(r.extra.contains("fit_power_log"));
}

TEST(Run, LaplaceSweepRecoversTheFirstEigenvalue) {
  auto j = base("E4", 1);
  j["replicas"] = 300;
  j["horizons"] = {50.0};
  j["r"] = {0.2, 0.5, 0.75, 1.0};
  const auto r = run_experiment(cfg_of(j));
  EXPECT_NEAR(r.estimate, 1.0, 0.05);
  EXPECT_NEAR(r.extra.at("multiplicity").get<double>(), 2.0, 0.3);
  for (double rr : {0.2, 0.5}) {
    const auto* a = r.find("xi", 50.0, rr);
    ASSERT_NE(a, nullptr);
    EXPECT_NEAR(a->value, a->target, 4.0 * a->std_error);
  }
  EXPECT_EQ(r.extra.at("lambda1_fits")[0].at("r_used").size(), 3u);
}

TEST(Run, SmoothingBiasGrowsWithR) {
  auto j = base("E5", 1);
  j["replicas"] = 3;
  j["horizons"] = {20.0};
  j["grid_n"] = 512;
  j["r"] = {0.01, 0.02, 0.04};
  const auto r = run_experiment(cfg_of(j));
  ASSERT_EQ(r.aggregates.size(), 3u);
  EXPECT_LT(r.aggregates[0].value, r.aggregates[1].value);
  EXPECT_LT(r.aggregates[1].value, r.aggregates[2].value);
  EXPECT_TRUE(std::isfinite(r.estimate));
}

TEST(Run, RateFunctionCurve) {
  auto j = base("E6", 1);
  j["r"] = {0.1, 0.05};
  j["solver"] = {{"rate_grid_n", 128}};
  const auto r = run_experiment(cfg_of(j));
  EXPECT_EQ(r.n_replicas(), 2u);
  EXPECT_TRUE(r.extra.at("monotone").get<bool>());
  EXPECT_NEAR(r.estimate, 0.25, 0.02);
}

TEST(Run, RejectsModeIndexBeyondTheList) {
  auto j = base("E7", 1);
  j["solver"] = {{"mode_index", 100}};
  EXPECT_THROW(run_experiment(cfg_of(j)), ValidationError);
}

TEST(Report, OneRecordGivesDataAndTargetRows) {
  auto j = base("E7", 1);
  j["replicas"] = 5;
  const auto rec = run_experiment(cfg_of(j));
  const auto dir = scratch("report_one");
  const auto files = emit_report({rec}, dir);
  ASSERT_EQ(files.size(), 2u);
  const std::string csv = slurp(dir / "E7_plot.csv");
  EXPECT_EQ(count_lines(csv), 3u);
  EXPECT_NE(csv.find("\ndata,"), std::string::npos);
  EXPECT_NE(csv.find("\ntarget,"), std::string::npos);
  const auto summary = json::parse(slurp(dir / "E7_summary.json"));
  const auto& run = summary.at("runs").at(0);
  for (const char* k : {"experiment", "config_hash", "n_replicas", "estimate", "stderr", "target", "target_provenance"}) {
    EXPECT_TRUE(run.contains(k)) << k;
  }
}

TEST(Report, GroupsByExperimentAndIsByteIdentical) {
  auto a = base("E7", 1);
  a["replicas"] = 3;
  auto b = a;
  b["seed"] = 99;
  auto c = base("E6", 1);
  c["r"] = {0.05};
  c["solver"] = {{"rate_grid_n", 64}};
  std::vector<RunRecord> recs{run_experiment(cfg_of(a)), run_experiment(cfg_of(c)), run_experiment(cfg_of(b))};
  const auto dir = scratch("report_mixed");
  const auto files = emit_report(recs, dir);
  EXPECT_EQ(files.size(), 4u);
  EXPECT_TRUE(std::filesystem::exists(dir / "E6_summary.json"));
  EXPECT_EQ(json::parse(slurp(dir / "E7_summary.json")).at("runs").size(), 2u);
  std::vector<std::string> first;
  for (const auto& f : files) first.push_back(slurp(f));
  std::reverse(recs.begin(), recs.end());
  const auto again = emit_report(recs, dir);
  ASSERT_EQ(again, files);
  for (std::size_t i = 0; i < files.size(); ++i) EXPECT_EQ(slurp(files[i]), first[i]);
}

TEST(Report, UnwritablePathIsAnIoError) {
  auto j = base("E7", 1);
  j["replicas"] = 2;
  const auto rec = run_experiment(cfg_of(j));
  const auto dir = scratch("report_bad");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  EXPECT_THROW(emit_report({rec}, dir / "file" / "sub"), IoError);
  EXPECT_THROW(emit_report({}, dir), ArgumentError);
}

TEST(Report, RecordRoundTrip) {
  auto j = base("E1", 1);
  j["replicas"] = 2;
  j["horizons"] = {5.0};
  j["grid_n"] = 128;
  const auto rec = run_experiment(cfg_of(j));
  const auto dir = scratch("record");
  save_record(rec, dir);
  const auto loaded = load_records(dir);
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(json(loaded[0]).dump(), json(rec).dump());
  EXPECT_EQ(loaded[0].rows.size(), rec.rows.size());
  const std::string csv = slurp(dir / (record_stem(rec) + "_replicas.csv"));
  EXPECT_EQ(count_lines(csv), rec.rows.size() + 1);
  EXPECT_THROW(load_records(dir / "nope"), IoError);
}
