/*
 * Copyright 2026 The disparity-trial authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "fixtures.hpp"

#include "disparity/config.hpp"
#include "disparity/errors.hpp"
#include "disparity/estimators.hpp"
#include "disparity/pipeline.hpp"
#include "disparity/report.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace disparity;
using namespace disparity::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kData = DISPARITY_TEST_DATA;

json read_json(const std::string& path)
{
    std::ifstream in(path);
    return json::parse(in);
}

RunConfig config_from(json doc)
{
    return parse_run_config(doc, kData);
}

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / "disparity_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

int run_cli(const std::string& args)
{
    std::string cmd = std::string(DISPARITY_CLI) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST(Pipeline, TwelveRecordDifference)
{
    auto res = run_pipeline(load_run_config(kData + "/twelve_config.json"));
    ASSERT_EQ(res.status, 0) << res.report.dump();
    EXPECT_EQ(res.report["status"], "ok");
    EXPECT_NEAR(res.report["tau_r"].get<double>(), 2.0 / 3.0, 1e-10);
    EXPECT_NEAR(res.report["tau_rprime"].get<double>(), 7.0 / 18.0, 1e-10);
    EXPECT_NEAR(res.report["difference"].get<double>(), 5.0 / 18.0, 1e-10);
    EXPECT_TRUE(res.report["ci"].is_null());
    EXPECT_TRUE(res.report["bootstrap"].is_null());
}

TEST(Pipeline, WeightDiagnosticsPassThrough)
{
    auto res = run_pipeline(load_run_config(kData + "/twelve_config.json"));
    ASSERT_EQ(res.status, 0);
    auto est = estimate_disparity(twelve_record_table(), twelve_record_spec(), EstimatorKind::Weighting);
    ASSERT_TRUE(est.weights.has_value());
    EXPECT_EQ(round_numbers(res.report["weights"]), round_numbers(to_json(*est.weights)));
    EXPECT_EQ(res.report["weights"]["count"], 10);
}

TEST(Pipeline, ReportRoundTripsByteIdentical)
{
    auto res = run_pipeline(load_run_config(kData + "/twelve_config.json"));
    auto text = serialize_report(res.report);
    EXPECT_EQ(serialize_report(json::parse(text)), text);
}

TEST(Pipeline, DeterministicGivenSeed)
{
    auto doc = read_json(kData + "/estimate_config.json");
    doc["bootstrap"] = {{"replicates", 20}};
    auto a = serialize_report(run_pipeline(config_from(doc)).report);
    auto b = serialize_report(run_pipeline(config_from(doc)).report);
    EXPECT_EQ(a, b);
    auto j = json::parse(a);
    ASSERT_EQ(j["status"], "ok") << a;
    ASSERT_TRUE(j["ci"].is_array());
    EXPECT_LE(j["ci"][0].get<double>(), j["ci"][1].get<double>());
    EXPECT_TRUE(j["estimators"].contains("weighting"));
    EXPECT_TRUE(j["estimators"].contains("ice"));
}

TEST(Pipeline, MissingSeedIsConfigError)
{
    auto doc = read_json(kData + "/twelve_config.json");
    doc.erase("seed");
    auto res = run_pipeline(config_from(doc));
    EXPECT_EQ(res.status, exit_code(ErrorCode::ConfigError));
    EXPECT_EQ(res.report["status"], "error");
    EXPECT_EQ(res.report["error"]["code"], "ConfigError");
}

TEST(Pipeline, UnknownVariableReported)
{
    auto doc = read_json(kData + "/twelve_config.json");
    doc["allowables"] = json::array({{{"name", "zz"}, {"term", "categorical"}}});
    auto res = run_pipeline(config_from(doc));
    EXPECT_EQ(res.status, exit_code(ErrorCode::UnknownVariable));
    EXPECT_FALSE(res.report["error"]["module"].get<std::string>().empty());
}

TEST(Config, UnknownKeyRejected)
{
    auto doc = read_json(kData + "/twelve_config.json");
    doc["analysis"]["estimatr"] = "ice";
    EXPECT_THROW(config_from(doc), Error);
}

TEST(Pipeline, OracleReportsTruthAndEstimates)
{
    auto doc = read_json(kData + "/oracle_config.json");
    auto res = run_pipeline(config_from(doc));
    ASSERT_EQ(res.status, 0) << res.report.dump();
    const auto& props = res.report["propositions"];
    for (const char* p : {"I", "II"}) {
        ASSERT_TRUE(props.contains(p)) << p;
        const auto& e = props[p];
        double truth = e["truth"]["difference"]["value"];
        double se = e["truth"]["difference"]["se"];
        EXPECT_GT(se, 0.0);
        for (const char* k : {"weighting", "ice"}) {
            EXPECT_NEAR(e[k]["difference"].get<double>(), truth, 4 * se) << p << " " << k;
        }
    }
}

TEST(Pipeline, SampleModeWritesStages)
{
    auto doc = read_json(kData + "/estimate_config.json");
    auto out = scratch("sample.csv");
    doc["mode"] = "sample";
    doc["sampling"] = {{"sizes", {{"0", {1200, 500, 200}}, {"1", {1200, 500, 200}}}}, {"output", out.string()}};
    auto res = run_pipeline(config_from(doc));
    ASSERT_EQ(res.status, 0) << res.report.dump();
    EXPECT_FALSE(res.report["strata"].empty());
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header.substr(header.rfind(',') + 1), "stage");
    std::size_t lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    std::size_t stage1 = res.report["sampled"]["stage1"]["0"].get<std::size_t>() + res.report["sampled"]["stage1"]["1"].get<std::size_t>();
    EXPECT_EQ(lines, stage1);
}

TEST(Pipeline, ValidateModeListsStrata)
{
    auto doc = read_json(kData + "/twelve_config.json");
    doc["mode"] = "validate";
    auto res = run_pipeline(config_from(doc));
    ASSERT_EQ(res.status, 0) << res.report.dump();
    EXPECT_EQ(res.report["validation"]["strata"].size(), 2u);
}

TEST(Pipeline, SimulateWritesPopulation)
{
    auto doc = read_json(kData + "/oracle_config.json");
    auto out = scratch("population.csv");
    doc["mode"] = "simulate";
    doc["population_out"] = out.string();
    auto res = run_pipeline(config_from(doc));
    ASSERT_EQ(res.status, 0) << res.report.dump();
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    EXPECT_NE(header.find("truth_Y_w0"), std::string::npos);
}

TEST(Cli, ExitCodes)
{
    auto cfg = kData + "/twelve_config.json";
    auto out = scratch("report.json");
    fs::remove(out);
    EXPECT_EQ(run_cli("--config " + cfg + " --out " + out.string()), 0);
    auto j = read_json(out.string());
    EXPECT_NEAR(j["difference"].get<double>(), 5.0 / 18.0, 1e-10);

    EXPECT_EQ(run_cli("--config " + cfg + " --data /nonexistent/x.csv --out " + out.string()),
              exit_code(ErrorCode::ConfigError));
    j = read_json(out.string());
    EXPECT_EQ(j["error"]["code"], "ConfigError");

    EXPECT_NE(run_cli("--bogus"), 0);
    EXPECT_EQ(run_cli("--help"), 0);
}

TEST(Cli, SeedOverrideChangesSelectionSeed)
{
    auto cfg = kData + "/twelve_config.json";
    auto a = scratch("a.json");
    auto b = scratch("b.json");
    ASSERT_EQ(run_cli("--config " + cfg + " --seed 1 --out " + a.string()), 0);
    ASSERT_EQ(run_cli("--config " + cfg + " --seed 2 --out " + b.string()), 0);
    EXPECT_NE(read_json(a.string())["seeds"]["selection"], read_json(b.string())["seeds"]["selection"]);
    EXPECT_EQ(read_json(a.string())["seeds"]["master"], 1);
}
