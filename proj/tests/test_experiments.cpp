#include "kvlink/experiments.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace kvlink;
namespace ex = kvlink::experiments;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("kvlink_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("doubles print shortest round-trip") {
    for (const double v : {0.1, 1.0 / 3.0, 1e-300, 12345678.901234, -2.5}) {
        CHECK(std::strtod(ex::format_double(v).c_str(), nullptr) == v);
    }
    CHECK(ex::format_double(0.5) == "0.5");
}

TEST_CASE("grid parsing") {
    const auto g = ex::parse_grid("0.5e9:4e9:8");
    REQUIRE(g.size() == 8);
    CHECK(g.front() == 0.5e9);
    CHECK(g.back() == 4e9);
    CHECK(g[1] == doctest::Approx(1e9));
    CHECK(ex::parse_grid("1,2,5") == std::vector<double>{1, 2, 5});
    CHECK_THROWS_AS(ex::parse_grid("1:2"), ex::ConfigError);
    CHECK_THROWS_AS(ex::parse_grid("a,b"), ex::ConfigError);
    CHECK_THROWS_AS(ex::parse_grid("1:2:0"), ex::ConfigError);
}

TEST_CASE("csv layout") {
    ex::CsvTable t;
    t.header = {"a", "b"};
    t.rows = {{"1", "2"}, {"3", "4"}};
    CHECK(t.to_string() == "a,b\n1,2\n3,4\n");
}

TEST_CASE("model blocks") {
    CHECK(ex::model_from_json(nullptr) == ModelSpec::llama_7b());
    CHECK(ex::model_from_json("llama-7b") == ModelSpec::llama_7b());
    CHECK_THROWS_AS(ex::model_from_json("nope"), ex::UnknownPreset);
    const auto custom = ex::model_from_json(ex::json{{"layers", 2}});
    CHECK(custom.layers == 2);
    CHECK(custom.heads == 32);
    CHECK_THROWS_AS(ex::model_from_json(ex::json{{"layers", -1}}), ex::ConfigError);
    CHECK_THROWS_AS(ex::model_from_json(ex::json{{"layers", "x"}}), ex::ConfigError);
}

TEST_CASE("compare columns") {
    const auto out = ex::run_compare(ex::json{{"axis", "snr"}, {"grid", "-10:30:5"}}, ModelSpec::llama_7b());
    REQUIRE(out.tables.size() == 1);
    const auto& t = out.tables.front().second;
    CHECK(t.header == std::vector<std::string>{"axis_name", "axis_value", "t_nl_s", "t_kv_s", "ratio",
                                               "bottleneck_aa_nl", "bottleneck_aa_kv"});
    CHECK(t.rows.size() == 5);
    CHECK(t.rows[0][0] == "snr");
    CHECK_THROWS_AS(ex::run_compare(ex::json{{"axis", "bogus"}}, ModelSpec::llama_7b()), ex::ConfigError);
}

TEST_CASE("threshold outputs") {
    const auto out = ex::run_threshold(ex::json{{"rho_points", 10}}, ModelSpec::llama_7b());
    CHECK(out.result.contains("k4"));
    CHECK(out.result.contains("rho_star"));
    REQUIRE(out.tables.size() == 2);
    CHECK(out.tables[0].second.header == std::vector<std::string>{"series", "xi", "snr_db", "rho", "f_s"});
    CHECK(out.tables[1].first == "_surface");
    CHECK(out.tables[1].second.header == std::vector<std::string>{"xi", "alpha", "rho_star"});
}

TEST_CASE("single scenario outputs and files") {
    const auto out = ex::run_single_scenario(ex::json{{"agents", 6}, {"c0_tflops", 5}}, ModelSpec::llama_7b(), 42);
    CHECK(out.stochastic);
    CHECK(out.result["x"].size() == 6);
    CHECK(out.result["baselines"].contains("all_kv_opt_s"));
    const auto dir = scratch("single");
    const auto paths = ex::write_outputs(out, dir / "run.csv");
    CHECK(fs::exists(dir / "run.csv"));
    CHECK(fs::exists(dir / "run_topology.csv"));
    CHECK(fs::exists(dir / "run_result.json"));
    CHECK(fs::exists(dir / "run.json"));
    const auto first = slurp(dir / "run.csv");
    const auto sidecar = ex::json::parse(slurp(dir / "run.json"));
    CHECK(sidecar["seed"] == 42);
    CHECK(sidecar["command"] == "jmsra");
    CHECK(first.rfind("series,step,flipped_agent,J_s\n", 0) == 0);

    const auto again = ex::run_single_scenario(ex::json{{"agents", 6}, {"c0_tflops", 5}}, ModelSpec::llama_7b(), 42);
    ex::write_outputs(again, dir / "run.csv");
    CHECK(slurp(dir / "run.csv") == first);
}

TEST_CASE("sweep rows follow grid order") {
    const auto out = ex::run_sweep(ex::json{{"axis", "agents"}, {"grid", "3,5"}, {"trials", 2}},
                                   ModelSpec::llama_7b(), 1);
    const auto& t = out.tables.front().second;
    REQUIRE(t.rows.size() == 4);
    CHECK(t.rows[0][1] == "3");
    CHECK(t.rows[1][2] == "1");
    CHECK(t.rows[2][1] == "5");
    CHECK(t.header.size() == 11);
    CHECK_THROWS_AS(ex::run_sweep(ex::json{{"axis", "snr"}}, ModelSpec::llama_7b(), 1), ex::ConfigError);
}

TEST_CASE("multiround tables per policy") {
    const auto out = ex::run_multiround(ex::json{{"rounds", 3}, {"max_agents", 4}, {"policies", {"jmsra", "all_nl"}}},
                                        ModelSpec::llama_7b(), 8);
    REQUIRE(out.tables.size() == 4);
    CHECK(out.tables[0].first == "_trace_jmsra");
    CHECK(out.tables[1].first == "_ea_jmsra");
    CHECK(out.tables[0].second.rows.size() == 3 * 5);
    CHECK(out.tables[1].second.header ==
          std::vector<std::string>{"round", "theta0", "prefill_s", "decode_s", "total_s"});
    CHECK_THROWS_AS(ex::run_multiround(ex::json{{"policies", {"x"}}}, ModelSpec::llama_7b(), 1), ex::ConfigError);
}

TEST_CASE("unwritable output") {
    ex::ExperimentOutput out;
    out.command = "compare";
    out.tables.emplace_back("", ex::CsvTable{{"a"}, {}});
    CHECK_THROWS_AS(ex::write_outputs(out, "/proc/kvlink_nope/x.csv"), ex::OutputError);
}
