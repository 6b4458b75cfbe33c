#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "fragilis/io.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kData = FRAGILIS_TEST_DATA_DIR;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "fragilis");
  std::ostringstream out;
  std::ostringstream err;
  const int code = fragilis::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fragilis-cli-test-" + std::to_string(std::random_device{}())) / name;
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("appraise the stylized dam") {
    const auto dir = scratch("appraise");
    const auto r = run({"appraise", kData + "/stylized-dam.json", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = load(dir / "appraisal.json");
    CHECK(j["result"]["bcr"].get<double>() == doctest::Approx(1.4).epsilon(1e-12));
    CHECK(j["result"]["break_even_overrun"].get<double>() == doctest::Approx(1.4).epsilon(1e-9));
    CHECK(fs::exists(dir / "payoff.csv"));
    CHECK_FALSE(fs::exists(dir / "payoff.svg"));

    const auto m = fragilis::cli::manifest_from_json(load(dir / "appraise.manifest.json"));
    REQUIRE(m.inputs.size() == 1);
    CHECK(m.inputs[0].sha256 == fragilis::cli::sha256_file(kData + "/stylized-dam.json"));
    CHECK_FALSE(m.seed.has_value());
    CHECK(m.tool_version == fragilis::cli::kToolVersion);
  }

  TEST_CASE("svg output is opt-in") {
    const auto dir = scratch("svg");
    REQUIRE(run({"appraise", kData + "/stylized-dam.json", "--out", dir.string(), "--format", "csv", "--format", "svg"})
                .code == 0);
    CHECK(fs::exists(dir / "payoff.svg"));
    CHECK(slurp(dir / "payoff.svg").find("<polyline") != std::string::npos);

    // Density tails far from the data underflow to subnormal values.
    REQUIRE(run({"density", kData + "/synthetic-dams-245.csv", "--out", dir.string(), "--format", "csv", "--format",
                 "svg"})
                .code == 0);
    CHECK(fs::exists(dir / "density.svg"));
  }

  TEST_CASE("seeded stress runs are byte-identical and record the seed") {
    const auto a = scratch("stress-a");
    const auto b = scratch("stress-b");
    for (const auto& [dir, threads] : {std::pair{a, "1"}, std::pair{b, "4"}})
      REQUIRE(run({"stress", kData + "/stylized-dam.json", "--trials", "20000", "--seed", "7", "--threads", threads,
                   "--out", dir.string()})
                  .code == 0);
    CHECK(slurp(a / "stress.json") == slurp(b / "stress.json"));
    CHECK(slurp(a / "npv_quantiles.csv") == slurp(b / "npv_quantiles.csv"));
    const auto j = load(a / "stress.json");
    CHECK(j["result"]["seed"] == 7);
    CHECK(j["break_even_overrun"].get<double>() == doctest::Approx(1.4).epsilon(1e-9));
    CHECK(fragilis::cli::manifest_from_json(load(a / "stress.manifest.json")).seed == 7u);

    // Without --seed one is generated and recorded.
    const auto c = scratch("stress-c");
    REQUIRE(run({"stress", kData + "/stylized-dam.json", "--trials", "100", "--out", c.string()}).code == 0);
    const auto seed = fragilis::cli::manifest_from_json(load(c / "stress.manifest.json")).seed;
    REQUIRE(seed.has_value());
    CHECK(load(c / "stress.json")["result"]["seed"] == *seed);
  }

  TEST_CASE("stats on the synthetic fixture reproduces its truth file") {
    const auto dir = scratch("stats");
    REQUIRE(run({"stats", kData + "/synthetic-dams-245.csv", "--threshold", "1", "--threshold", "1.4", "--threshold", "2",
                 "--threshold", "3", "--out", dir.string()})
                .code == 0);
    const auto s = load(dir / "stats.json")["summary"];
    const auto truth = load(kData + "/synthetic-dams-245.truth.json")["cost"];
    CHECK(s["n"] == truth["n"]);
    CHECK(s["median"].get<double>() == truth["median"].get<double>());
    CHECK(s["iqr"].get<double>() == truth["iqr"].get<double>());
    CHECK(s["share_over_1"].get<double>() == truth["share_over_1"].get<double>());
    CHECK(s["mean"].get<double>() == doctest::Approx(truth["mean"].get<double>()).epsilon(1e-12));
    for (const auto& b : truth["share_breaking"]) {
      bool found = false;
      for (const auto& got : s["share_breaking"])
        if (got["threshold"] == b["threshold"]) {
          found = true;
          CHECK(got["share"].get<double>() == b["share"].get<double>());
        }
      CHECK(found);
    }
  }

  TEST_CASE("exit codes") {
    const auto dir = scratch("errors");
    CHECK(run({"appraise", (dir / "missing.json").string(), "--out", dir.string()}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"stats", kData + "/synthetic-dams-245.csv", "--metric", "weight", "--out", dir.string()}).code == 2);

    std::ofstream(dir / "bad.csv") << "id,name,country,region,project_type,decision_year,est_cost,act_cost,est_months,"
                                      "act_months,est_benefit,act_benefit\n"
                                      "X1,Dam,Nowhere,Atlantis,hydroelectric,1970,1,2,3,4,,\n";
    const auto bad = run({"stats", (dir / "bad.csv").string(), "--strict", "--out", dir.string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("row 2") != std::string::npos);
    CHECK(bad.err.find("region") != std::string::npos);

    // Mean target beyond any finite-mean tail: a computation error.
    std::ofstream(dir / "wild.json") << R"({"anchors": [{"p": 0.5, "x": 1.0}], "floor_x": 0.5,
                                           "tail": {"calibrate_mean": 500}})";
    CHECK(run({"contingency", kData + "/stylized-dam.json", "--dist", (dir / "wild.json").string(), "--out",
               dir.string()})
              .code == 3);
  }

  TEST_CASE("report embeds the artifact numbers verbatim") {
    const auto dir = scratch("report");
    const auto model = kData + "/stylized-dam.json";
    REQUIRE(run({"appraise", model, "--out", dir.string()}).code == 0);
    REQUIRE(run({"stress", model, "--trials", "5000", "--seed", "3", "--out", dir.string()}).code == 0);
    REQUIRE(run({"contingency", model, "--out", dir.string()}).code == 0);
    REQUIRE(run({"grid", model, "--out", dir.string()}).code == 0);
    REQUIRE(run({"report", "--out", dir.string()}).code == 0);
    const auto md = slurp(dir / "report.md");
    const auto appraisal = load(dir / "appraisal.json")["result"];
    const auto stress = load(dir / "stress.json")["result"];
    const auto cont = load(dir / "contingency.json")["result"];
    for (const auto& v : {appraisal["npv"], appraisal["bcr"], appraisal["irr"], appraisal["break_even_delay"],
                          stress["p_break"], stress["mean_npv"], cont["adjusted_bcr"]})
      CHECK_MESSAGE(md.find(v.dump()) != std::string::npos, v.dump());
    for (const auto& q : stress["npv_quantiles"]) CHECK(md.find(q["npv"].dump()) != std::string::npos);
    CHECK(md.find("do-not-proceed") != std::string::npos);
    const auto m = fragilis::cli::manifest_from_json(load(dir / "report.manifest.json"));
    CHECK(m.inputs.size() == 4);
  }

  TEST_CASE("fragility command") {
    const auto dir = scratch("fragility");
    std::ofstream(dir / "graph.json") << R"({
      "components": {"a": {"threshold": 1.4, "recoverability": 0.2},
                     "b": {"threshold": 1.1, "recoverability": 0.8},
                     "c": {"threshold": 2.0, "recoverability": 0.5}},
      "root": {"kind": "series", "children": ["a", "b", "c"]}})";
    REQUIRE(run({"fragility", (dir / "graph.json").string(), "--out", dir.string()}).code == 0);
    const auto j = load(dir / "fragility.json");
    CHECK(j["system_threshold"] == 1.1);
    CHECK(j["quadrants"]["a"]["archetype"] == "diamond");
    CHECK(j["quadrants"]["c"]["quadrant"] == "Q1");
  }
}
