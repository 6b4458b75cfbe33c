#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fragilis/error.hpp"
#include "fragilis/io.hpp"
#include "generators.hpp"
#include "manifest.hpp"

using namespace fragilis;
using nlohmann::json;

TEST_SUITE("io") {
  TEST_CASE("appraisal model round trip") {
    std::mt19937_64 gen(3);
    for (int i = 0; i < 50; ++i) {
      const auto m = testing::random_model(gen);
      const auto text = io::dump(io::to_json(m));
      CHECK(io::model_from_json(json::parse(text)) == m);
    }
  }

  TEST_CASE("model validation errors") {
    const json no_rate = {{"capex", json::array()}, {"om", json::array()}, {"benefits", json::array()}};
    CHECK_THROWS_AS(io::model_from_json(no_rate), ParseError);
    json bad = json::parse(R"({"discount_rate": -1.5, "capex": [], "om": [], "benefits": []})");
    CHECK_THROWS_AS(io::model_from_json(bad), ParseError);
    json neg = json::parse(R"({"discount_rate": 0.1, "capex": [{"t": 0, "amount": -1}], "om": [], "benefits": []})");
    CHECK_THROWS_AS(io::model_from_json(neg), ParseError);
  }

  TEST_CASE("distribution round trip") {
    const auto d = stress::big_dam_cost_distribution();
    const auto j = io::to_json(d);
    CHECK(j["mean"].get<double>() == doctest::Approx(1.96).epsilon(1e-6));
    CHECK(io::distribution_from_json(json::parse(io::dump(j))) == d);

    const auto explicit_tail = stress::QuantileDistribution::build({{0.5, 1.0}}, 0.5, stress::GpdTail{0.2, 0.3});
    CHECK(io::distribution_from_json(io::to_json(explicit_tail)) == explicit_tail);

    const auto fixed = io::uncertain_from_json(json(1.15));
    REQUIRE(std::holds_alternative<stress::Fixed>(fixed));
    CHECK(std::get<stress::Fixed>(fixed).value == 1.15);
    CHECK(io::to_json(fixed) == json(1.15));
  }

  TEST_CASE("stress config round trip") {
    stress::StressConfig c;
    c.n_trials = 1234;
    c.seed = 0xFFFFFFFFFFFFFFFFULL;
    c.capex = stress::big_dam_cost_distribution();
    c.schedule = stress::big_dam_schedule_distribution();
    c.est_duration_years = 6.5;
    c.shortfall = stress::Fixed{0.2};
    const auto back = io::stress_config_from_json(json::parse(io::dump(io::to_json(c))));
    CHECK(back.n_trials == c.n_trials);
    CHECK(back.seed == c.seed);
    CHECK(back.est_duration_years == 6.5);
    CHECK(std::get<stress::QuantileDistribution>(back.capex) == std::get<stress::QuantileDistribution>(c.capex));
    REQUIRE(back.schedule.has_value());
    CHECK(std::get<stress::Fixed>(back.shortfall).value == 0.2);
    CHECK(back.npv_probs == c.npv_probs);
  }

  TEST_CASE("system graph round trip") {
    const auto j = json::parse(R"({
      "components": {"spillway": {"threshold": 1.4, "recoverability": 0.2},
                     "turbine_a": {"threshold": 1.0, "recoverability": 0.7},
                     "turbine_b": {"threshold": 3.0, "recoverability": 0.7}},
      "root": {"kind": "series", "children": ["spillway", {"kind": "redundant", "children": ["turbine_a", "turbine_b"]}]}
    })");
    const auto g = io::system_graph_from_json(j);
    CHECK(systems::system_threshold(g) == 1.4);
    const auto again = io::system_graph_from_json(io::to_json(g));
    CHECK(io::to_json(again) == io::to_json(g));
    auto bad = j;
    bad["root"]["kind"] = "parallel-ish";
    CHECK_THROWS_AS(io::system_graph_from_json(bad), ParseError);
  }

  TEST_CASE("numbers are written in shortest round-trip form") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> d(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
      const double v = d(gen) / 7.0;
      CHECK(std::stod(io::format_number(v)) == v);
    }
    CHECK(io::format_number(1.4) == "1.4");
    CHECK(io::format_number(0.1 + 0.2) == "0.30000000000000004");
  }

  TEST_CASE("test results with a non-finite statistic serialize as null") {
    stats::TestResult r;
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    const auto j = io::to_json(r);
    CHECK(j["statistic"].is_null());
    CHECK(j["p_value"] == 0.0);
  }

  TEST_CASE("manifest") {
    cli::RunManifest m;
    m.command_line = {"fragilis", "stress", "model.json", "--seed", "7"};
    m.inputs = {{"model.json", cli::sha256_hex("abc")}};
    m.seed = 7;
    m.timestamp = cli::utc_timestamp();
    CHECK(cli::manifest_from_json(json::parse(cli::to_json(m).dump())) == m);
    CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(cli::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(m.timestamp.size() == 20);
    CHECK(m.timestamp.back() == 'Z');
  }
}
