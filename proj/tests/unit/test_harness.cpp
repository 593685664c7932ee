#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "afshape/errors.hpp"
#include "afshape/harness.hpp"
#include "afshape/io.hpp"
#include "doctest.h"

using namespace afs;

namespace {

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

ExperimentConfig parse_config(const std::string& text) { return config_from_json(io::parse_json(text, "cfg.json")); }

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("parse errors carry the line") {
    const std::string msg = message_of([] { io::parse_json("{\n  \"a\": 1,\n  \"b\": \n}", "bad.json"); });
    CHECK(contains(msg, "bad.json"));
    CHECK(contains(msg, "line 4"));
  }

  TEST_CASE("strict reader") {
    auto doc = std::make_shared<io::JsonDocument>(io::parse_json("{\n\"x\": 1.5,\n\"n\": \"two\",\n\"extra\": true\n}", "r.json"));
    io::ObjectReader r(doc->root, "top", doc);
    CHECK(r.number("x") == 1.5);
    CHECK(r.number("missing", 7.0) == 7.0);
    const std::string type_msg = message_of([&] { r.integer("n", 0); });
    CHECK(contains(type_msg, "r.json:3"));
    CHECK(contains(type_msg, "top.n"));
    const std::string unknown_msg = message_of([&] { r.finish(); });
    CHECK(contains(unknown_msg, "extra"));
    CHECK(contains(unknown_msg, "r.json:4"));
  }

  TEST_CASE("allocation and grid round trips") {
    PowerAllocation a = equal_allocation(8);
    a.power[0] = 1.5;
    a.power[1] = 0.5;
    const PowerAllocation back = io::allocation_from_json(io::to_json(a));
    CHECK(back.power == a.power);
    OfdmGrid g;
    g.n = 128;
    g.m_sym = 4;
    auto doc = std::make_shared<io::JsonDocument>();
    doc->root = io::to_json(g);
    const OfdmGrid g2 = io::grid_from_json(io::ObjectReader(doc->root, "grid", doc));
    CHECK(g2.n == 128);
    CHECK(g2.m_sym == 4);
    CHECK(g2.bandwidth_hz == g.bandwidth_hz);
  }

  TEST_CASE("design request parsing") {
    const auto doc = io::parse_json(R"({"rho": 0.25, "eps_psl_db": -5, "eps_isl_db": 7,
      "constellation": "16QAM", "channel": {"type": "flat", "snr_db": 10}, "n0": "search"})");
    const DesignRequest req = io::design_request_from_json(doc);
    CHECK(req.rho == 0.25);
    CHECK(linear_to_db(req.eps_psl) == doctest::Approx(-5.0));
    CHECK_FALSE(req.n0.has_value());
    CHECK(req.channel.n() == req.grid.n);
    const auto bad = io::parse_json("{\n\"rho\": 0.5,\n\"epsilon\": 3\n}");
    const std::string msg = message_of([&] { io::design_request_from_json(bad); });
    CHECK(contains(msg, "epsilon"));
    CHECK(contains(msg, ":3"));
  }
}

TEST_SUITE("harness") {
  TEST_CASE("experiment identifiers") {
    const auto& ids = experiment_ids();
    CHECK(ids.size() == 10);
    for (const auto& id : ids) CHECK_NOTHROW(default_config(id));
    CHECK_THROWS_AS(default_config("fig3"), ConfigError);
  }

  TEST_CASE("config schema") {
    const ExperimentConfig cfg = parse_config(R"({"experiment": "fig9", "seed": 7, "trials": 10,
      "params": {"snr_db": [-10, 0]}})");
    CHECK(cfg.seed == 7);
    CHECK(cfg.trials == 10);
    CHECK(cfg.params["snr_db"].size() == 2);
    CHECK(cfg.params["clutter_range_m"] == 30.0);

    const std::string unknown = message_of([] { parse_config("{\n\"experiment\": \"fig9\",\n\"sed\": 3\n}"); });
    CHECK(contains(unknown, "sed"));
    CHECK(contains(unknown, "cfg.json:3"));
    const std::string param = message_of([] {
      parse_config("{\n\"experiment\": \"fig9\",\n\"params\": {\n  \"clutter_db\": 3\n}\n}");
    });
    CHECK(contains(param, "params.clutter_db"));
    CHECK(contains(param, "cfg.json:4"));
    CHECK_THROWS_AS(parse_config(R"({"experiment": "fig99"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment": "fig9", "trials": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment": "fig9", "constellation": "8PSK"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment": "fig9", "params": {"snr_db": "high"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"experiment": "fig10", "params": {"rooting": "bisect"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"schema_version": 2, "experiment": "fig9"})"), ConfigError);
  }

  TEST_CASE("overrides") {
    io::json j = {{"experiment", "fig9"}};
    apply_override(j, "params.snr_db=[-5,0]");
    apply_override(j, "constellation=QPSK");
    apply_override(j, "seed=11");
    CHECK(j["params"]["snr_db"] == io::json({-5, 0}));
    CHECK(j["constellation"] == "QPSK");
    CHECK(j["seed"] == 11);
    CHECK_THROWS_AS(apply_override(j, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "seed.inner=1"), ConfigError);
  }

  TEST_CASE("hashes") {
    CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    ExperimentConfig a = default_config("fig6");
    ExperimentConfig b = a;
    b.threads = 7;
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 1;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 40);
  }

  TEST_CASE("results do not depend on the thread count") {
    ExperimentConfig cfg = default_config("fig4");
    cfg.trials = 40;
    cfg.threads = 1;
    const ExperimentResult one = run_experiment(cfg);
    cfg.threads = 4;
    const ExperimentResult four = run_experiment(cfg);
    REQUIRE(one.tables.size() == four.tables.size());
    for (std::size_t i = 0; i < one.tables.size(); ++i) CHECK(one.tables[i].csv == four.tables[i].csv);
    CHECK(one.summary == four.summary);

    ExperimentConfig det = default_config("fig9");
    det.trials = 6;
    det.params["snr_db"] = {-20.0, -10.0, 0.0};
    det.params["eps_isl_db"] = {7.0};
    det.threads = 1;
    const ExperimentResult d1 = run_experiment(det);
    det.threads = 3;
    const ExperimentResult d3 = run_experiment(det);
    REQUIRE(d1.tables.size() == 1);
    CHECK(d1.tables[0].csv == d3.tables[0].csv);
    CHECK(contains(d1.tables[0].csv, "snr_db,pd,ci_low,ci_high,receiver,waveform_id"));
  }

  TEST_CASE("run directory and manifest") {
    const auto root = std::filesystem::temp_directory_path() / "afshape_harness_test";
    std::filesystem::remove_all(root);
    ExperimentConfig cfg = default_config("fig6");
    const RunRecord first = run_and_write(cfg, root);
    CHECK(first.dir == root / "fig6" / config_hash(cfg).substr(0, 12));
    for (const char* f : {"fig6_tradeoff.csv", "config.json", "summary.json", "manifest.json"}) {
      CHECK(std::filesystem::exists(first.dir / f));
    }
    const auto& files = first.manifest["files"];
    REQUIRE(files.size() == 3);
    for (const auto& f : files) {
      std::ifstream in(first.dir / f["name"].get<std::string>(), std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      CHECK(git_blob_sha1(ss.str()) == f["sha1"]);
      CHECK(ss.str().size() == f["bytes"].get<std::size_t>());
    }
    cfg.threads = 2;
    const RunRecord second = run_and_write(cfg, root);
    CHECK(second.dir == first.dir);
    CHECK(second.manifest["content_hash"] == first.manifest["content_hash"]);
    // The written config reloads to the same hash.
    const ExperimentConfig reloaded = config_from_json(io::load_json_file((first.dir / "config.json").string()));
    CHECK(config_hash(reloaded) == config_hash(cfg));
    std::filesystem::remove_all(root);
  }
}
