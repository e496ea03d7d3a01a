#ifdef ESGAIN_HAVE_APP

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "app.hpp"
#include "esgain/error.hpp"

using nlohmann::json;
using namespace esgain;
using namespace esgain::app;

namespace {

const char* kBasic = R"({
  "scheme": {"kind": "Basic1D", "h": "-cos(x) + 0.16666666666666666*x^3",
             "gains": {"a": 0.1, "p": 0.5}, "avg_order": 4}
})";

int exit_for_config(const json& j) {
  try {
    parse_config(j);
    return 0;
  } catch (const std::exception& e) {
    return exit_code_for(e);
  }
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("esgain_unit_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("config validation maps to exit status 2") {
  json j = json::parse(kBasic);
  CHECK(exit_for_config(j) == 0);

  json no_kind = j;
  no_kind["scheme"].erase("kind");
  CHECK(exit_for_config(no_kind) == 2);

  json both = j;
  both["scheme"]["gains"]["eta"] = 0.01;
  CHECK(exit_for_config(both) == 2);

  json bad_h = j;
  bad_h["scheme"]["h"] = "x + / 2";
  CHECK(exit_for_config(bad_h) == 2);

  json bad_order = j;
  bad_order["scheme"]["avg_order"] = 40;
  CHECK(exit_for_config(bad_order) == 2);

  json bad_kind = j;
  bad_kind["scheme"]["kind"] = "Tripod";
  CHECK(exit_for_config(bad_kind) == 2);

  CHECK(exit_code_for(InfeasibleError("x")) == 3);
  CHECK(exit_code_for(OverflowError("x")) == 4);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);
  const json err = error_json(ConfigError("missing field"));
  CHECK(err.contains("error"));
}

TEST_CASE("gains given through p use the bookkeeping exponents") {
  json j = json::parse(kBasic);
  j["scheme"]["gains"] = {{"a", 0.2}, {"p", 1.5}, {"m", 3}, {"n", 1}};
  const RunConfig cfg = parse_config(j);
  CHECK(cfg.scheme->instance.gains.eta == doctest::Approx(1.5 * 0.008).epsilon(1e-14));
  CHECK(cfg.scheme->avg_order == 4);
}

TEST_CASE("config hash ignores key order and tracks values") {
  const json a = json::parse(R"({"x": 1, "y": {"b": 2, "a": [1, 2]}})");
  const json b = json::parse(R"({"y": {"a": [1, 2], "b": 2}, "x": 1})");
  const json c = json::parse(R"({"y": {"a": [1, 2], "b": 3}, "x": 1})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("json dumps keep every double digit") {
  const json j = {{"v", 0.1}, {"w", 1.0 / 3.0}, {"bad", std::nan("")}};
  const std::string s = dump_json(j, -1);
  CHECK(s.find("0.10000000000000001") != std::string::npos);
  CHECK(s.find("0.33333333333333331") != std::string::npos);
  CHECK(s.find("null") != std::string::npos);
  CHECK(json::parse(s)["w"].get<double>() == 1.0 / 3.0);
}

TEST_CASE("average command writes the scaled gradient at degree two") {
  RunConfig cfg = parse_config(json::parse(kBasic));
  RunOptions opts;
  opts.out_dir = scratch("average");
  std::ostringstream log;
  CHECK(run_command("average", cfg, opts, log) == 0);
  std::ifstream in(*opts.out_dir / "average.json");
  REQUIRE(in.good());
  const json out = json::parse(in);
  CHECK(out["degrees"].size() == 4);
  CHECK(out["config_hash"] == cfg.hash);
  const Expr g2 = parse_expr(out["degrees"][1]["g"][0].get<std::string>(), 1);
  for (double y : {-0.7, 0.1, 0.9}) {
    const double pt[] = {y};
    CHECK(eval_expr(g2, pt) == doctest::Approx(-0.25 * (std::sin(y) + 0.5 * y * y)).epsilon(1e-12));
  }
  CHECK(std::filesystem::exists(*opts.out_dir / "average.txt"));
  std::filesystem::remove_all(*opts.out_dir);
}

TEST_CASE("unknown subcommand and missing scheme are configuration errors") {
  RunConfig cfg = parse_config(json::parse(R"({"scheme": {}})"));
  RunOptions opts;
  opts.out_dir = scratch("missing");
  std::ostringstream log;
  try {
    run_command("tune", cfg, opts, log);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(exit_code_for(e) == 2);
  }
  RunConfig ok = parse_config(json::parse(kBasic));
  try {
    run_command("dance", ok, opts, log);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(exit_code_for(e) == 2);
  }
  std::filesystem::remove_all(*opts.out_dir);
}

#endif
