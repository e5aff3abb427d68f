#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mfals/error.hpp"
#include "mfals/run_spec.hpp"

using namespace mfals;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  std::random_device rd;
  const fs::path p = fs::temp_directory_path() / ("mfals_test_" + name + "_" + std::to_string(rd()));
  fs::create_directories(p);
  return p;
}

std::string error_of(const json& doc) {
  try {
    parse_spec_json(doc);
  } catch (const SpecError& e) {
    return e.what();
  }
  return "";
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_four_branch(const fs::path& out) {
  return {{"problem", "four_branch"}, {"n_per_level", 1000}, {"n_levels", 3},
          {"seed", 5},                {"output_dir", out.string()}};
}

}  // namespace

TEST_CASE("built-in defaults") {
  const auto s = parse_spec_json({{"problem", "borehole"}});
  CHECK(s.failure_threshold == 270.0);
  CHECK(s.direction == FailureDirection::Above);
  CHECK(s.variables.size() == 8u);
  CHECK(s.config.method == Method::MF_AL_SS);
  CHECK(s.config.p0 == 0.1);
  CHECK(s.config.n_per_level == 20000u);
  CHECK(s.config.n_init == 20u);
  CHECK(s.low_fidelity.kind == LowFidelityKind::GP);
  CHECK(s.low_fidelity.n_train == 20u);
  const auto fb = parse_spec_json({{"problem", "four_branch"}});
  CHECK(fb.direction == FailureDirection::Below);
  CHECK(fb.failure_threshold == 0.0);
}

TEST_CASE("strict parsing names the offending key") {
  CHECK(error_of({{"problem", "four_branch"}, {"p0", 1.5}}).rfind("p0:", 0) == 0);
  CHECK(error_of({{"problem", "four_branch"}, {"bogus", 1}}) == "bogus: unknown key");
  CHECK(error_of({{"problem", "four_branch"}, {"learning", {{"typo", 1}}}}) ==
        "learning.typo: unknown key");
  CHECK(error_of({{"problem", "four_branch"}, {"seed", "x"}}).rfind("seed: expected", 0) == 0);
  CHECK(error_of({{"problem", "four_branch"}, {"n_per_level", 1005}}).rfind("p0:", 0) == 0);
  CHECK(error_of({{"problem", "nope"}}).rfind("problem:", 0) == 0);
  CHECK(error_of({{"problem", "four_branch"}, {"method", "XX"}}).rfind("method:", 0) == 0);
  CHECK(error_of({{"problem", "external"}, {"failure_threshold", 1.0}}).rfind("variables:", 0) == 0);
  CHECK(error_of(json::array()) != "");
  CHECK(error_of({{"problem", "four_branch"},
                  {"variables", {{{"name", "x1"}, {"family", "normal"}, {"mean", 0}, {"std", -1}}}}})
            .rfind("variables[0]", 0) == 0);
}

TEST_CASE("built-in variables are reordered to the canonical order") {
  json vars = json::array({
      {{"name", "x2"}, {"family", "normal"}, {"mean", 0}, {"std", 2}},
      {{"name", "x1"}, {"family", "normal"}, {"mean", 0}, {"std", 1}},
  });
  const auto s = parse_spec_json({{"problem", "four_branch"}, {"variables", vars}});
  CHECK(s.variables[0].variable.name == "x1");
  CHECK(s.variables[1].variable.rv.std() == 2.0);
}

TEST_CASE("effective spec round-trips") {
  const auto s = parse_spec_json({{"problem", "rastrigin"}, {"seed", 9}, {"n_levels", 2}});
  const json effective = spec_to_json(s);
  const auto again = parse_spec_json(effective);
  CHECK(spec_to_json(again) == effective);
  CHECK(effective["low_fidelity"]["seed"] == (9ULL ^ 0x5bd1e995ULL));
}

TEST_CASE("overrides") {
  auto s = parse_spec_json({{"problem", "four_branch"}});
  Overrides o;
  o.seed = 77;
  o.method = "SS";
  o.verbosity = "summary";
  apply_overrides(s, o);
  CHECK(s.config.rng_seed == 77u);
  CHECK(s.config.method == Method::SS);
  CHECK(s.verbosity == Verbosity::Summary);
  o.method = "bad";
  CHECK_THROWS_AS(apply_overrides(s, o), SpecError);
}

TEST_CASE("execution writes outputs and report.json is deterministic") {
  const fs::path a = scratch("a"), b = scratch("b");
  auto spec_a = parse_spec_json(small_four_branch(a));
  spec_a.verbosity = Verbosity::PerSample;
  auto spec_b = parse_spec_json(small_four_branch(b));
  spec_b.verbosity = Verbosity::PerSample;
  const auto ra = execute(spec_a);
  const auto rb = execute(spec_b);
  CHECK(ra.exit_code == 0);
  for (const char* f : {"report.json", "levels.csv", "samples.csv", "checkpoint.json"}) {
    CHECK(fs::exists(a / f));
  }
  json ja = read_json(a / "report.json"), jb = read_json(b / "report.json");
  ja.erase("timestamp");
  jb.erase("timestamp");
  CHECK(ja == jb);
  CHECK(ja["config"].contains("output_dir") == false);
  CHECK(ja["pf"].get<double>() == ra.report.pf_indicator);
  CHECK(read_text(a / "levels.csv") == read_text(b / "levels.csv"));
  CHECK(read_text(a / "samples.csv") == read_text(b / "samples.csv"));

  std::ifstream samples(a / "samples.csv");
  std::string header;
  std::getline(samples, header);
  CHECK(header == "level,chain,step,x1,x2,output,fidelity,u,prob,accepted,hf_calls_cumulative");
  std::size_t rows = 0;
  for (std::string line; std::getline(samples, line);) ++rows;
  CHECK(rows == 3000u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("resume continues from the checkpoint") {
  const fs::path full = scratch("full"), part = scratch("part");
  auto spec_full = parse_spec_json(small_four_branch(full));
  const auto rf = execute(spec_full);

  auto spec_part = parse_spec_json(small_four_branch(part));
  spec_part.config.max_levels = 1;
  spec_part.config.n_levels.reset();
  execute(spec_part);
  auto spec_rest = parse_spec_json(small_four_branch(part));
  const auto rr = execute(spec_rest, true);
  CHECK(rr.report.levels.size() == 3u);
  CHECK(rr.report.pf_indicator == doctest::Approx(rf.report.pf_indicator).epsilon(0.2));
  fs::remove_all(full);
  fs::remove_all(part);
}

TEST_CASE("borehole spec with an explicit variable table parses") {
  json doc = spec_to_json(parse_spec_json({{"problem", "borehole"}}));
  json& vars = doc["variables"];
  REQUIRE(vars.size() == 8u);
  REQUIRE(vars[0]["name"] == "rw");
  vars[0]["upper"] = 0.1;
  const auto s = parse_spec_json(doc);
  REQUIRE(s.variables.size() == 8u);
  CHECK(s.variables[0].variable.rv.lower() == 0.05);
  CHECK(s.variables[0].variable.rv.upper() == 0.1);
  CHECK(s.failure_threshold == 270.0);
}

TEST_CASE("Monte Carlo on the borehole with a small budget flags insufficient sampling") {
  const fs::path out = scratch("mc");
  auto s = parse_spec_json({{"problem", "borehole"},
                            {"method", "MC"},
                            {"n_per_level", 1000},
                            {"seed", 3},
                            {"output_dir", out.string()}});
  s.verbosity = Verbosity::Summary;
  const auto r = execute(s);
  CHECK(r.report.pf_indicator == 0.0);
  CHECK(r.report.insufficient_sampling);
  CHECK(read_json(out / "report.json")["insufficient_sampling"] == true);
  fs::remove_all(out);
}

TEST_CASE("levels.csv has one row per level and cumulative HF calls never decrease") {
  const fs::path out = scratch("rows");
  auto s = parse_spec_json({{"problem", "four_branch"},
                            {"n_per_level", 1000},
                            {"seed", 11},
                            {"output_dir", out.string()}});
  s.verbosity = Verbosity::PerSample;
  const auto r = execute(s);
  std::ifstream levels(out / "levels.csv");
  std::string line;
  std::getline(levels, line);
  std::size_t rows = 0;
  while (std::getline(levels, line)) ++rows;
  CHECK(rows == r.report.levels.size());

  std::ifstream samples(out / "samples.csv");
  std::getline(samples, line);
  long previous = -1;
  std::size_t n = 0;
  bool monotone = true;
  while (std::getline(samples, line)) {
    const long cumulative = std::stol(line.substr(line.rfind(',') + 1));
    if (cumulative < previous) monotone = false;
    previous = cumulative;
    ++n;
  }
  CHECK(monotone);
  CHECK(n == 1000u * r.report.levels.size());
  fs::remove_all(out);
}
