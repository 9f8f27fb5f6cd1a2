#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>

#include "didactic/config.hpp"

using namespace didactic;

namespace {

const char* kMinimalLessons = R"({
  "scenario": "lessons",
  "model": "four",
  "params": {"alphas": [1.0, 0.6, 0.3, 0.15], "gammas": [0.8, 0.3, 0.1, 0.02]},
  "schedule": {"lessons": [{"length": 1, "u_base": 4}], "break_len": 0.5}
})";

bool has_issue(const ConfigError& e, const std::string& path, const std::string& fragment) {
  for (const auto& i : e.issues())
    if (i.path == path && i.message.find(fragment) != std::string::npos) return true;
  return false;
}

ConfigError expect_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("config was accepted: " << text);
  throw std::logic_error("unreachable");
}

json minimal() { return json::parse(kMinimalLessons); }

}  // namespace

TEST_CASE("minimal config gets defaults", "[config]") {
  const RunConfig c = parse_config(std::string(kMinimalLessons));
  CHECK(c.scenario == Scenario::lessons);
  CHECK(c.model.kind == ModelKind::four);
  CHECK(c.integrator.dt == 0.01);
  CHECK(c.integrator.record_every == 10);
  CHECK(c.integrator.method == Method::rk4);
  CHECK(c.initial_state == std::vector<double>(4, 0.0));
  CHECK(c.seed == 0);
  CHECK(c.output.format == OutputFormat::csv);
  REQUIRE(c.schedule);
  CHECK(c.schedule->segments().size() == 1);
  CHECK(c.model.params.lambda() == 1.0);
}

TEST_CASE("validation errors carry field paths", "[config]") {
  SECTION("gamma ordering") {
    json j = json::parse(R"({"scenario": "lessons", "model": "two",
      "params": {"alphas": [0.4, 0.1], "gammas": [0.1, 0.2]},
      "schedule": {"lessons": [{"length": 1, "u_base": 4}], "break_len": 0.5}})");
    const auto e = expect_error(j.dump());
    CHECK(has_issue(e, "params.gammas", "strictly decreasing"));
  }
  SECTION("unknown keys are rejected at every level") {
    json j = minimal();
    j["gamma3"] = 0.1;
    j["params"]["gama"] = 1;
    j["schedule"]["lessons"][0]["lenght"] = 2;
    const auto e = expect_error(j.dump());
    CHECK(has_issue(e, "gamma3", "unknown key"));
    CHECK(has_issue(e, "params.gama", "unknown key"));
    CHECK(has_issue(e, "schedule.lessons[0].lenght", "unknown key"));
  }
  SECTION("dimension mismatches name both lengths") {
    json j = minimal();
    j["params"]["alphas"] = {1.0, 0.5};
    auto e = expect_error(j.dump());
    CHECK(has_issue(e, "params.alphas", "length 2"));
    CHECK(has_issue(e, "params.alphas", "length 4"));

    j = minimal();
    j["initial_state"] = {0, 0, 0};
    e = expect_error(j.dump());
    CHECK(has_issue(e, "initial_state", "length 3"));
    CHECK(has_issue(e, "initial_state", "length 4"));

    j = minimal();
    j["model"] = "two";
    e = expect_error(j.dump());
    CHECK(has_issue(e, "params", "needs 2 components"));
  }
  SECTION("scenario payloads") {
    json j = minimal();
    j.erase("schedule");
    CHECK(has_issue(expect_error(j.dump()), "schedule", "requires"));
    j = minimal();
    j["tasks"] = json::object();
    CHECK(has_issue(expect_error(j.dump()), "tasks", "not used"));
    j = minimal();
    j["scenario"] = "school_career";
    j.erase("schedule");
    j["career"] = {{"grade_requirements", {1, 2}}};
    const auto e = expect_error(j.dump());
    CHECK(has_issue(e, "model", "three-component"));
    CHECK(has_issue(e, "career.grade_requirements", "n_grades"));
  }
  SECTION("malformed documents") {
    CHECK(has_issue(expect_error("{not json"), "", "malformed JSON"));
    CHECK(has_issue(expect_error("[1, 2]"), "", "expected an object"));
    json j = minimal();
    j["integrator"] = {{"dt", -1}, {"method", "rk45"}};
    const auto e = expect_error(j.dump());
    CHECK(has_issue(e, "integrator.dt", "> 0"));
    CHECK(has_issue(e, "integrator.method", "rk4"));
  }
  SECTION("taus convert to gammas") {
    json j = minimal();
    j["params"].erase("gammas");
    j["params"]["taus"] = {1.25, 2.5, 10.0, 50.0};
    const RunConfig c = parse_config(j);
    CHECK(c.model.params.gammas() == std::vector<double>{0.8, 0.4, 0.1, 0.02});
  }
}

TEST_CASE("serialize then parse is the identity", "[config][property]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    json j;
    const int n = 2 + static_cast<int>(u(rng) * 4);
    std::vector<double> alphas, gammas(n), z0;
    double g = 0.01 + u(rng);
    for (int i = n - 1; i >= 0; --i) {
      gammas[i] = g;
      g += 0.01 + u(rng);
    }
    for (int i = 0; i < n; ++i) {
      alphas.push_back(u(rng));
      z0.push_back(u(rng) * 3);
    }
    const int which = k % 3;
    const char* models[] = {"two", "three", "four"};
    std::string model = n <= 4 && u(rng) < 0.5 ? models[n - 2] : "general";
    j["params"] = {{"alphas", alphas}, {"gammas", gammas}, {"b", u(rng)}, {"lambda", 0.1 + u(rng)}, {"s", u(rng)}};
    j["initial_state"] = z0;
    j["seed"] = static_cast<std::uint64_t>(rng());
    j["integrator"] = {{"dt", 0.001 + u(rng) / 10}, {"method", u(rng) < 0.5 ? "rk4" : "euler"},
                       {"record_every", 1 + static_cast<int>(u(rng) * 20)}};
    j["output"] = {{"name", "run" + std::to_string(k)}, {"format", u(rng) < 0.5 ? "csv" : "json"}};
    if (which == 0) {
      j["scenario"] = "lessons";
      json lessons = json::array();
      for (int l = 0; l < 3; ++l) lessons.push_back({{"length", 0.5 + u(rng)}, {"u_base", 10 * u(rng)}, {"u_slope", u(rng)}});
      j["schedule"] = {{"lessons", lessons}, {"break_len", 0.1 + u(rng)}, {"final_break", u(rng)}};
    } else if (which == 1) {
      j["scenario"] = "task_sequence";
      j["tasks"] = {{"n_tasks", 1 + static_cast<int>(u(rng) * 30)}, {"d_theta", 0.1 + u(rng)}, {"attempt_dt", 0.05},
                    {"lesson_len", 1.0}, {"break_len", 0.5}, {"n_lessons", 3}};
    } else {
      j["scenario"] = "school_career";
      model = "three";
      j["params"]["alphas"] = {u(rng), u(rng), u(rng)};
      j["params"]["gammas"] = {0.3, 0.2, 0.1};
      j["initial_state"] = {u(rng), u(rng), u(rng)};
      std::vector<double> req;
      for (int g2 = 0; g2 < 5; ++g2) req.push_back(10 * u(rng));
      j["career"] = {{"n_grades", 5}, {"grade_requirements", req}, {"post_school_horizon", 12 * u(rng)}};
    }
    j["model"] = model;
    const RunConfig first = parse_config(j);
    const RunConfig second = parse_config(to_json(first).dump());
    REQUIRE(first == second);
  }
}

TEST_CASE("validation is total: mutated documents never crash", "[config][property]") {
  const json base = minimal();
  const std::vector<json> junk{nullptr, -1, 0, 1e308, "x", json::array(), json::object(), true, json::array({1, "a"})};
  std::mt19937_64 rng(5);
  std::vector<std::vector<std::string>> paths{{"scenario"},          {"model"},
                                              {"params"},            {"params", "alphas"},
                                              {"params", "gammas"},  {"params", "b"},
                                              {"params", "lambda"},  {"params", "s"},
                                              {"schedule"},          {"schedule", "lessons"},
                                              {"schedule", "break_len"}, {"integrator"},
                                              {"seed"},              {"output"},
                                              {"initial_state"},     {"unit"}};
  for (int k = 0; k < 2000; ++k) {
    json j = base;
    const auto& p = paths[rng() % paths.size()];
    json* node = &j;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) node = &(*node)[p[i]];
    (*node)[p.back()] = junk[rng() % junk.size()];
    try {
      (void)parse_config(j);
    } catch (const ConfigError& e) {
      REQUIRE_FALSE(e.issues().empty());
    }
  }
}
