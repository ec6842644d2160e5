#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "lumiere/config.hpp"

using namespace lumiere;

namespace {

std::string error_of(const std::string& text) {
  try {
    scenario_from_json(parse_json_text(text, "inline"));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Scenario, MinimalFile) {
  const auto c = scenario_from_json(parse_json_text(
      R"({"n": 4, "f": 1, "delta": 40, "delta_actual": 4, "gst": 1000, "x": 2, "z": 2, "seed": 7})",
      "inline"));
  EXPECT_EQ(c.n, 4);
  EXPECT_EQ(c.delta, 40);
  EXPECT_EQ(c.gamma(), 320);
  EXPECT_EQ(c.layout().views_per_epoch, 40);
  EXPECT_EQ(c.ec_threshold(), 3);
}

TEST(Scenario, DiagnosticsNameTheField) {
  EXPECT_EQ(error_of(R"({"n": 5, "f": 1})"), "/n: n must equal 3f+1");
  EXPECT_EQ(error_of(R"({"corrupted": [0, 1]})"), "/corrupted: more than f processors");
  EXPECT_EQ(error_of(R"({"colour": 1})"), "/colour: unknown key");
  EXPECT_EQ(error_of(R"({"adversary": {"name": "none", "speed": 1}})"),
            "/adversary/speed: unknown key");
  EXPECT_EQ(error_of(R"({"delta": "forty"})"), "/delta: wrong type");
  EXPECT_EQ(error_of(R"({"corrupted": [9]})"), "/corrupted/0: out of range");
  EXPECT_EQ(error_of(R"({"adversary": {"name": "sneaky"}})"),
            "/adversary/name: unknown strategy 'sneaky'");
  EXPECT_EQ(error_of(R"({"delta": 5})"), "/delta: must be >= 10 ticks");
  EXPECT_EQ(error_of(R"({"delta_actual": 50})"), "/delta_actual: must not exceed delta");
}

TEST(Scenario, SyntaxErrorsReportLineAndColumn) {
  EXPECT_EQ(error_of("{\n  \"n\": 4,,\n}"), "inline:2:10: malformed JSON");
}

TEST(Scenario, JsonRoundTrip) {
  ScenarioConfig c;
  c.n = 7;
  c.f = 2;
  c.corrupted = {1, 5};
  c.adversary.name = "fast_colluders";
  c.adversary.params["victim"] = 3;
  c.synchronizer = SynchronizerKind::Basic;
  c.mutation = Mutation::NoEpochWait;
  randomize_desync(c, 4);
  EXPECT_EQ(scenario_from_json(to_json(c)), c);
}

TEST(Scenario, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "lumiere_config_test.json";
  {
    std::ofstream os(path);
    os << R"({"n": 7, "f": 2, "corrupted": [3]})";
  }
  const auto c = load_scenario(path.string());
  EXPECT_EQ(c.n, 7);
  EXPECT_EQ(c.corrupted, std::vector<ProcessorId>{3});
  std::filesystem::remove(path);
  EXPECT_THROW(load_scenario(path.string()), ConfigError);
}

TEST(Scenario, BaselineParameters) {
  ScenarioConfig c;
  c.n = 7;
  c.f = 2;
  c.synchronizer = SynchronizerKind::Lp22;
  EXPECT_EQ(c.gamma(), 3 * c.delta);
  EXPECT_EQ(c.layout().views_per_epoch, 3);
  c.synchronizer = SynchronizerKind::Basic;
  EXPECT_EQ(c.gamma(), 8 * c.delta);
  EXPECT_EQ(c.layout().views_per_epoch, 6);
}

TEST(Desync, OffsetsAndDriftInRange) {
  ScenarioConfig c;
  c.n = 13;
  c.f = 4;
  for (std::uint64_t s = 0; s < 20; ++s) {
    randomize_desync(c, s);
    validate(c);
    for (int i = 0; i < c.n; ++i) {
      EXPECT_GE(c.start_offsets[i], 0);
      EXPECT_LT(c.start_offsets[i], c.gst / 2);
      EXPECT_GE(c.drift_permille[i], 500);
      EXPECT_LE(c.drift_permille[i], 2000);
    }
  }
}

TEST(Mutations, ParseNames) {
  EXPECT_EQ(parse_mutation("no_qc_deadline"), Mutation::NoQcDeadline);
  EXPECT_EQ(parse_mutation("ec_threshold_f1"), Mutation::EcThresholdFPlus1);
  EXPECT_EQ(parse_mutation("no_epoch_wait"), Mutation::NoEpochWait);
  EXPECT_FALSE(parse_mutation("other"));
  ScenarioConfig c;
  c.mutation = Mutation::EcThresholdFPlus1;
  EXPECT_EQ(c.ec_threshold(), 2);
}
