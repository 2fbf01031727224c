#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "actorsets/clip_io.hpp"
#include "actorsets/commands.hpp"
#include "json.hpp"

namespace actorsets {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "actorsets");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  CliResult r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string fixture(const std::string& name) { return std::string(ACTORSETS_FIXTURE_DIR) + "/" + name; }

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("actorsets_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(CliTest, AssignCoversAllSceneLabels) {
  const auto r = cli({"assign", "--input", fixture("two_actor_scene.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["method"], "lp");
  ASSERT_EQ(doc["frames"].size(), 1U);
  const auto& frame = doc["frames"][0];
  EXPECT_TRUE(frame["feasible"].get<bool>());
  EXPECT_GT(frame["objective"].get<double>(), 0.0);
  std::set<int> covered;
  for (const auto& a : frame["assignments"]) {
    EXPECT_FALSE(a["classes"].empty());
    for (int c : a["classes"]) covered.insert(c);
  }
  EXPECT_EQ(covered, (std::set<int>{0, 1, 2, 3}));
  EXPECT_EQ(frame["assignments"][0]["names"][0], "stand");
}

TEST_F(CliTest, AssignWithoutLpMayMissLabels) {
  const auto r = cli({"assign", "--input", fixture("two_actor_scene.json"), "--no-lp"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = json::parse(r.out);
  EXPECT_EQ(doc["method"], "no-lp");
  const auto& frame = doc["frames"][0];
  EXPECT_TRUE(frame["objective"].is_null());
  EXPECT_EQ(frame["assignments"][0]["classes"], json({0, 2}));
  EXPECT_EQ(frame["assignments"][1]["classes"], json({0, 1}));
}

TEST_F(CliTest, AssignCsvReport) {
  const auto out = path("assign.csv");
  const auto r = cli({"assign", "-i", fixture("two_actor_scene.json"), "--report", "csv", "-o", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const auto text = read_text_file(out);
  EXPECT_EQ(text.rfind("clip_id,frame_id,actor_id,classes,objective\n", 0), 0U);
  EXPECT_NE(text.find("conversation,0,0,"), std::string::npos);
  EXPECT_NE(text.find("conversation,0,1,"), std::string::npos);
}

TEST_F(CliTest, InfeasibleFrames) {
  const auto fail = cli({"assign", "--input", fixture("empty_frame.json")});
  EXPECT_EQ(fail.code, kExitInfeasible);
  EXPECT_EQ(fail.err.rfind("error[infeasible]: ", 0), 0U) << fail.err;
  EXPECT_EQ(std::count(fail.err.begin(), fail.err.end(), '\n'), 1);

  const auto skip = cli({"assign", "--input", fixture("empty_frame.json"), "--skip-infeasible"});
  ASSERT_EQ(skip.code, 0) << skip.err;
  EXPECT_NE(skip.err.find("warning: skipping clip 'library' frame 10"), std::string::npos);
  const auto doc = json::parse(skip.out);
  ASSERT_EQ(doc["frames"].size(), 1U);
  EXPECT_EQ(doc["frames"][0]["frame_id"], 11);
}

TEST_F(CliTest, WorkerPoolKeepsInputOrder) {
  ClipFile file;
  file.class_names = {"a", "b", "c", "d", "e"};
  for (int k = 0; k < 40; ++k) {
    Clip clip;
    clip.annotation = {"clip" + std::to_string(k), LabelSet{k % 5, (k + 2) % 5}, 5};
    Frame frame;
    frame.frame_id = k;
    for (int i = 0; i < 3; ++i) {
      ActorDetection a;
      a.actor_id = i;
      a.frame_id = k;
      a.confidence = 0.5 + 0.1 * i;
      a.logits = Eigen::VectorXd::LinSpaced(5, -1.0 + 0.03 * k, 1.0 - 0.2 * i);
      frame.actors.push_back(a);
    }
    clip.frames.push_back(frame);
    file.clips.push_back(clip);
  }
  write_text_file(path("many.json"), serialize_clip_file(file));
  const auto serial = cli({"assign", "-i", path("many.json")});
  const auto parallel = cli({"assign", "-i", path("many.json"), "--jobs", "4"});
  ASSERT_EQ(serial.code, 0);
  EXPECT_EQ(serial.out, parallel.out);
}

TEST_F(CliTest, ParseErrorsAreDataErrors) {
  write_text_file(path("bad.json"), "{\"format\": \"actorsets-clips\",");
  const auto r = cli({"assign", "-i", path("bad.json")});
  EXPECT_EQ(r.code, kExitDataError);
  EXPECT_EQ(r.err.rfind("error[parse_error]: ", 0), 0U) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

  const auto missing = cli({"assign", "-i", path("absent.json")});
  EXPECT_EQ(missing.code, kExitDataError);
}

TEST_F(CliTest, UsageErrors) {
  const auto none = cli({});
  EXPECT_EQ(none.code, kExitUsage);
  EXPECT_EQ(none.err.rfind("error[usage]: ", 0), 0U) << none.err;
  EXPECT_EQ(cli({"assign"}).code, kExitUsage);
  EXPECT_EQ(cli({"assign", "-i", "x", "--report", "xml"}).code, kExitUsage);
  EXPECT_EQ(cli({"train", "--method", "lp"}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  const auto help = cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("assign"), std::string::npos);
}

TEST_F(CliTest, SolverCapFlag) {
  const auto r = cli({"assign", "-i", fixture("two_actor_scene.json"), "--solver-cap", "3"});
  EXPECT_EQ(r.code, kExitDataError);
  EXPECT_EQ(r.err.rfind("error[solver_cap_exceeded]: ", 0), 0U) << r.err;
  const auto p = cli({"score", "-i", fixture("two_actor_scene.json"), "--powerset-cap", "3"});
  EXPECT_EQ(p.err.rfind("error[powerset_too_large]: ", 0), 0U) << p.err;
}

TEST_F(CliTest, ScoreDumpsNormalizedTables) {
  const auto r = cli({"score", "-i", fixture("two_actor_scene.json"), "--clip", "conversation"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = json::parse(r.out);
  ASSERT_EQ(doc["actors"].size(), 2U);
  for (const auto& actor : doc["actors"]) {
    ASSERT_EQ(actor["subsets"].size(), 15U);
    double total = 0.0;
    for (const auto& s : actor["subsets"]) total += s["score"].get<double>();
    EXPECT_NEAR(total, actor["confidence"].get<double>(), 1e-12);
  }
  EXPECT_EQ(cli({"score", "-i", fixture("two_actor_scene.json"), "--clip", "nope"}).code, kExitDataError);
}

TEST_F(CliTest, EvalReportsHalfAp) {
  const auto r = cli({"eval", "--pred", fixture("ap_half_pred.csv"), "--gt", fixture("ap_half_gt.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("0\t0\t1\t2\t0.500000"), std::string::npos) << r.out;
  const auto j = cli({"eval", "--pred", fixture("ap_half_pred.csv"), "--gt", fixture("ap_half_gt.csv"),
                      "--json", "--classes", fixture("ap_half_classes.txt")});
  ASSERT_EQ(j.code, 0) << j.err;
  const auto doc = json::parse(j.out);
  EXPECT_EQ(doc["mAP"].get<double>(), 0.5);
  EXPECT_EQ(doc["classes"][0]["name"], "stand");
  EXPECT_EQ(doc["classes"][0]["ap"].get<double>(), 0.5);
}

TEST_F(CliTest, EvalGroundTruthAsPredictionsIsPerfect) {
  write_text_file(path("gt.csv"), "a,1,0.1,0.1,0.4,0.4,0\na,1,0.5,0.5,0.9,0.9,1\nb,2,0.2,0.2,0.6,0.7,1\n");
  write_text_file(path("pred.csv"), "a,1,0.1,0.1,0.4,0.4,0,1.0\na,1,0.5,0.5,0.9,0.9,1,1.0\nb,2,0.2,0.2,0.6,0.7,1,1.0\n");
  const auto r = cli({"eval", "--pred", path("pred.csv"), "--gt", path("gt.csv"), "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["mAP"].get<double>(), 1.0);
}

TEST_F(CliTest, EvalErrors) {
  const auto mismatch = cli({"eval", "--pred", fixture("ap_half_pred.csv"), "--gt", fixture("ap_half_gt.csv"),
                             "--classes", fixture("ap_half_classes.txt"), "--pred-classes",
                             fixture("other_classes.txt")});
  EXPECT_EQ(mismatch.code, kExitDataError);
  EXPECT_NE(mismatch.err.find("class table mismatch"), std::string::npos);

  write_text_file(path("empty.csv"), "# nothing\n");
  const auto empty = cli({"eval", "--pred", fixture("ap_half_pred.csv"), "--gt", path("empty.csv")});
  EXPECT_EQ(empty.code, kExitDataError);
  EXPECT_EQ(empty.err.rfind("error[empty_ground_truth]: ", 0), 0U) << empty.err;

  write_text_file(path("bad.csv"), "a,1,0.1,0.1,0.4,0.4,0\na,1,0.1,0.1,1.4,0.4,0\n");
  const auto bad = cli({"eval", "--pred", fixture("ap_half_pred.csv"), "--gt", path("bad.csv")});
  EXPECT_EQ(bad.code, kExitDataError);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;

  const auto count = cli({"eval", "--pred", fixture("ap_half_pred.csv"), "--gt", fixture("ap_half_gt.csv"),
                          "--num-classes", "3", "--classes", fixture("ap_half_classes.txt")});
  EXPECT_EQ(count.code, kExitDataError);
}

TEST_F(CliTest, SynthAndTrainAreDeterministic) {
  write_text_file(path("config.json"),
                  R"({"data": {"train_clips": 40, "val_clips": 20}, "schedule": {"epochs": 4, "warmup_epochs": 2}})");
  const auto synth_a = cli({"synth", "--config", path("config.json"), "--seed", "42", "-o", path("a.json")});
  const auto synth_b = cli({"synth", "--config", path("config.json"), "--seed", "42", "-o", path("b.json")});
  ASSERT_EQ(synth_a.code, 0) << synth_a.err;
  ASSERT_EQ(synth_b.code, 0) << synth_b.err;
  EXPECT_EQ(read_text_file(path("a.json")), read_text_file(path("b.json")));

  const auto t1 = cli({"train", "--config", path("config.json"), "--seed", "42"});
  const auto t2 = cli({"train", "--config", path("config.json"), "--seed", "42"});
  const auto from_file = cli({"train", "--config", path("config.json"), "--seed", "42", "--dataset", path("a.json")});
  ASSERT_EQ(t1.code, 0) << t1.err;
  EXPECT_EQ(t1.out, t2.out);
  EXPECT_EQ(t1.out, from_file.out);
  const auto trace = json::parse(t1.out);
  EXPECT_EQ(trace["schedule"]["method"], "proposed");
  EXPECT_EQ(trace["schedule"]["seed"], 42);
  EXPECT_EQ(trace["epochs"].size(), 4U);

  const auto miml = cli({"train", "--config", path("config.json"), "--seed", "42", "--method", "miml",
                         "-o", path("miml.json")});
  ASSERT_EQ(miml.code, 0) << miml.err;
  EXPECT_EQ(miml.out.rfind("miml final val mAP ", 0), 0U) << miml.out;
  EXPECT_EQ(json::parse(read_text_file(path("miml.json")))["schedule"]["method"], "miml");
}

TEST_F(CliTest, InvalidConfig) {
  write_text_file(path("config.json"), R"({"data": {"train_clips": 0}})");
  const auto r = cli({"synth", "--config", path("config.json")});
  EXPECT_EQ(r.code, kExitDataError);
  EXPECT_EQ(r.err.rfind("error[invalid_input]: ", 0), 0U) << r.err;
}

}  // namespace
}  // namespace actorsets
