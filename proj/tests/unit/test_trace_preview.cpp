#include <filesystem>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "builders.h"

#include "sib/error.h"
#include "sib/preview.h"
#include "sib/station.h"

namespace {

using namespace sib;
using namespace sib::sim;
using nlohmann::json;
using build::blk;
using build::doc;
using build::program;

json show() {
  return json::array({blk("up", "TakeoffAll", {{"z", 1.0}}),
                      blk("led", "LedEffect", {{"effect", "blink"}, {"group", "random"}, {"r", 0}, {"g", 200},
                                               {"b", 40}, {"rate", 2.0}}),
                      blk("f", "ApplyFormation", {{"kind", "circle"}, {"n", 3}, {"size", 1.5}, {"altitude", 1.5}}),
                      blk("rot", "Rotate", {{"angle", 1.0}}),
                      blk("w", "Wait", {{"seconds", 0.5}}),
                      blk("go", "Navigate", {{"drone", 0}, {"x", 2.0}, {"y", 1.0}, {"z", 2.0}, {"speed", 0.8}}),
                      blk("down", "LandAll")});
}

TEST(Preview, EmptyProgramHasOnlyInitialEntry) {
  const auto t = preview_run(program(json::array()), {}, 2);
  ASSERT_EQ(t.entries.size(), 1u);
  EXPECT_FALSE(t.entries[0].block_id);
  EXPECT_EQ(t.entries[0].sim_time, 0.0);
  EXPECT_EQ(t.entries[0].drones.size(), 2u);
  EXPECT_EQ(t.status, blocks::ExecStatus::Done);
}

TEST(Preview, TakeoffAltitudeMonotone) {
  const auto t = preview_run(program({blk("up", "TakeoffAll", {{"z", 1.0}})}), {}, 1);
  ASSERT_GE(t.entries.size(), 2u);
  for (std::size_t i = 1; i < t.entries.size(); ++i) {
    EXPECT_GE(t.entries[i].drones[0].pose.position.z, t.entries[i - 1].drones[0].pose.position.z);
    EXPECT_EQ(t.entries[i].block_id, "up");
    EXPECT_NEAR(t.entries[i].sim_time, 0.05 * i, 1e-12);
  }
  EXPECT_LE(t.entries.size(), 21u);
  EXPECT_NEAR(t.entries.back().drones[0].pose.position.z, 1.0, 0.2);
}

TEST(Preview, BytewiseDeterministic) {
  PreviewOptions opt;
  opt.sim.seed = 7;
  const auto p = program(show());
  const auto a = to_jsonl(preview_run(p, {}, 3, opt));
  const auto b = to_jsonl(preview_run(p, {}, 3, opt));
  EXPECT_EQ(a, b);
  opt.sim.seed = 8;
  EXPECT_NE(a, to_jsonl(preview_run(p, {}, 3, opt)));
}

TEST(Preview, MatchesStationLiveRun) {
  const auto dir = std::filesystem::temp_directory_path() / ("sib_prev_" + std::to_string(::getpid()));
  station::StationConfig cfg;
  cfg.drones = 3;
  cfg.program_dir = dir;
  cfg.sim.seed = 11;
  station::Station st(cfg);
  const auto res = st.call("run", {{"program", json{{"version", 1}, {"name", "t"}, {"blocks", show()}}}}).get();
  ASSERT_TRUE(res.ok) << res.payload.dump();
  const std::string run_id = res.payload.at("run_id");
  for (int i = 0; i < 5000 && st.execution_state().status == blocks::ExecStatus::Running; ++i) st.step();
  st.step();
  const auto live_text = st.trace_jsonl(run_id);
  ASSERT_TRUE(live_text);
  std::istringstream in(*live_text);
  const auto live = read_jsonl(in);

  PreviewOptions opt;
  opt.sim.seed = 11;
  const auto pre = preview_run(program(show()), {}, 3, opt);
  ASSERT_EQ(live.entries.size(), pre.entries.size());
  for (std::size_t i = 0; i < pre.entries.size(); ++i) {
    const auto& a = live.entries[i];
    const auto& b = pre.entries[i];
    EXPECT_NEAR(a.sim_time, b.sim_time, 1e-12);
    EXPECT_EQ(a.block_id, b.block_id);
    for (std::size_t k = 0; k < b.drones.size(); ++k) {
      EXPECT_NEAR(a.drones[k].pose.position.x, b.drones[k].pose.position.x, 1e-12);
      EXPECT_NEAR(a.drones[k].pose.position.y, b.drones[k].pose.position.y, 1e-12);
      EXPECT_NEAR(a.drones[k].pose.position.z, b.drones[k].pose.position.z, 1e-12);
      EXPECT_NEAR(a.drones[k].pose.yaw, b.drones[k].pose.yaw, 1e-12);
      EXPECT_EQ(a.drones[k].mode, b.drones[k].mode);
      EXPECT_EQ(a.drones[k].led, b.drones[k].led);
    }
  }
  EXPECT_EQ(live.status, pre.status);
  std::filesystem::remove_all(dir);
}

TEST(Trace, JsonlRoundTrip) {
  const auto t = preview_run(program(show()), {}, 3);
  const auto text = to_jsonl(t);
  std::istringstream in(text);
  const auto back = read_jsonl(in);
  ASSERT_EQ(back.entries.size(), t.entries.size());
  EXPECT_EQ(back.status, t.status);
  EXPECT_EQ(to_jsonl(back), text);
  std::ostringstream out;
  write_jsonl(t, out);
  EXPECT_EQ(out.str(), text);
}

TEST(Trace, MalformedInputIsSyntaxError) {
  for (const char* bad : {"{\"t\":0,\n", "not json\n", "[1,2]\n"}) {
    std::istringstream in(bad);
    try {
      read_jsonl(in);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == Errc::SyntaxError || e.code() == Errc::SchemaError) << bad;
    }
  }
}

TEST(Trace, CursorClamps) {
  Trace t;
  for (int i = 0; i < 3; ++i) t.entries.push_back({0.05 * i, std::nullopt, {}});
  TraceCursor c(t);
  EXPECT_EQ(c.index(), 0u);
  c.previous();
  EXPECT_EQ(c.index(), 0u);
  c.next();
  c.next();
  c.next();
  EXPECT_EQ(c.index(), 2u);
  EXPECT_TRUE(c.at_end());
  c.seek(100);
  EXPECT_EQ(c.index(), 2u);
  c.seek(1);
  EXPECT_NEAR(c.current().sim_time, 0.05, 1e-12);
}

TEST(Preview, UnansweredPromptErrors) {
  const auto p = program({blk("q", "Prompt", {{"var", "h"}, {"message", "height?"}})});
  const auto t = preview_run(p, {}, 1);
  EXPECT_EQ(t.status, blocks::ExecStatus::Errored);
  ASSERT_TRUE(t.error);
  PreviewOptions opt;
  opt.answers = {2.0};
  EXPECT_EQ(preview_run(p, {}, 1, opt).status, blocks::ExecStatus::Done);
}

TEST(Preview, TimeBudget) {
  PreviewOptions opt;
  opt.max_sim_time = 1.0;
  const auto t = preview_run(program({blk("w", "Wait", {{"seconds", 10.0}})}), {}, 1, opt);
  EXPECT_EQ(t.status, blocks::ExecStatus::Errored);
  EXPECT_LE(t.entries.back().sim_time, 1.2);
}

}  // namespace
