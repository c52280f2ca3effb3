#include <filesystem>
#include <random>

#include <unistd.h>

#include <gtest/gtest.h>

#include "builders.h"

#include "sib/error.h"
#include "sib/station.h"

namespace {

using namespace sib;
using namespace sib::station;
using nlohmann::json;
using build::blk;
using build::doc;
using build::program;
using sim::FlightMode;

class StationTest : public ::testing::Test {
 protected:
  void SetUp() override {
    static int counter = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("sib_station_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    make(4);
  }
  void TearDown() override {
    if (bus_token_) station_->bus().unsubscribe(bus_token_);
    station_.reset();
    std::filesystem::remove_all(dir_);
  }

  void make(int drones, int telemetry_every = 2) {
    if (station_ && bus_token_) station_->bus().unsubscribe(bus_token_);
    StationConfig cfg;
    cfg.drones = drones;
    cfg.program_dir = dir_;
    cfg.telemetry_every_ticks = telemetry_every;
    station_ = std::make_unique<Station>(cfg);
    events_.clear();
    bus_token_ = station_->bus().subscribe([this](const TopicEvent& e) { events_.push_back(e); });
  }

  ServiceResult call(const std::string& name, json payload = json::object()) {
    return station_->call(name, std::move(payload)).get();
  }

  std::vector<json> on(std::string_view topic) const {
    std::vector<json> out;
    for (const auto& e : events_) {
      if (e.topic == topic) out.push_back(e.payload);
    }
    return out;
  }

  void steps(int n) {
    for (int i = 0; i < n; ++i) station_->step();
  }

  void takeoff() {
    ASSERT_TRUE(call("run", {{"program", doc({blk("up", "TakeoffAll", {{"z", 1.0}})})}}).ok);
    for (int i = 0; i < 200 && station_->execution_state().status == blocks::ExecStatus::Running; ++i) steps(1);
  }

  std::filesystem::path dir_;
  std::unique_ptr<Station> station_;
  std::vector<TopicEvent> events_;
  TopicBus::Token bus_token_ = 0;
};

TEST_F(StationTest, RunStoredProgramRespondsThenEmitsRunning) {
  ASSERT_TRUE(call("store", {{"name", "hop"}, {"program", doc({blk("w", "Wait", {{"seconds", 0.1}})})}}).ok);
  std::vector<std::string> order;
  auto token = station_->bus().subscribe([&](const TopicEvent& e) {
    if (e.topic == topic::kRunning) order.push_back("running");
  });
  station_->call_async("run", {{"name", "hop"}}, [&](ServiceResult r) {
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.payload.at("run_id"), "run-1");
    order.push_back("response");
  });
  station_->bus().unsubscribe(token);
  EXPECT_EQ(order, (std::vector<std::string>{"response", "running"}));
  EXPECT_EQ(on(topic::kRunning), (std::vector<json>{true}));
  steps(10);
  EXPECT_EQ(on(topic::kRunning), (std::vector<json>{true, false}));
}

TEST_F(StationTest, UnknownServiceAndFields) {
  auto r = call("reboot");
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.payload.at("code"), "UnknownService");
  r = call("list_programs", {{"verbose", true}});
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.payload.at("code"), "InvalidArgument");
  r = call("run", json::object());
  EXPECT_FALSE(r.ok);
  r = call("run", {{"name", "missing"}});
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.payload.at("code"), "NotFound");
  r = call("stop");
  EXPECT_EQ(r.payload.at("code"), "NotRunning");
  EXPECT_EQ(service_names().size(), 12u);
}

TEST_F(StationTest, StoreLoadList) {
  const json d = doc({blk("a", "TakeoffAll", {{"z", 1.5}})});
  ASSERT_TRUE(call("store", {{"name", "b"}, {"program", d}}).ok);
  ASSERT_TRUE(call("store", {{"name", "a"}, {"program", d.dump()}}).ok);
  EXPECT_EQ(call("list_programs").payload.at("programs"), (json{"a", "b"}));
  const auto r = call("load", {{"name", "a"}});
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(r.payload.at("program").dump(), json::parse(station_->program_bytes("a")).dump());
  EXPECT_FALSE(call("store", {{"name", "../x"}, {"program", d}}).ok);
  auto bad = call("store", {{"name", "c"}, {"program", "{"}});
  EXPECT_EQ(bad.payload.at("code"), "SyntaxError");
}

TEST_F(StationTest, LandAllMidProgram) {
  takeoff();
  ASSERT_TRUE(call("run", {{"program", doc({blk("w", "Wait", {{"seconds", 30.0}})})}}).ok);
  steps(3);
  const auto r = call("land_all");
  ASSERT_TRUE(r.ok);
  EXPECT_EQ(r.payload.at("stopped"), true);
  steps(2);
  EXPECT_EQ(station_->execution_state().status, blocks::ExecStatus::Done);
  for (const auto& d : station_->snapshot().drones) EXPECT_EQ(d.mode, FlightMode::Landing);
  EXPECT_EQ(on(topic::kRunning).back(), false);
  EXPECT_EQ(call("land_all").payload.at("stopped"), false);
  steps(100);
  for (const auto& d : station_->snapshot().drones) EXPECT_EQ(d.mode, FlightMode::Landed);
}

TEST_F(StationTest, RepeatedLandAllGivesOneRunningFalse) {
  takeoff();
  const auto before = on(topic::kRunning).size();
  ASSERT_TRUE(call("run", {{"program", doc({blk("w", "Wait", {{"seconds", 30.0}})})}}).ok);
  steps(2);
  for (int i = 0; i < 20; ++i) {
    EXPECT_TRUE(call("land_all").ok);
    if (i % 3 == 0) steps(1);
  }
  steps(5);
  const auto running = on(topic::kRunning);
  ASSERT_EQ(running.size(), before + 2);
  EXPECT_EQ(running[before], true);
  EXPECT_EQ(running[before + 1], false);
}

TEST_F(StationTest, LandAllWhileRealtime) {
  station_->start_realtime();
  ASSERT_TRUE(call("run", {{"program", doc({blk("up", "TakeoffAll", {{"z", 2.0}})})}}).ok);
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  ASSERT_TRUE(call("land_all").ok);
  EXPECT_TRUE(station_->land_and_settle(60));
  EXPECT_FALSE(station_->realtime());
  for (const auto& d : station_->snapshot().drones) EXPECT_EQ(d.mode, FlightMode::Landed);
}

TEST_F(StationTest, ListTopics) {
  auto topics = call("list_topics").payload.at("topics");
  ASSERT_EQ(topics.size(), 8u);
  for (const auto& t : topics) {
    EXPECT_TRUE(t.at("last_publish_sim_time").is_null()) << t.dump();
    EXPECT_EQ(t.at("publish_count"), 0);
  }
  ASSERT_TRUE(call("run", {{"program", doc({blk("w", "Wait", {{"seconds", 0.2}})})}}).ok);
  steps(10);
  topics = call("list_topics").payload.at("topics");
  std::map<std::string, std::uint64_t> tally;
  for (const auto& e : events_) ++tally[e.topic];
  for (const auto& t : topics) {
    const std::string name = t.at("name");
    EXPECT_EQ(t.at("publish_count").get<std::uint64_t>(), tally[name]) << name;
    if (name == "block") {
      ASSERT_TRUE(t.at("last_publish_sim_time").is_number());
      EXPECT_EQ(t.at("last_publish_sim_time"), 0.0);
    }
    if (name == "error") EXPECT_EQ(t.at("publisher_count"), 2);
    if (name == "manual_cmd") EXPECT_EQ(t.at("publisher_count"), 0);
  }
}

TEST_F(StationTest, SafeAreaLandsOutsideDrone) {
  make(1);
  takeoff();
  ASSERT_TRUE(call("set_safe_area", {{"min", {{"x", -1}, {"y", -1}, {"z", 0}}},
                                     {"max", {{"x", 0.5}, {"y", 1}, {"z", 3}}}})
                  .ok);
  // Drone sits at the origin, inside. Push it across x = 0.5.
  ASSERT_TRUE(station_->publish_manual({{"drone", 0}, {"vx", 1.0}, {"vy", 0.0}, {"vz", 0.0}}).get().ok);
  int violation_tick = -1;
  for (int k = 0; k < 40 && violation_tick < 0; ++k) {
    steps(1);
    if (!on(topic::kSafeAreaViolation).empty()) violation_tick = k;
    else EXPECT_LE(station_->snapshot().drones[0].pose.position.x, 0.5 + 1e-9);
  }
  ASSERT_GE(violation_tick, 0);
  EXPECT_GT(station_->snapshot().drones[0].pose.position.x, 0.5);
  steps(1);
  EXPECT_EQ(station_->snapshot().drones[0].mode, FlightMode::Landing);
  steps(60);
  EXPECT_EQ(on(topic::kSafeAreaViolation).size(), 1u);
  const auto v = on(topic::kSafeAreaViolation)[0];
  EXPECT_EQ(v.at("drone"), 0);
  EXPECT_GT(v.at("position").at("x").get<double>(), 0.5);
  EXPECT_EQ(station_->snapshot().drones[0].mode, FlightMode::Landed);
}

TEST(SafeAreaGuardTest, Examples) {
  SafeArea area{{-4, -4, 0}, {4, 4, 3}, true};
  auto drones = sim::spawn_swarm(2, 1.0);
  drones[0].pose.position = {5, 0, 1};
  drones[0].mode = FlightMode::Hovering;
  drones[1].pose.position = {4, 4, 3};  // boundary counts as inside
  drones[1].mode = FlightMode::Hovering;
  SafeAreaGuard g;
  auto out = g.enforce(drones, area);
  ASSERT_EQ(out.commands.size(), 1u);
  EXPECT_EQ(std::get<sim::cmd::Land>(out.commands[0]).drone, 0);
  EXPECT_EQ(out.new_violations, (std::vector<int>{0}));
  drones[0].mode = FlightMode::Landing;
  out = g.enforce(drones, area);
  EXPECT_TRUE(out.commands.empty());
  EXPECT_TRUE(out.new_violations.empty());
  // Landed ends the episode; a later excursion is a new one.
  drones[0].mode = FlightMode::Landed;
  g.enforce(drones, area);
  drones[0].mode = FlightMode::Hovering;
  EXPECT_EQ(g.enforce(drones, area).new_violations, (std::vector<int>{0}));
  area.enabled = false;
  EXPECT_TRUE(g.enforce(drones, area).commands.empty());
  EXPECT_TRUE(area.contains({4, 4, 3}));
  EXPECT_FALSE(area.contains({4.0001, 0, 1}));
  EXPECT_THROW((SafeArea{{1, 0, 0}, {0, 1, 1}, true}.validate()), Error);
}

TEST_F(StationTest, SafeAreaValidation) {
  auto r = call("set_safe_area", {{"min", {{"x", 1}, {"y", 0}, {"z", 0}}}, {"max", {{"x", 0}, {"y", 1}, {"z", 1}}}});
  EXPECT_FALSE(r.ok);
  r = call("set_safe_area", {{"min", {{"x", 0}, {"y", 0}, {"z", 0}}}, {"max", {{"x", 1}, {"y", 1}, {"z", 1}, {"w", 0}}}});
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(call("get_safe_area").payload.at("enabled"), false);
}

TEST_F(StationTest, TelemetryEveryOtherTick) {
  steps(20);
  const auto t = on(topic::kTelemetry);
  ASSERT_EQ(t.size(), 10u);
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(t[i].at("tick"), 2 * (i + 1));
    ASSERT_EQ(t[i].at("drones").size(), 4u);
    const auto& d = t[i].at("drones")[0];
    for (const char* k : {"id", "x", "y", "z", "yaw", "vx", "vy", "vz", "mode", "r", "g", "b", "battery", "cpu"}) {
      EXPECT_TRUE(d.contains(k)) << k;
    }
    EXPECT_EQ(d.at("mode"), "landed");
  }
}

TEST_F(StationTest, ManualCommandValidation) {
  takeoff();
  EXPECT_TRUE(station_->publish_manual({{"drone", 0}, {"vx", 0.1}, {"vy", 0.0}, {"vz", 0.0}}).get().ok);
  auto r = station_->publish_manual({{"drone", 0}, {"vx", 0.1}, {"vy", 0.0}, {"vz", 0.0}, {"turbo", 1}}).get();
  EXPECT_FALSE(r.ok);
  r = station_->publish_manual({{"drone", 9}, {"vx", 0.1}, {"vy", 0.0}, {"vz", 0.0}}).get();
  EXPECT_EQ(r.payload.at("code"), "UnknownDrone");
  r = station_->publish_manual({{"drone", 0}, {"vx", 0.1}, {"vy", 0.0}, {"vz", 0.0}, {"frame", "map"}}).get();
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(on(topic::kManualCmd).size(), 1u);
}

TEST_F(StationTest, ManualBodyFrameRotates) {
  make(1);
  takeoff();
  ASSERT_TRUE(call("run", {{"program", doc({blk("n", "Navigate", {{"drone", 0}, {"x", 0.0}, {"y", 0.0}, {"z", 1.0},
                                                                   {"speed", 1.0}})})}})
                  .ok);
  steps(5);
  station_->publish_manual({{"drone", 0}, {"vx", 0.0}, {"vy", 0.0}, {"vz", 0.0}, {"yaw_rate", 1.5707963267948966}})
      .get();
  steps(20);
  station_->publish_manual({{"drone", 0}, {"vx", 0.5}, {"vy", 0.0}, {"vz", 0.0}, {"frame", "body"}}).get();
  steps(1);
  const auto v = station_->snapshot().drones[0].velocity;
  EXPECT_NEAR(v.x, 0.0, 1e-6);
  EXPECT_NEAR(v.y, 0.5, 1e-6);
}

TEST_F(StationTest, SpawnReplacesSwarm) {
  auto r = call("spawn", {{"n", 7}, {"spacing", 2.0}});
  ASSERT_TRUE(r.ok);
  const auto s = station_->snapshot();
  ASSERT_EQ(s.drones.size(), 7u);
  EXPECT_EQ(s.drones[6].pose.position.x, 12.0);
  EXPECT_EQ(call("spawn", {{"n", 0}}).payload.at("code"), "InvalidCount");
  ASSERT_TRUE(call("run", {{"program", doc({blk("w", "Wait", {{"seconds", 5.0}})})}}).ok);
  EXPECT_EQ(call("spawn", {{"n", 2}}).payload.at("code"), "AlreadyRunning");
}

TEST_F(StationTest, SetParams) {
  auto r = call("set_params", {{"nav_tolerance", 0.1}, {"d_safe", 0.8}});
  ASSERT_TRUE(r.ok) << r.payload.dump();
  EXPECT_EQ(r.payload.at("nav_tolerance"), 0.1);
  EXPECT_EQ(r.payload.at("d_safe"), 0.8);
  EXPECT_EQ(r.payload.at("block_timeout"), 60.0);
  EXPECT_FALSE(call("set_params", {{"nav_tolerance", -1.0}}).ok);
  EXPECT_FALSE(call("set_params", {{"speed", 1.0}}).ok);
  EXPECT_FALSE(call("set_params", {{"confirm_before_run", 1}}).ok);
}

TEST_F(StationTest, PromptAnsweredThroughService) {
  ASSERT_TRUE(call("run", {{"program", doc({blk("q", "Prompt", {{"var", "h"}, {"message", "height?"}}),
                                            blk("up", "TakeoffAll", {{"z", "h"}})})}})
                  .ok);
  steps(2);
  ASSERT_EQ(on(topic::kPrompt).size(), 1u);
  EXPECT_EQ(on(topic::kPrompt)[0].at("message"), "height?");
  EXPECT_EQ(call("answer_prompt", {{"value", "x"}}).payload.at("code"), "InvalidArgument");
  ASSERT_TRUE(call("answer_prompt", {{"value", 1.5}}).ok);
  steps(80);
  EXPECT_NEAR(station_->snapshot().drones[0].pose.position.z, 1.5, 0.2);
  EXPECT_EQ(call("answer_prompt", {{"value", 1.0}}).payload.at("code"), "NotPrompting");
}

TEST_F(StationTest, SimEventsPublished) {
  takeoff();
  // The block completes inside its 0.2 m tolerance; the flight controller settles later.
  steps(10);
  const auto ev = on(topic::kSimEvent);
  ASSERT_EQ(ev.size(), 4u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(ev[static_cast<std::size_t>(i)].at("kind"), "took_off");
    EXPECT_EQ(ev[static_cast<std::size_t>(i)].at("drone"), i);
  }
}

TEST_F(StationTest, TraceKeptPerRun) {
  for (int i = 0; i < 18; ++i) {
    ASSERT_TRUE(call("run", {{"program", doc(json::array())}}).ok);
    steps(1);
  }
  EXPECT_FALSE(station_->trace_jsonl("run-1"));
  EXPECT_FALSE(station_->trace_jsonl("run-2"));
  EXPECT_TRUE(station_->trace_jsonl("run-3"));
  EXPECT_TRUE(station_->trace_jsonl("run-18"));
}

}  // namespace
