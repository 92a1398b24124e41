#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "emgfinger/harness/config.hpp"
#include "emgfinger/harness/force_estimation.hpp"
#include "emgfinger/harness/prosthesis_control.hpp"
#include "emgfinger/harness/record.hpp"
#include "emgfinger/harness/tension_calibration.hpp"
#include "support/small_config.hpp"

using namespace emgfinger;
using namespace emgfinger::harness;
namespace fs = std::filesystem;

namespace {

TrialRecord ramp_record(std::size_t n, double t0 = 0.0) {
  TrialRecord r;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + 0.02 * static_cast<double>(i);
    r.t.push_back(t);
    r.target.push_back(i % 10 < 5 ? 2.0 : 4.8);
    r.command.push_back(r.target.back() + 0.3 * std::sin(0.1 * static_cast<double>(i)));
    r.applied.push_back(r.command.back() - 0.2);
    r.tension_command.push_back(3.0 * r.command.back());
    r.tension.push_back(3.0 * r.applied.back());
    r.activation.push_back(0.5);
    r.position.push_back(10.0);
  }
  return r;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "emgfinger_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("control metrics definitions") {
  TrialRecord r = ramp_record(100);
  r.command = r.target;
  r.applied = r.target;
  auto m = compute_metrics(r);
  CHECK(m.tracking_rmse == 0.0);
  CHECK(m.targeting_rmse == 0.0);
  CHECK(m.reaching_rmse == 0.0);
  for (auto& a : r.applied) a += 0.5;
  m = compute_metrics(r);
  CHECK(m.reaching_rmse == doctest::Approx(0.5));
  CHECK(m.tracking_rmse == doctest::Approx(0.5));
  CHECK(m.targeting_rmse == 0.0);
  CHECK_THROWS(compute_metrics(TrialRecord{}));
}

TEST_CASE("metrics are invariant to a uniform time shift") {
  const auto a = compute_metrics(ramp_record(300, 0.0));
  const auto b = compute_metrics(ramp_record(300, 123.46));
  CHECK(a.tracking_rmse == b.tracking_rmse);
  CHECK(a.targeting_rmse == b.targeting_rmse);
  CHECK(a.reaching_rmse == b.reaching_rmse);
  CHECK(a.tension_rmse == b.tension_rmse);
  CHECK(a.samples == b.samples);
  CHECK(a.duration == doctest::Approx(b.duration).epsilon(1e-12));
}

TEST_CASE("trial record CSV round trip is exact") {
  const TrialRecord r = ramp_record(50);
  std::stringstream ss;
  write_record_csv(ss, r);
  const TrialRecord back = read_record_csv(ss);
  CHECK(back.t == r.t);
  CHECK(back.command == r.command);
  CHECK(back.tension == r.tension);
  CHECK(back.position == r.position);
  TrialRecord bad = r;
  bad.t[10] += 0.005;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("config JSON round trip, file loading and validation") {
  ExperimentConfig cfg = testing::small_config();
  cfg.plant.travel = 18.0;
  const auto back = config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));

  const auto dir = scratch("config");
  std::ofstream(dir / "acts.txt") << "0.1\n0.2\n";
  nlohmann::json doc = to_json(cfg);
  doc["activation_log"] = "acts.txt";
  write_json(dir / "cfg.json", doc);
  const auto loaded = load_config(dir / "cfg.json");
  CHECK(loaded.activation_log == dir / "acts.txt");
  CHECK(read_activation_log(loaded.activation_log) == std::vector<double>{0.1, 0.2});
  doc["activation_log"] = "missing.txt";
  write_json(dir / "cfg.json", doc);
  CHECK_THROWS(load_config(dir / "cfg.json"));

  ExperimentConfig bad = testing::small_config();
  bad.offline_hop = 0.03;  // not a whole number of 20 ms ticks
  CHECK_THROWS(bad.validate());
  bad = testing::small_config();
  bad.pattern_duration = -1.0;
  CHECK_THROWS(bad.validate());
  // Keys left out keep their defaults.
  const auto partial = config_from_json(nlohmann::json{{"seed", 99}});
  CHECK(partial.seed == 99);
  CHECK(partial.pattern_duration == 250.0);
}

TEST_CASE("live source holds the last value and counts timeouts in control time") {
  LiveSource live(0.02, 1.0);
  CHECK(live.next(0.0, 0.0) == 0.0);
  live.submit(0.4);
  CHECK(live.next(0.02, 0.0) == 0.4);
  for (int i = 0; i < 50; ++i) CHECK(live.next(0.0, 0.0) == 0.4);
  CHECK(live.timeouts() == 0);
  CHECK(live.next(0.0, 0.0) == 0.4);
  CHECK(live.timeouts() == 1);
  for (int i = 0; i < 100; ++i) live.next(0.0, 0.0);
  CHECK(live.timeouts() == 1);  // one episode
  live.submit(0.7);
  CHECK(live.next(0.0, 0.0) == 0.7);
  CHECK(live.longest_gap() == doctest::Approx(151 * 0.02));
  CHECK_THROWS_AS(live.submit(1.5), std::invalid_argument);
  CHECK_THROWS_AS(live.submit(-0.01), std::invalid_argument);
}

TEST_CASE("replay source validates and holds") {
  ReplaySource r({0.1, 0.3});
  CHECK(r.next(0, 0) == 0.1);
  CHECK(r.next(0, 0) == 0.3);
  CHECK(r.next(0, 0) == 0.3);
  CHECK_THROWS(ReplaySource({0.2, 1.2}));
}

TEST_CASE("tension calibration on the noise-free plant") {
  ExperimentConfig cfg = testing::small_config();
  const auto result = run_tension_calibration(cfg, cfg.plant.noise_free());
  CHECK(result.force_r2 >= 0.99);
  CHECK(result.force_rmse < 0.3);
  const auto& curve = result.model.curve;
  CHECK(curve.force_to_tension(0.0) == 0.0);
  for (std::size_t i = 1; i < curve.values().size(); ++i) CHECK(curve.values()[i] >= curve.values()[i - 1]);
  cfg.calibration.placements = {50.0};  // sensor out of reach
  CHECK_THROWS_AS(run_tension_calibration(cfg, cfg.plant), controller::DegenerateSamplingError);
}

TEST_CASE("force estimation experiment runs and is deterministic") {
  const ExperimentConfig cfg = testing::small_config();
  const auto a = run_force_estimation_experiment(cfg);
  const auto b = run_force_estimation_experiment(cfg);
  CHECK(to_json(a).dump() == to_json(b).dump());
  REQUIRE(a.subjects.size() == 2);
  REQUIRE(a.summary.size() == 3);
  for (const auto& s : a.summary) {
    CHECK(std::isfinite(s.mean_test_r2));
    CHECK(s.mean_drop == doctest::Approx(s.mean_train_r2 - s.mean_test_r2));
  }
  CHECK(a.summary_for(estimators::EstimatorKind::Linear).mean_test_r2 > 0.5);
  const auto dir = scratch("fe");
  write_scores_csv(dir / "scores.csv", a);
  std::ifstream in(dir / "scores.csv");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 1 + 2 * 3);
}

struct ControlFixture {
  ExperimentConfig cfg = testing::small_config();
  ControlSetup setup = prepare_control(cfg);
};

TEST_CASE_FIXTURE(ControlFixture, "zero activation keeps the finger open") {
  const auto ticks = static_cast<std::size_t>(cfg.pattern_duration * cfg.control_rate);
  ReplaySource zeros(std::vector<double>(ticks, 0.0));
  const auto res = run_prosthesis_control_experiment(cfg, setup, zeros);
  for (std::size_t i = 0; i < res.record.size(); ++i) {
    REQUIRE(res.record.command[i] == 0.0);
    REQUIRE(res.record.tension_command[i] == 0.0);
    REQUIRE(res.record.position[i] == 0.0);
    REQUIRE(res.record.applied[i] <= 0.1);
  }
}

TEST_CASE_FIXTURE(ControlFixture, "replaying a run's activations reproduces its commands bit-exactly") {
  ScriptedSource scripted(cfg, setup.subject, 77);
  const auto first = run_prosthesis_control_experiment(cfg, setup, scripted);
  std::stringstream ss;
  write_record_csv(ss, first.record);
  ReplaySource replay(read_record_csv(ss).activation);
  const auto second = run_prosthesis_control_experiment(cfg, setup, replay);
  CHECK(second.record.command == first.record.command);
  CHECK(second.record.applied == first.record.applied);
  CHECK(to_json(second).dump() == to_json(first).dump());
  CHECK(first.metrics.targeting_rmse < 2.0);
}

TEST_CASE_FIXTURE(ControlFixture, "pipeline is causal") {
  ScriptedSource scripted(cfg, setup.subject, 78);
  const auto full = run_prosthesis_control_experiment(cfg, setup, scripted);
  const std::size_t cut = full.record.size() / 2;
  std::vector<double> altered(full.record.activation.begin(), full.record.activation.begin() + cut);
  altered.resize(full.record.size(), 1.0);  // different future
  ReplaySource replay(altered);
  const auto other = run_prosthesis_control_experiment(cfg, setup, replay);
  for (std::size_t i = 0; i < cut; ++i) {
    REQUIRE(other.record.command[i] == full.record.command[i]);
    REQUIRE(other.record.tension[i] == full.record.tension[i]);
  }
  bool diverged = false;
  for (std::size_t i = cut; i < full.record.size(); ++i) diverged |= other.record.command[i] != full.record.command[i];
  CHECK(diverged);
}

TEST_CASE_FIXTURE(ControlFixture, "early stop from the tick observer") {
  ScriptedSource scripted(cfg, setup.subject, 79);
  std::size_t seen = 0;
  const auto res = run_prosthesis_control_experiment(cfg, setup, scripted, [&](const ControlLoop::Tick&) {
    return ++seen < 10;
  });
  CHECK(res.record.size() == 10);
  CHECK_FALSE(res.completed);
  CHECK(to_json(res)["completed"] == false);
}

TEST_CASE("tension servo settles after steps") {
  const ExperimentConfig cfg;
  auto request = [](double t) { return t < 4.0 ? 5.0 : (t < 8.0 ? 15.0 : 8.0); };
  const auto trace = run_tension_tracking(cfg, request, 12.0, 3);
  for (auto [from, until, target] : {std::tuple{0.0, 4.0, 5.0}, {4.0, 8.0, 15.0}, {8.0, 12.0, 8.0}}) {
    const double ts = settling_time(trace.t, trace.tension, target, 0.5, from, until);
    CAPTURE(target);
    CHECK(ts >= 0.0);
    CHECK(ts <= 2.0);
  }
  CHECK(settling_time({0.0, 1.0, 2.0}, {0.0, 1.0, 1.0}, 1.0, 0.1, 0.0, 3.0) == 1.0);
  CHECK(settling_time({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0}, 1.0, 0.1, 0.0, 3.0) < 0.0);
}
