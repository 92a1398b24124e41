#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "emgfinger/estimators/estimator.hpp"
#include "emgfinger/harness/config.hpp"
#include "emgfinger/harness/force_estimation.hpp"
#include "emgfinger/harness/prosthesis_control.hpp"
#include "emgfinger/harness/server.hpp"
#include "emgfinger/harness/tension_calibration.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace emgfinger;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string estimator;
};

harness::ExperimentConfig make_config(const Common& c) {
  harness::ExperimentConfig cfg = c.config.empty() ? harness::ExperimentConfig{} : harness::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (!c.estimator.empty()) cfg.control_estimator = estimators::estimator_kind_from_string(c.estimator);
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  return cfg;
}

void wrote(const fs::path& p) { std::cout << "wrote " << p.string() << "\n"; }

int cmd_train(const Common& common) {
  auto cfg = make_config(common);
  cfg.model_path.clear();
  const auto session = harness::record_subject(cfg, 0);
  const auto kind = cfg.control_estimator;
  const auto est = harness::train_estimator(cfg, kind, session.train, session.scale,
                                            derive_seed(session.seed, 10 + static_cast<std::uint64_t>(kind)));
  const auto score = harness::score_estimator(est, session.train, session.test, est.context() - 1);
  const fs::path path = cfg.output_dir / "estimator.json";
  estimators::save_model(path, est);
  std::printf("%s: train R2 %.4f, test R2 %.4f\n", std::string(estimators::to_string(kind)).c_str(),
              score.train_r2, score.test_r2);
  wrote(path);
  return 0;
}

int cmd_evaluate(const Common& common) {
  const auto cfg = make_config(common);
  const auto report = harness::run_force_estimation_experiment(cfg);
  harness::write_json(cfg.output_dir / "force_estimation.json", harness::to_json(report));
  harness::write_scores_csv(cfg.output_dir / "estimator_scores.csv", report);
  for (const auto& s : report.summary) {
    std::printf("%-18s train R2 %.4f  test R2 %.4f  test RMSE %.4f\n",
                std::string(estimators::to_string(s.kind)).c_str(), s.mean_train_r2, s.mean_test_r2,
                s.mean_test_rmse);
  }
  wrote(cfg.output_dir / "force_estimation.json");
  wrote(cfg.output_dir / "estimator_scores.csv");
  return 0;
}

int cmd_calibrate(const Common& common) {
  const auto cfg = make_config(common);
  const auto result = harness::run_tension_calibration(cfg);
  harness::write_json(cfg.output_dir / "tension_calibration.json", harness::to_json(result));
  controller::save_tension_model(cfg.output_dir / "tension_model.json", result.model);
  std::printf("force RMSE %.3f N, R2 %.4f\n", result.force_rmse, result.force_r2);
  wrote(cfg.output_dir / "tension_calibration.json");
  wrote(cfg.output_dir / "tension_model.json");
  return 0;
}

int cmd_simulate(const Common& common, const std::string& log) {
  auto cfg = make_config(common);
  if (!log.empty()) cfg.activation_log = log;
  const auto setup = harness::prepare_control(cfg);
  harness::ControlResult result;
  if (!cfg.activation_log.empty()) {
    harness::ReplaySource source(harness::read_activation_log(cfg.activation_log));
    result = harness::run_prosthesis_control_experiment(cfg, setup, source);
  } else {
    harness::ScriptedSource source(cfg, setup.subject, derive_seed(cfg.seed, 7002));
    result = harness::run_prosthesis_control_experiment(cfg, setup, source);
  }
  harness::write_json(cfg.output_dir / "control.json", harness::to_json(result));
  harness::write_record_csv(cfg.output_dir / "control_record.csv", result.record);
  const auto& m = result.metrics;
  std::printf("tracking %.3f N  targeting %.3f N  reaching %.3f N\n", m.tracking_rmse, m.targeting_rmse,
              m.reaching_rmse);
  wrote(cfg.output_dir / "control.json");
  wrote(cfg.output_dir / "control_record.csv");
  return 0;
}

int cmd_serve(const Common& common, harness::ServeOptions options) {
  const auto cfg = make_config(common);
  const auto setup = harness::prepare_control(cfg);
  options.out_dir = cfg.output_dir;
  harness::ConsoleServer server(cfg, setup, options);
  std::cout << "listening on " << options.address << ":" << server.port() << std::endl;
  const auto summary = server.run();
  const auto& m = summary.result.metrics;
  std::printf("session %s: tracking %.3f N  targeting %.3f N  reaching %.3f N  timeouts %zu\n",
              summary.result.completed ? "complete" : "ended early", m.tracking_rmse, m.targeting_rmse,
              m.reaching_rmse, summary.result.timeouts);
  wrote(cfg.output_dir / "session_summary.json");
  return 0;
}

std::optional<json> try_read(const fs::path& p) {
  if (!fs::exists(p)) return std::nullopt;
  if (p.filename() == "session_summary.json") {
    std::ifstream in(p);
    return json::parse(in);
  }
  return harness::read_json(p);
}

int cmd_report(const Common& common) {
  const fs::path dir = common.out.empty() ? fs::path("out") : fs::path(common.out);
  json combined = {{"schema_version", harness::kReportSchemaVersion}, {"report", "combined"}};
  bool any = false;
  for (const char* name : {"force_estimation.json", "tension_calibration.json", "control.json",
                           "session_summary.json"}) {
    auto doc = try_read(dir / name);
    if (!doc) continue;
    any = true;
    const std::string key = fs::path(name).stem().string();
    combined[key] = *doc;
    std::cout << "[" << key << "]\n";
    if (key == "force_estimation") {
      for (const auto& [name, s] : (*doc)["summary"].items()) {
        std::printf("  %-18s test R2 %.4f  drop %.4f\n", name.c_str(),
                    s["mean_test_r2"].get<double>(), s["mean_train_test_drop"].get<double>());
      }
    } else if (key == "tension_calibration") {
      std::printf("  force RMSE %.3f N  R2 %.4f\n", (*doc)["force_rmse_N"].get<double>(),
                  (*doc)["force_r2"].get<double>());
    } else {
      const auto& m = (*doc)["metrics"];
      std::printf("  tracking %.3f N  targeting %.3f N  reaching %.3f N\n", m["tracking_rmse_N"].get<double>(),
                  m["targeting_rmse_N"].get<double>(), m["reaching_rmse_N"].get<double>());
    }
  }
  if (!any) {
    std::cerr << "no reports found in " << dir.string() << "\n";
    return 1;
  }
  harness::write_json(dir / "report.json", combined);
  wrote(dir / "report.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMG-driven force control of a tendon-driven prosthetic finger (simulation)"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--config", common.config, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "master seed");
  app.add_option("--out", common.out, "output directory");

  auto* train = app.add_subcommand("train", "train the control estimator on subject 0");
  auto* evaluate = app.add_subcommand("evaluate", "force-estimation experiment over all subjects");
  auto* simulate = app.add_subcommand("simulate", "closed-loop run against the simulated finger");
  auto* calibrate = app.add_subcommand("calibrate-tension", "fit the force-to-tension model");
  auto* serve = app.add_subcommand("serve", "closed-loop session driven by a TCP client");
  auto* report = app.add_subcommand("report", "summarize the reports in the output directory");
  for (auto* sub : {train, simulate, serve}) {
    sub->add_option("--estimator", common.estimator, "linear | random_forest | gradient_boosting | clstm");
  }
  for (auto* sub : {train, evaluate, simulate, calibrate, serve, report}) sub->fallthrough();

  std::string log;
  simulate->add_option("--activation-log", log, "replay activations from a record CSV or a value list")
      ->check(CLI::ExistingFile);

  harness::ServeOptions options;
  serve->add_option("--address", options.address, "listen address");
  serve->add_option("--port", options.port, "TCP port, 0 picks one");
  serve->add_option("--realtime-factor", options.realtime_factor, "control time per wall time, <= 0 unpaced");
  serve->add_option("--accept-timeout", options.accept_timeout, "seconds to wait for a client, 0 forever");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(common);
    if (*evaluate) return cmd_evaluate(common);
    if (*simulate) return cmd_simulate(common, log);
    if (*calibrate) return cmd_calibrate(common);
    if (*serve) return cmd_serve(common, options);
    if (*report) return cmd_report(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
