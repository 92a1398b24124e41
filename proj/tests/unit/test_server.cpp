#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>
#include <vector>

#include <boost/asio.hpp>

#include "emgfinger/harness/prosthesis_control.hpp"
#include "emgfinger/harness/server.hpp"
#include "support/small_config.hpp"

using namespace emgfinger;
using namespace emgfinger::harness;
namespace asio = boost::asio;
using asio::ip::tcp;
using nlohmann::json;

namespace {

class Client {
 public:
  explicit Client(std::uint16_t port) : socket_(io_) {
    for (int attempt = 0;; ++attempt) {
      boost::system::error_code ec;
      socket_.connect({asio::ip::make_address("127.0.0.1"), port}, ec);
      if (!ec) break;
      if (attempt > 200) throw boost::system::system_error(ec);
      socket_.close();
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    socket_.set_option(tcp::no_delay(true));
  }

  void send(const std::string& line) { asio::write(socket_, asio::buffer(line + "\n")); }

  // Empty at end of stream.
  std::string read_line() {
    boost::system::error_code ec;
    const std::size_t n = asio::read_until(socket_, buffer_, '\n', ec);
    if (ec) return {};
    std::string line(asio::buffers_begin(buffer_.data()), asio::buffers_begin(buffer_.data()) + n - 1);
    buffer_.consume(n);
    return line;
  }

  void close() { socket_.close(); }

 private:
  asio::io_context io_;
  tcp::socket socket_;
  asio::streambuf buffer_;
};

struct Transcript {
  std::vector<json> states;
  std::vector<json> errors;
  std::string summary;
};

ServeOptions fast_options(const std::filesystem::path& out) {
  ServeOptions o;
  o.port = 0;
  o.realtime_factor = 10.0;
  o.accept_timeout = 20.0;
  o.out_dir = out;
  return o;
}

}  // namespace

TEST_CASE("client message parsing") {
  CHECK(parse_client_line(R"({"type":"activation","value":0.6})").activation == 0.6);
  CHECK(parse_client_line(R"({"value":1,"type":"activation","extra":[1,2]})").activation == 1.0);
  CHECK(parse_client_line("{\"type\":\"activation\",\"value\":0}\r").activation == 0.0);
  CHECK(parse_client_line("").error.empty());
  CHECK_FALSE(parse_client_line("").activation);
  for (const char* bad : {R"({"type":"activation","value":1.5})", R"({"type":"activation","value":-0.1})",
                          R"({"type":"activation","value":"0.5"})", R"({"type":"activation"})",
                          R"({"type":"hello"})", R"({"value":0.5})", "not json", "[1,2]",
                          R"({"type":"activation","value":1e400})"}) {
    CAPTURE(bad);
    const auto m = parse_client_line(bad);
    CHECK_FALSE(m.activation);
    CHECK_FALSE(m.error.empty());
  }
}

TEST_CASE("state message format") {
  ControlLoop::Tick t;
  t.t = 1.5;
  t.target = 4.8;
  t.command = 4.0;
  t.servo.obs.force = 3.9;
  t.servo.obs.tension = 20.0;
  const json j = json::parse(state_line(t));
  CHECK(j["type"] == "state");
  CHECK(j["t"] == 1.5);
  CHECK(j["target_N"] == 4.8);
  CHECK(j["command_N"] == 4.0);
  CHECK(j["applied_N"] == 3.9);
  CHECK(j["tension_N"] == 20.0);
  CHECK(state_line(t).find('\n') == std::string::npos);
}

struct ServerFixture {
  ExperimentConfig cfg = [] {
    auto c = testing::small_config();
    c.pattern_duration = 6.0;
    c.pattern_hold = 1.0;
    return c;
  }();
  ControlSetup setup = prepare_control(cfg);
  std::size_t ticks() const { return static_cast<std::size_t>(std::llround(cfg.pattern_duration * cfg.control_rate)); }
};

TEST_CASE_FIXTURE(ServerFixture, "live session replaying a log matches the offline run") {
  // Reference: scripted activations run offline.
  ScriptedSource scripted(cfg, setup.subject, 91);
  const auto offline = run_prosthesis_control_experiment(cfg, setup, scripted);
  const std::vector<double>& log = offline.record.activation;

  const auto out = std::filesystem::temp_directory_path() / "emgfinger_tests" / "serve";
  std::filesystem::remove_all(out);
  ServeOptions options = fast_options(out);
  options.realtime_factor = 2.0;  // 10 ms per tick leaves the client time to answer
  ConsoleServer server(cfg, setup, options);
  auto session = std::async(std::launch::async, [&] { return server.run(); });

  Client client(server.port());
  client.send(json{{"type", "activation"}, {"value", log[0]}}.dump());
  Transcript tr;
  bool sent_bad = false;
  for (std::string line = client.read_line(); !line.empty(); line = client.read_line()) {
    const json msg = json::parse(line);
    if (msg["type"] == "state") {
      tr.states.push_back(msg);
      const std::size_t next = tr.states.size();
      if (next == 20 && !sent_bad) {
        client.send(R"({"type":"activation","value":1.5})");
        client.send("garbage");
        sent_bad = true;
      }
      if (next < log.size()) client.send(json{{"type", "activation"}, {"value", log[next]}}.dump());
    } else if (msg["type"] == "error") {
      tr.errors.push_back(msg);
    } else if (msg["type"] == "summary") {
      tr.summary = line;
    }
  }
  const SessionSummary summary = session.get();

  CHECK(tr.states.size() == ticks());
  CHECK(summary.result.record.size() == ticks());
  CHECK(summary.result.completed);
  CHECK(tr.errors.size() == 2);
  CHECK(summary.rejected == 2);
  CHECK(summary.accepted >= log.size() - 1);
  for (double a : summary.result.record.activation) CHECK(a <= 1.0);

  // Streamed states are the recorded ones.
  for (std::size_t i = 0; i < tr.states.size(); i += 37) {
    CHECK(tr.states[i]["command_N"].get<double>() == summary.result.record.command[i]);
    CHECK(tr.states[i]["t"].get<double>() == summary.result.record.t[i]);
  }

  // Summary on the wire equals the file on disk, byte for byte.
  std::ifstream in(out / "session_summary.json", std::ios::binary);
  std::stringstream file;
  file << in.rdbuf();
  CHECK(file.str() == tr.summary + "\n");
  CHECK(json::parse(tr.summary)["report"] == "prosthesis_control");

  const auto& on = summary.result.metrics;
  const auto& off = offline.metrics;
  CHECK(std::abs(on.tracking_rmse - off.tracking_rmse) <= 0.1 * off.tracking_rmse);
  CHECK(std::abs(on.targeting_rmse - off.targeting_rmse) <= 0.1 * off.targeting_rmse);
  CHECK(std::abs(on.reaching_rmse - off.reaching_rmse) <= 0.1 * off.reaching_rmse);

  // The logged live session replays offline bit-exactly.
  ReplaySource replay(summary.result.record.activation);
  const auto again = run_prosthesis_control_experiment(cfg, setup, replay);
  CHECK(again.record.command == summary.result.record.command);
}

TEST_CASE_FIXTURE(ServerFixture, "silent client: activation holds and the timeout is flagged") {
  ConsoleServer server(cfg, setup, fast_options({}));
  auto session = std::async(std::launch::async, [&] { return server.run(); });
  Client client(server.port());
  client.send(R"({"type":"activation","value":0.3})");
  std::string summary_line;
  for (std::string line = client.read_line(); !line.empty(); line = client.read_line()) {
    if (json::parse(line)["type"] == "summary") summary_line = line;
  }
  const auto s = session.get();
  const json j = json::parse(summary_line);
  CHECK(j["input_timeout"] == true);
  CHECK(j["input_timeouts"] == 1);
  CHECK(j["longest_input_gap_s"].get<double>() > 1.0);
  const auto& act = s.result.record.activation;
  REQUIRE(act.size() == ticks());
  for (std::size_t i = 5; i < act.size(); ++i) CHECK(act[i] == 0.3);
}

TEST_CASE_FIXTURE(ServerFixture, "client disconnect ends the session early") {
  ServeOptions o = fast_options({});
  o.realtime_factor = 2.0;
  ConsoleServer server(cfg, setup, o);
  auto session = std::async(std::launch::async, [&] { return server.run(); });
  {
    Client client(server.port());
    client.send(R"({"type":"activation","value":0.5})");
    for (int i = 0; i < 10; ++i) client.read_line();
    client.close();
  }
  const auto s = session.get();
  CHECK(s.client_disconnected);
  CHECK_FALSE(s.result.completed);
  CHECK(s.result.record.size() < ticks());
  CHECK(s.message["completed"] == false);
}

TEST_CASE_FIXTURE(ServerFixture, "oversized line is rejected and the connection closed") {
  ServerFixture& f = *this;
  ServeOptions o = fast_options({});
  o.max_line = 256;
  ConsoleServer server(f.cfg, f.setup, o);
  auto session = std::async(std::launch::async, [&] { return server.run(); });
  Client client(server.port());
  client.send(std::string(1000, 'x'));
  bool saw_error = false;
  for (std::string line = client.read_line(); !line.empty(); line = client.read_line()) {
    if (json::parse(line)["type"] == "error") saw_error = true;
  }
  const auto s = session.get();
  CHECK(saw_error);
  CHECK(s.rejected == 1);
  CHECK(s.client_disconnected);
}

TEST_CASE_FIXTURE(ServerFixture, "busy port and missing client") {
  ServeOptions o = fast_options({});
  ConsoleServer first(cfg, setup, o);
  o.port = first.port();
  CHECK_THROWS_AS(ConsoleServer(cfg, setup, o), boost::system::system_error);
  ServeOptions quick = fast_options({});
  quick.accept_timeout = 0.2;
  ConsoleServer lonely(cfg, setup, quick);
  CHECK_THROWS_AS(lonely.run(), std::runtime_error);
}
