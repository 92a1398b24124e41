#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "emgfinger/harness/config.hpp"
#include "emgfinger/harness/prosthesis_control.hpp"

namespace emgfinger::harness {

// Line-delimited JSON over TCP, one client per session.
//   server -> client  {"type":"state","t":..,"target_N":..,"command_N":..,"applied_N":..,"tension_N":..,"activation":..}
//                     {"type":"error","message":".."}
//                     {"type":"summary",...}   once, then the server closes
//   client -> server  {"type":"activation","value":0..1}
// Unknown fields are ignored.

struct ServeOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8765;     // 0 picks a free port
  double realtime_factor = 1.0;  // control seconds per wall second; <= 0 runs unpaced
  double accept_timeout = 0.0;   // s; 0 waits indefinitely
  std::size_t max_line = 4096;   // longer client lines end the connection
  std::filesystem::path out_dir;  // summary and record land here when set
};

struct ClientMessage {
  std::optional<double> activation;
  std::string error;  // empty for valid messages and blank lines
};

// Never throws.
ClientMessage parse_client_line(std::string_view line);

// One state message, without the trailing newline.
std::string state_line(const ControlLoop::Tick& tick);

struct SessionSummary {
  ControlResult result;
  nlohmann::json message;  // exactly what was sent and written to disk
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool client_disconnected = false;
};

class ConsoleServer {
 public:
  // Binds immediately; throws boost::system::system_error when the port is taken.
  ConsoleServer(const ExperimentConfig& cfg, const ControlSetup& setup, ServeOptions options);
  ~ConsoleServer();
  ConsoleServer(const ConsoleServer&) = delete;
  ConsoleServer& operator=(const ConsoleServer&) = delete;

  std::uint16_t port() const;

  // Waits for one client, runs the control experiment with its activation
  // stream and ends with the summary. Throws std::runtime_error when no client
  // arrives within accept_timeout.
  SessionSummary run();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace emgfinger::harness
