#include "emgfinger/harness/server.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <boost/asio.hpp>

namespace emgfinger::harness {

namespace asio = boost::asio;
using asio::ip::tcp;
using nlohmann::json;

ClientMessage parse_client_line(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  if (line.empty()) return {};
  const json doc = json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return {std::nullopt, "malformed message"};
  const auto type = doc.find("type");
  if (type == doc.end() || !type->is_string()) return {std::nullopt, "missing message type"};
  if (*type != "activation") return {std::nullopt, "unknown message type"};
  const auto value = doc.find("value");
  if (value == doc.end() || !value->is_number()) return {std::nullopt, "activation needs a numeric value"};
  const double v = value->get<double>();
  if (!(std::isfinite(v) && v >= 0.0 && v <= 1.0)) return {std::nullopt, "activation outside [0, 1]"};
  return {v, {}};
}

std::string state_line(const ControlLoop::Tick& tick) {
  const json msg = {{"type", "state"},
                    {"t", tick.t},
                    {"target_N", tick.target},
                    {"command_N", tick.command},
                    {"applied_N", tick.servo.obs.force},
                    {"tension_N", tick.servo.obs.tension},
                    {"activation", tick.activation}};
  return msg.dump();
}

namespace {

std::string error_line(const std::string& what) {
  return json{{"type", "error"}, {"message", what}}.dump();
}

// Lives on the network thread; everything here runs inside io.run().
class Connection {
 public:
  Connection(tcp::socket socket, LiveSource& live, std::size_t max_line)
      : socket_(std::move(socket)), live_(live), buffer_(max_line) {}

  void start() { read(); }

  void send(std::string line) {
    if (closed_) return;
    line.push_back('\n');
    outbox_.push_back(std::move(line));
    if (outbox_.size() == 1) write();
  }

  // Flushes what is queued, then closes.
  void finish() {
    closing_ = true;
    if (outbox_.empty()) close();
  }

  std::atomic<bool> disconnected{false};
  std::atomic<std::size_t> accepted{0};
  std::atomic<std::size_t> rejected{0};

 private:
  void read() {
    asio::async_read_until(socket_, buffer_, '\n', [this](boost::system::error_code ec, std::size_t n) {
      if (ec == asio::error::not_found) {
        ++rejected;
        send(error_line("line too long"));
        disconnected = true;
        finish();
        return;
      }
      if (ec) {
        if (ec != asio::error::operation_aborted) disconnected = true;
        return;
      }
      std::string line(asio::buffers_begin(buffer_.data()), asio::buffers_begin(buffer_.data()) + n - 1);
      buffer_.consume(n);
      handle(line);
      read();
    });
  }

  void handle(const std::string& line) {
    const ClientMessage msg = parse_client_line(line);
    if (msg.activation) {
      live_.submit(*msg.activation);
      ++accepted;
    } else if (!msg.error.empty()) {
      ++rejected;
      send(error_line(msg.error));
    }
  }

  void write() {
    asio::async_write(socket_, asio::buffer(outbox_.front()), [this](boost::system::error_code ec, std::size_t) {
      if (ec) {
        disconnected = true;
        outbox_.clear();
        close();
        return;
      }
      outbox_.pop_front();
      if (!outbox_.empty()) {
        write();
      } else if (closing_) {
        close();
      }
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    boost::system::error_code ignored;
    socket_.shutdown(tcp::socket::shutdown_both, ignored);
    socket_.close(ignored);
  }

  tcp::socket socket_;
  LiveSource& live_;
  asio::streambuf buffer_;
  std::deque<std::string> outbox_;
  bool closing_ = false;
  bool closed_ = false;
};

}  // namespace

struct ConsoleServer::Impl {
  Impl(const ExperimentConfig& c, const ControlSetup& s, ServeOptions o)
      : cfg(c), setup(s), options(std::move(o)), acceptor(io) {
    const tcp::endpoint endpoint(asio::ip::make_address(options.address), options.port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(tcp::acceptor::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen();
  }

  tcp::socket accept() {
    tcp::socket socket(io);
    bool done = false;
    boost::system::error_code result;
    acceptor.async_accept(socket, [&](boost::system::error_code ec) {
      result = ec;
      done = true;
    });
    if (options.accept_timeout > 0.0) {
      const auto until = std::chrono::steady_clock::now() +
                         std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                             std::chrono::duration<double>(options.accept_timeout));
      while (!done && std::chrono::steady_clock::now() < until) {
        io.run_one_until(until);
      }
      if (!done) {
        acceptor.cancel();
        io.run();
        io.restart();
        throw std::runtime_error("no client connected");
      }
    } else {
      while (!done) io.run_one();
    }
    io.restart();
    if (result) throw boost::system::system_error(result);
    // State lines are small and periodic; do not let them wait for ACKs.
    socket.set_option(tcp::no_delay(true));
    return socket;
  }

  const ExperimentConfig& cfg;
  const ControlSetup& setup;
  ServeOptions options;
  asio::io_context io;
  tcp::acceptor acceptor;
};

ConsoleServer::ConsoleServer(const ExperimentConfig& cfg, const ControlSetup& setup, ServeOptions options)
    : impl_(std::make_unique<Impl>(cfg, setup, std::move(options))) {}

ConsoleServer::~ConsoleServer() = default;

std::uint16_t ConsoleServer::port() const { return impl_->acceptor.local_endpoint().port(); }

SessionSummary ConsoleServer::run() {
  Impl& s = *impl_;
  LiveSource live(s.cfg.tick(), s.cfg.control.live_timeout);
  Connection conn(s.accept(), live, s.options.max_line);

  auto guard = asio::make_work_guard(s.io);
  asio::post(s.io, [&] { conn.start(); });
  std::thread network([&] { s.io.run(); });

  using clock = std::chrono::steady_clock;
  const bool paced = s.options.realtime_factor > 0.0;
  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(paced ? s.cfg.tick() / s.options.realtime_factor : 0.0));
  auto deadline = clock::now();

  SessionSummary out;
  try {
    out.result = run_prosthesis_control_experiment(s.cfg, s.setup, live, [&](const ControlLoop::Tick& tick) {
      asio::post(s.io, [&conn, line = state_line(tick)]() mutable { conn.send(std::move(line)); });
      if (paced) {
        deadline += period;
        std::this_thread::sleep_until(deadline);
      }
      return !conn.disconnected.load();
    });
  } catch (...) {
    asio::post(s.io, [&] { conn.finish(); });
    guard.reset();
    network.join();
    throw;
  }

  out.accepted = conn.accepted;
  out.rejected = conn.rejected;
  out.client_disconnected = conn.disconnected;
  out.message = to_json(out.result);
  out.message["type"] = "summary";
  out.message["client_messages"] = {{"accepted", out.accepted}, {"rejected", out.rejected}};
  out.message["longest_input_gap_s"] = live.longest_gap();
  const std::string text = out.message.dump();

  if (!s.options.out_dir.empty()) {
    std::filesystem::create_directories(s.options.out_dir);
    std::ofstream(s.options.out_dir / "session_summary.json", std::ios::binary) << text << '\n';
    write_record_csv(s.options.out_dir / "session_record.csv", out.result.record);
  }

  asio::post(s.io, [&] {
    conn.send(text);
    conn.finish();
  });
  guard.reset();
  network.join();
  s.io.restart();
  return out;
}

}  // namespace emgfinger::harness
