// Copyright 2026 The Peristalsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "peristalsim/service.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <fstream>
#include <mutex>

#include "peristalsim/errors.hpp"
#include "peristalsim/protocol.hpp"

namespace peristalsim::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
using asio::ip::tcp;
using WsStream = beast::websocket::stream<tcp::socket>;

Driver::Driver(DeviceConfig config, FrameSink sink)
    : session_(std::move(config)), sink_(std::move(sink)) {}

std::optional<std::string> Driver::submit(std::string_view line) {
  try {
    const auto command = protocol::parse_command(line);
    protocol::apply_command(session_, command);
    need_frame_ = true;
    return std::nullopt;
  } catch (const ValidationError& e) {
    return protocol::encode_error(e.what(), session_.state());
  } catch (const StateError& e) {
    return protocol::encode_error(e.what(), session_.state());
  } catch (const DomainError& e) {
    return protocol::encode_error(e.what(), session_.state());
  }
}

void Driver::step() {
  if (auto frame = session_.tick()) {
    need_frame_ = false;
    if (sink_) sink_(*frame);
  }
}

std::size_t Driver::advance(std::size_t max_steps) {
  std::size_t n = 0;
  while (n < max_steps && busy()) {
    step();
    ++n;
  }
  return n;
}

std::vector<ReplayEntry> replay(const DeviceConfig& config, std::string_view script,
                                std::ostream* csv) {
  std::unique_ptr<session::CsvRecorder> recorder;
  if (csv) {
    recorder = std::make_unique<session::CsvRecorder>(
        *csv, config.device.manifold.num_actuators(), config.device.manifold.num_motors());
  }
  Driver driver(config, [&](const session::TelemetryFrame& f) {
    if (recorder) recorder->write(f);
  });
  std::vector<ReplayEntry> log;
  std::size_t pos = 0;
  while (pos < script.size()) {
    auto end = script.find('\n', pos);
    if (end == std::string_view::npos) end = script.size();
    auto line = script.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    driver.advance(std::numeric_limits<std::size_t>::max());
    log.push_back({std::string(line), driver.submit(line)});
    driver.advance(std::numeric_limits<std::size_t>::max());
  }
  return log;
}

// ---------------------------------------------------------------------------

namespace {

// Steps simulated per event-loop turn in fast mode, so I/O stays responsive.
constexpr std::size_t kFastBatch = 1000;
// Longest catch-up burst in real-time mode after a stall.
constexpr std::size_t kMaxCatchUp = 1000;
constexpr std::size_t kMaxLineBytes = 1 << 20;
// Longest wait for clients to take their queued frames at shutdown.
constexpr auto kLinger = std::chrono::seconds(2);

}  // namespace

struct Server::Impl {
  struct Client : std::enable_shared_from_this<Client> {
    Client(Impl& owner, tcp::socket s) : impl(owner), socket(std::move(s)), buf(kMaxLineBytes) {}
    Client(Impl& owner, std::unique_ptr<WsStream> w)
        : impl(owner), socket(owner.io), ws(std::move(w)), buf(kMaxLineBytes) {}
    Impl& impl;
    tcp::socket socket;            // plain TCP clients
    std::unique_ptr<WsStream> ws;  // WebSocket clients, one message per line
    asio::streambuf buf;
    beast::flat_buffer ws_buf;
    std::deque<std::shared_ptr<const std::string>> out;
    std::size_t backlog = 0;
    bool writing = false;
    bool closing = false;  // close once the queue drains
    bool closed = false;
  };

  Impl(DeviceConfig cfg, ServeOptions o)
      : config(std::move(cfg)),
        opts(std::move(o)),
        acceptor(io),
        ws_acceptor(io),
        signals(io),
        timer(io),
        linger(io) {
    boost::system::error_code ec;
    const auto addr = asio::ip::make_address(opts.address, ec);
    if (ec) throw NetworkError("invalid bind address '" + opts.address + "': " + ec.message());
    listen(acceptor, tcp::endpoint(addr, opts.port));
    if (opts.ws_port) listen(ws_acceptor, tcp::endpoint(addr, *opts.ws_port));
    if (!opts.record_path.empty()) {
      record.open(opts.record_path, std::ios::binary | std::ios::trunc);
      if (!record) throw ConfigError("cannot open recording file " + opts.record_path);
      recorder = std::make_unique<session::CsvRecorder>(
          record, config.device.manifold.num_actuators(), config.device.manifold.num_motors());
    }
    driver = std::make_unique<Driver>(config, [this](const session::TelemetryFrame& f) {
      if (recorder) recorder->write(f);
      broadcast(std::make_shared<const std::string>(protocol::encode_frame(f) + "\n"));
    });
  }

  void listen(tcp::acceptor& a, const tcp::endpoint& ep) {
    boost::system::error_code ec;
    a.open(ep.protocol(), ec);
    if (!ec) a.set_option(tcp::acceptor::reuse_address(true), ec);
    if (!ec) a.bind(ep, ec);
    if (!ec) a.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) {
      throw NetworkError("cannot listen on " + opts.address + ":" + std::to_string(ep.port()) +
                         ": " + ec.message());
    }
  }

  void accept() {
    acceptor.async_accept([this](boost::system::error_code ec, tcp::socket s) {
      if (ec) {
        if (ec != asio::error::operation_aborted && !stopping) accept();
        return;
      }
      join(std::make_shared<Client>(*this, std::move(s)));
      accept();
    });
  }

  void accept_ws() {
    ws_acceptor.async_accept([this](boost::system::error_code ec, tcp::socket s) {
      if (ec) {
        if (ec != asio::error::operation_aborted && !stopping) accept_ws();
        return;
      }
      auto ws = std::make_unique<WsStream>(std::move(s));
      ws->text(true);
      ws->read_message_max(kMaxLineBytes);
      auto c = std::make_shared<Client>(*this, std::move(ws));
      pending_ws.push_back(c);
      // the client joins the stream once the upgrade handshake is done
      c->ws->async_accept([this, c](boost::system::error_code ec) {
        std::erase(pending_ws, c);
        if (ec || stopping) {
          boost::system::error_code ignored;
          beast::get_lowest_layer(*c->ws).close(ignored);
          return;
        }
        join(c);
      });
      accept_ws();
    });
  }

  void join(const std::shared_ptr<Client>& c) {
    clients.push_back(c);
    if (!controller) controller = c;
    send(c, std::make_shared<const std::string>(
                protocol::encode_frame(driver->session().snapshot()) + "\n"));
    read(c);
  }

  void read(const std::shared_ptr<Client>& c) {
    if (c->ws) {
      c->ws->async_read(c->ws_buf, [this, c](boost::system::error_code ec, std::size_t) {
        if (ec) {
          drop(c);
          return;
        }
        const std::string text = beast::buffers_to_string(c->ws_buf.data());
        c->ws_buf.consume(c->ws_buf.size());
        // a message may carry one command or several newline-separated ones
        std::size_t pos = 0;
        while (pos <= text.size() && !c->closed) {
          auto end = text.find('\n', pos);
          if (end == std::string::npos) end = text.size();
          std::string line = text.substr(pos, end - pos);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          on_line(c, std::move(line));
          pos = end + 1;
        }
        if (!c->closed) read(c);
      });
      return;
    }
    asio::async_read_until(c->socket, c->buf, '\n',
                           [this, c](boost::system::error_code ec, std::size_t n) {
                             if (ec) {
                               drop(c);
                               return;
                             }
                             std::string line(asio::buffers_begin(c->buf.data()),
                                              asio::buffers_begin(c->buf.data()) +
                                                  static_cast<std::ptrdiff_t>(n) - 1);
                             c->buf.consume(n);
                             if (!line.empty() && line.back() == '\r') line.pop_back();
                             on_line(c, std::move(line));
                             if (!c->closed) read(c);
                           });
  }

  void on_line(const std::shared_ptr<Client>& c, std::string line) {
    if (line.find_first_not_of(" \t") == std::string::npos) return;
    if (c != controller) {
      send(c, std::make_shared<const std::string>(
                  protocol::encode_error("read-only subscriber: commands come from the "
                                         "controlling connection",
                                         driver->session().state()) +
                  "\n"));
      return;
    }
    bool is_estop = false;
    try {
      is_estop = protocol::parse_command(line).event == session::Event::EStop;
    } catch (const std::exception&) {
      // rejected in submit() in order with the rest
    }
    if (is_estop && !opts.real_time) {
      consume(line);
    } else {
      std::lock_guard lock(state_mutex);
      queue.push_back(std::move(line));
      idle_flag = false;
    }
    if (!opts.real_time) schedule_pump();
  }

  void consume(const std::string& line) {
    idle_flag = false;
    if (auto err = driver->submit(line)) {
      if (controller) send(controller, std::make_shared<const std::string>(*err + "\n"));
    }
    ++processed;
  }

  void schedule_pump() {
    if (pump_scheduled || stopping) return;
    pump_scheduled = true;
    asio::post(io, [this] { pump(); });
  }

  // fast mode: one command per quiescent point, then a bounded batch of steps
  void pump() {
    pump_scheduled = false;
    if (stopping) return;
    std::optional<std::string> next;
    if (!driver->busy()) {
      std::lock_guard lock(state_mutex);
      if (!queue.empty()) {
        next = std::move(queue.front());
        queue.pop_front();
      }
    }
    if (next) consume(*next);
    driver->advance(kFastBatch);
    bool more;
    {
      std::lock_guard lock(state_mutex);
      more = driver->busy() || !queue.empty();
      idle_flag = !more;
    }
    if (more) schedule_pump();
  }

  // real-time mode: commands land on the next step, the clock never stops
  void arm_timer() {
    const auto step = std::chrono::duration<double>(config.simulation.step_s);
    timer.expires_at(t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              step * static_cast<double>(steps_done + 1)));
    timer.async_wait([this](boost::system::error_code ec) {
      if (ec || stopping) return;
      const auto elapsed = std::chrono::steady_clock::now() - t0;
      auto due = static_cast<std::uint64_t>(std::chrono::duration<double>(elapsed).count() /
                                            config.simulation.step_s);
      if (due > steps_done + kMaxCatchUp) {
        // fell too far behind: drop the backlog of wall-clock time
        steps_done = due - kMaxCatchUp;
      }
      while (steps_done < due) {
        std::deque<std::string> pending;
        {
          std::lock_guard lock(state_mutex);
          pending.swap(queue);
        }
        for (const auto& line : pending) consume(line);
        driver->step();
        ++steps_done;
      }
      {
        std::lock_guard lock(state_mutex);
        idle_flag = queue.empty() && !driver->busy();
      }
      arm_timer();
    });
  }

  void broadcast(const std::shared_ptr<const std::string>& msg) {
    // copy: send() may drop clients
    const auto targets = clients;
    for (const auto& c : targets) send(c, msg);
  }

  void send(const std::shared_ptr<Client>& c, std::shared_ptr<const std::string> msg) {
    if (c->closed || c->closing) return;
    c->backlog += msg->size();
    if (c->backlog > opts.max_backlog_bytes) {
      drop(c);
      return;
    }
    c->out.push_back(std::move(msg));
    if (!c->writing) write(c);
  }

  void write(const std::shared_ptr<Client>& c) {
    c->writing = true;
    const auto msg = c->out.front();
    auto done = [this, c, msg](boost::system::error_code ec, std::size_t) {
      c->writing = false;
      if (ec) {
        drop(c);
        return;
      }
      c->backlog -= msg->size();
      c->out.pop_front();
      if (c->closed) return;
      if (!c->out.empty()) {
        write(c);
      } else if (c->closing) {
        drop(c);
      }
    };
    if (c->ws) {
      c->ws->async_write(asio::buffer(*msg), std::move(done));
    } else {
      asio::async_write(c->socket, asio::buffer(*msg), std::move(done));
    }
  }

  void drop(const std::shared_ptr<Client>& c) {
    if (c->closed) return;
    c->closed = true;
    boost::system::error_code ignored;
    auto& sock = c->ws ? beast::get_lowest_layer(*c->ws) : c->socket;
    sock.shutdown(tcp::socket::shutdown_both, ignored);
    sock.close(ignored);
    std::erase(clients, c);
    if (controller == c) controller = clients.empty() ? nullptr : clients.front();
    if (stopping && clients.empty()) {
      linger.cancel();
      io.stop();
    }
  }

  void stop_all() {
    if (stopping) return;
    stopping = true;
    boost::system::error_code ignored;
    acceptor.close(ignored);
    ws_acceptor.close(ignored);
    for (const auto& c : pending_ws) beast::get_lowest_layer(*c->ws).close(ignored);
    signals.cancel(ignored);
    timer.cancel();
    // flush what each client is owed, then close; a stuck peer gets cut
    // off when the linger timer fires
    const auto all = clients;
    for (const auto& c : all) {
      c->closing = true;
      if (!c->writing) drop(c);
    }
    if (clients.empty()) {
      io.stop();
      return;
    }
    linger.expires_after(kLinger);
    linger.async_wait([this](boost::system::error_code ec) {
      if (ec) return;
      const auto rest = clients;
      for (const auto& c : rest) drop(c);
      io.stop();
    });
  }

  asio::io_context io;
  DeviceConfig config;
  ServeOptions opts;
  tcp::acceptor acceptor;
  tcp::acceptor ws_acceptor;
  std::vector<std::shared_ptr<Client>> pending_ws;
  asio::signal_set signals;
  asio::steady_timer timer;
  asio::steady_timer linger;
  std::ofstream record;
  std::unique_ptr<session::CsvRecorder> recorder;
  std::unique_ptr<Driver> driver;
  std::vector<std::shared_ptr<Client>> clients;
  std::shared_ptr<Client> controller;

  mutable std::mutex state_mutex;
  std::deque<std::string> queue;
  std::atomic<std::size_t> processed{0};
  std::atomic<bool> idle_flag{true};
  bool pump_scheduled = false;
  bool stopping = false;
  std::chrono::steady_clock::time_point t0;
  std::uint64_t steps_done = 0;
};

Server::Server(DeviceConfig config, ServeOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(options))) {}

Server::~Server() = default;

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

std::optional<std::uint16_t> Server::ws_port() const {
  if (!impl_->opts.ws_port) return std::nullopt;
  return impl_->ws_acceptor.local_endpoint().port();
}

void Server::run(bool handle_signals) {
  auto& d = *impl_;
  if (handle_signals) {
    d.signals.add(SIGINT);
    d.signals.add(SIGTERM);
    d.signals.async_wait([&d](boost::system::error_code ec, int) {
      if (!ec) d.stop_all();
    });
  }
  d.accept();
  if (d.opts.ws_port) d.accept_ws();
  if (d.opts.real_time) {
    d.t0 = std::chrono::steady_clock::now();
    d.arm_timer();
  }
  d.io.run();
  if (d.record.is_open()) d.record.flush();
}

void Server::shutdown() {
  asio::post(impl_->io, [d = impl_.get()] { d->stop_all(); });
}

std::size_t Server::commands_processed() const { return impl_->processed.load(); }

bool Server::idle() const {
  std::lock_guard lock(impl_->state_mutex);
  return impl_->idle_flag.load() && impl_->queue.empty();
}

}  // namespace peristalsim::service
