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

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "peristalsim/config.hpp"
#include "peristalsim/session.hpp"

namespace peristalsim::service {

/**
 * Feeds wire commands to a session and advances its clock.
 *
 * Fast mode semantics, shared by the server and offline replay: a command
 * is applied once the device is quiescent, then the clock runs until it is
 * quiescent again and at least one frame reports the result. An e-stop
 * skips the queue and lands on the next step. Identical command sequences
 * therefore give identical frame sequences.
 */
class Driver {
 public:
  using FrameSink = std::function<void(const session::TelemetryFrame&)>;

  Driver(DeviceConfig config, FrameSink sink);

  session::Session& session() { return session_; }
  const session::Session& session() const { return session_; }

  /// Applies one message. Returns the error frame text when it is rejected;
  /// the session is unchanged in that case.
  std::optional<std::string> submit(std::string_view line);

  /// True while the clock must keep running before the next queued command.
  bool busy() const { return need_frame_ || !session_.quiescent(); }

  /// Ticks while busy, at most `max_steps` times. Returns the steps taken.
  std::size_t advance(std::size_t max_steps);

  /// Exactly one tick regardless of state (wall-clock pacing).
  void step();

 private:
  session::Session session_;
  FrameSink sink_;
  bool need_frame_ = false;
};

/// A replayed command with its outcome.
struct ReplayEntry {
  std::string command;
  std::optional<std::string> error;
};

/// Runs newline-delimited commands through a Driver in fast mode, writing
/// every frame to `csv` (when given). Blank lines and lines starting with
/// '#' are skipped.
std::vector<ReplayEntry> replay(const DeviceConfig& config, std::string_view script,
                                std::ostream* csv);

struct ServeOptions {
  std::string address = "127.0.0.1";
  std::uint16_t port = 7070;
  /// Second listener speaking the same messages over WebSocket, one JSON
  /// document per text message. Unset: no WebSocket endpoint.
  std::optional<std::uint16_t> ws_port;
  bool real_time = false;
  std::string record_path;  // empty: no recording
  /// Per-client limit on queued outgoing bytes before it is dropped.
  std::size_t max_backlog_bytes = std::size_t{64} << 20;
};

/// Bind or listen failure.
class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Newline-delimited JSON endpoint over TCP, optionally also over
 * WebSocket. Both transports share one client list.
 *
 * The first connected client is the controller; later clients are
 * read-only subscribers until the controller leaves. Every client gets a
 * snapshot frame on connect and then the shared frame stream. One thread
 * runs the network and the simulation loop.
 */
class Server {
 public:
  /// Binds immediately; throws NetworkError when the address is unusable.
  Server(DeviceConfig config, ServeOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const;
  std::optional<std::uint16_t> ws_port() const;

  /// Runs until shutdown() or SIGINT/SIGTERM (when `handle_signals`).
  void run(bool handle_signals = true);

  /// Thread-safe: stops the loop and closes every connection.
  void shutdown();

  /// Commands consumed (applied or rejected) so far; thread-safe.
  std::size_t commands_processed() const;
  /// No queued command and the device is quiescent; thread-safe.
  bool idle() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace peristalsim::service
