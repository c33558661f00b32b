#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "coachlab/training_session.hpp"

namespace coachlab {

/// WebSocket front end for a TrainingSession.
///
/// One I/O thread serves every client; one loop thread runs the session's
/// CycleLoop. Each message from a client gets a direct reply; loop output
/// fans out to every client through a bounded per-client queue, and frames
/// that do not fit are dropped for that client only. A newly connected
/// client first receives the current state snapshot.
class TrainerServer {
 public:
  TrainerServer(TrainingSession& session, std::string address, std::uint16_t port);
  ~TrainerServer();

  TrainerServer(const TrainerServer&) = delete;
  TrainerServer& operator=(const TrainerServer&) = delete;

  /// Binds and starts both threads. Throws std::runtime_error when the
  /// address cannot be bound.
  void start();
  void stop();

  /// Bound port; useful when constructed with port 0.
  std::uint16_t port() const;
  std::size_t clients() const;
  std::uint64_t dropped_frames() const;
  const CycleLoop& loop() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits "host:port"; throws ConfigError when malformed.
std::pair<std::string, std::uint16_t> parse_listen_address(const std::string& text);

}  // namespace coachlab
