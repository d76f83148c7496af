#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fpclean {

/// A bidirectional line transport to an external endpoint.
class LineChannel {
 public:
  virtual ~LineChannel() = default;

  /// Throws Error(EndpointUnavailable) when the peer is gone.
  virtual void send_line(const std::string& line) = 0;
  /// Returns std::nullopt on timeout; throws EndpointUnavailable on EOF.
  virtual std::optional<std::string> receive_line(std::chrono::milliseconds timeout) = 0;
};

/// Runs `/bin/sh -c command` and talks to it over its stdin/stdout.
class ProcessChannel final : public LineChannel {
 public:
  explicit ProcessChannel(const std::string& command);
  ~ProcessChannel() override;

  ProcessChannel(const ProcessChannel&) = delete;
  ProcessChannel& operator=(const ProcessChannel&) = delete;

  void send_line(const std::string& line) override;
  std::optional<std::string> receive_line(std::chrono::milliseconds timeout) override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// In-process channel driven by a handler function; each sent line is
/// answered by `handler(line)` (no reply when it returns std::nullopt).
class LoopbackChannel final : public LineChannel {
 public:
  using Handler = std::function<std::optional<std::string>(const std::string&)>;

  explicit LoopbackChannel(Handler handler) : handler_(std::move(handler)) {}

  void send_line(const std::string& line) override;
  std::optional<std::string> receive_line(std::chrono::milliseconds timeout) override;

  const std::vector<std::string>& sent() const noexcept { return sent_; }

 private:
  Handler handler_;
  std::deque<std::string> pending_;
  std::vector<std::string> sent_;
};

}  // namespace fpclean
