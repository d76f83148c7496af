#include "fpclean/channel.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "fpclean/error.hpp"

namespace fpclean {

ProcessChannel::ProcessChannel(const std::string& command) {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw Error(ErrorCode::EndpointUnavailable, "pipe() failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw Error(ErrorCode::EndpointUnavailable, "pipe() failed");
  }
  pid_ = fork();
  if (pid_ < 0) throw Error(ErrorCode::EndpointUnavailable, "fork() failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(from_child_, F_SETFD, FD_CLOEXEC);
  // A dead peer must surface as EPIPE, not kill the engine.
  std::signal(SIGPIPE, SIG_IGN);
}

ProcessChannel::~ProcessChannel() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) != 0) return;
      usleep(10'000);
    }
    kill(pid_, SIGTERM);
    waitpid(pid_, &status, 0);
  }
}

void ProcessChannel::send_line(const std::string& line) {
  std::string data = line + "\n";
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    ssize_t n = write(to_child_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::EndpointUnavailable, std::string("write to endpoint failed: ") + std::strerror(errno));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

std::optional<std::string> ProcessChannel::receive_line(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return line;
    }
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) return std::nullopt;
    pollfd pfd{from_child_, POLLIN, 0};
    int ready = poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::EndpointUnavailable, "poll on endpoint failed");
    }
    if (ready == 0) return std::nullopt;
    char chunk[4096];
    ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::EndpointUnavailable, "read from endpoint failed");
    }
    if (n == 0) throw Error(ErrorCode::EndpointUnavailable, "endpoint closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void LoopbackChannel::send_line(const std::string& line) {
  sent_.push_back(line);
  if (auto reply = handler_(line)) pending_.push_back(std::move(*reply));
}

std::optional<std::string> LoopbackChannel::receive_line(std::chrono::milliseconds) {
  if (pending_.empty()) return std::nullopt;
  std::string line = std::move(pending_.front());
  pending_.pop_front();
  return line;
}

}  // namespace fpclean
