#pragma once

// External-process objective. The child is started once with `sh -c command`
// and then serves one evaluation per line:
//
//   request  {"selection":[...],"theta_c":[...],"theta_d":[...]}\n
//   reply    {"objective": x, "constraints":[...]}\n
//
// A timeout kills the child; the next evaluation starts a fresh one.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <csignal>
#include <memory>
#include <string>
#include <system_error>

#include <nlohmann/json.hpp>

#include "cashadmm/objective.hpp"

namespace cashadmm {

struct ExternalObjectiveConfig {
  std::string command;
  double timeout_seconds = 60.0;
};

inline nlohmann::json query_to_json(const PipelineQuery& q) {
  return {{"selection", q.sel.choice}, {"theta_c", q.theta_c}, {"theta_d", q.theta_d}};
}

/// Parses one reply line; throws evaluation_error(malformed_reply).
inline Evaluation parse_reply(const std::string& line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw evaluation_error(EvalFailure::malformed_reply, "unparseable reply '" + line + "'");
  }
  if (!doc.is_object() || !doc.contains("objective")) {
    throw evaluation_error(EvalFailure::malformed_reply, "reply lacks \"objective\": " + line);
  }
  Evaluation out;
  const auto& objective = doc["objective"];
  if (objective.is_number()) {
    out.objective = objective.get<double>();
  } else if (objective.is_null()) {
    out.objective = kInf;
  } else {
    throw evaluation_error(EvalFailure::malformed_reply, "non-numeric objective: " + line);
  }
  if (doc.contains("constraints")) {
    const auto& constraints = doc["constraints"];
    if (!constraints.is_array()) {
      throw evaluation_error(EvalFailure::malformed_reply, "constraints is not an array: " + line);
    }
    for (const auto& g : constraints) {
      if (g.is_number()) {
        out.constraints.push_back(g.get<double>());
      } else if (g.is_null()) {
        out.constraints.push_back(kInf);
      } else {
        throw evaluation_error(EvalFailure::malformed_reply, "non-numeric constraint: " + line);
      }
    }
  }
  return out;
}

class ExternalProcess {
 public:
  explicit ExternalProcess(ExternalObjectiveConfig config) : config_(std::move(config)) {}
  ~ExternalProcess() { stop(); }

  ExternalProcess(const ExternalProcess&) = delete;
  ExternalProcess& operator=(const ExternalProcess&) = delete;

  Evaluation evaluate(const PipelineQuery& q) {
    if (pid_ <= 0) start();
    const std::string request = query_to_json(q).dump() + "\n";
    write_all(request);
    return parse_reply(read_line());
  }

  bool running() const noexcept { return pid_ > 0; }

  void stop() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
    buffer_.clear();
  }

 private:
  void start() {
    // A dead child turns writes into SIGPIPE; report it through read_line instead.
    std::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe(in_pipe) != 0) throw std::system_error(errno, std::generic_category(), "pipe");
    if (::pipe(out_pipe) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      throw std::system_error(errno, std::generic_category(), "pipe");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw std::system_error(errno, std::generic_category(), "fork");
    if (pid == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      ::close(out_pipe[1]);
      ::execl("/bin/sh", "sh", "-c", config_.command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
    ::fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
  }

  void write_all(const std::string& data) {
    std::size_t written = 0;
    while (written < data.size()) {
      const ssize_t n = ::write(to_child_, data.data() + written, data.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        // EPIPE: the child is gone; read_line will collect its exit status.
        return;
      }
      written += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(
                                             std::chrono::duration<double>(config_.timeout_seconds));
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return line;
      }
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
      if (remaining <= 0) {
        stop();
        throw evaluation_error(EvalFailure::timeout,
                               "no reply within " + std::to_string(config_.timeout_seconds) + " s");
      }
      pollfd pfd{from_child_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, static_cast<int>(remaining));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw std::system_error(errno, std::generic_category(), "poll");
      }
      if (ready == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw std::system_error(errno, std::generic_category(), "read");
      }
      if (n == 0) throw child_exit_error();
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  evaluation_error child_exit_error() {
    int status = 0;
    std::string detail = "evaluator closed its output";
    if (pid_ > 0 && ::waitpid(pid_, &status, 0) == pid_) {
      if (WIFEXITED(status)) {
        detail = "evaluator exited with status " + std::to_string(WEXITSTATUS(status));
      } else if (WIFSIGNALED(status)) {
        detail = "evaluator killed by signal " + std::to_string(WTERMSIG(status));
      }
      pid_ = -1;
    }
    stop();
    return evaluation_error(EvalFailure::child_exited, detail);
  }

  ExternalObjectiveConfig config_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// One evaluation over the external protocol.
inline Evaluation external_eval(ExternalProcess& process, const PipelineQuery& q) {
  return process.evaluate(q);
}

inline BlackBox make_external_black_box(ExternalObjectiveConfig config) {
  auto process = std::make_shared<ExternalProcess>(std::move(config));
  return [process](const PipelineQuery& q) { return process->evaluate(q); };
}

}  // namespace cashadmm
