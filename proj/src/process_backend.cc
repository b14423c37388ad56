#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "graphsmith/errors.h"
#include "graphsmith/harness.h"
#include "graphsmith/protocol.h"
#include "graphsmith/serialize.h"

namespace graphsmith {

namespace {

constexpr size_t kMaxStderr = 64 * 1024;

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

ProcessBackend::ProcessBackend(std::string name, std::string command, double timeout_seconds)
    : name_(std::move(name)), command_(std::move(command)), timeout_(timeout_seconds) {
  if (timeout_ <= 0) throw ConfigError("backend timeout must be positive");
  launch();
}

ProcessBackend::~ProcessBackend() { stop(); }

void ProcessBackend::launch() {
  ::signal(SIGPIPE, SIG_IGN);
  int in[2], out[2], err[2];
  if (::pipe2(in, O_CLOEXEC) || ::pipe2(out, O_CLOEXEC) || ::pipe2(err, O_CLOEXEC)) {
    throw BackendLaunchError(name_ + ": pipe: " + std::strerror(errno));
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw BackendLaunchError(name_ + ": fork: " + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in[0], 0);
    ::dup2(out[1], 1);
    ::dup2(err[1], 2);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in[0]);
  ::close(out[1]);
  ::close(err[1]);
  pid_ = pid;
  to_child_ = in[1];
  from_child_ = out[0];
  err_child_ = err[0];
  buffer_.clear();
  err_buffer_.clear();

  bool timed_out = false;
  std::optional<std::string> line;
  if (send(R"({"op":"hello"})")) line = receive(std::max(timeout_, 10.0), timed_out);
  if (!line) {
    const std::string why = timed_out ? "no hello response" : exit_description();
    const std::string err_text = drain_stderr();
    stop();
    throw BackendLaunchError(name_ + ": handshake failed (" + why + ")" + (err_text.empty() ? "" : ": " + err_text));
  }
  try {
    const auto j = nlohmann::json::parse(*line);
    version_ = j.at("version").get<int>();
    ops_ = j.at("ops").get<std::set<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    stop();
    throw BackendLaunchError(name_ + ": malformed hello response: " + e.what());
  }
  if (version_ != kProtocolVersion) {
    stop();
    throw BackendLaunchError(name_ + ": protocol version " + std::to_string(version_) + ", expected " +
                             std::to_string(kProtocolVersion));
  }
}

void ProcessBackend::stop() {
  close_fd(to_child_);
  close_fd(from_child_);
  close_fd(err_child_);
  if (pid_ > 0) {
    ::kill(-pid_, SIGKILL);
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
  pid_ = -1;
}

bool ProcessBackend::send(const std::string& line) {
  const std::string data = line + "\n";
  size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<size_t>(n);
  }
  return true;
}

std::optional<std::string> ProcessBackend::receive(double seconds, bool& timed_out) {
  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + std::chrono::duration<double>(seconds);
  timed_out = false;
  char chunk[65536];
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) {
      timed_out = true;
      return std::nullopt;
    }
    pollfd fds[2] = {{from_child_, POLLIN, 0}, {err_child_, POLLIN, 0}};
    const int nfds = err_child_ >= 0 ? 2 : 1;
    const int r = ::poll(fds, nfds, static_cast<int>(std::min<long long>(left, 1 << 30)));
    if (r < 0) {
      if (errno == EINTR) continue;
      return std::nullopt;
    }
    if (nfds == 2 && (fds[1].revents & (POLLIN | POLLHUP))) {
      const ssize_t n = ::read(err_child_, chunk, sizeof chunk);
      if (n <= 0) {
        close_fd(err_child_);
      } else if (err_buffer_.size() < kMaxStderr) {
        err_buffer_.append(chunk, static_cast<size_t>(n));
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return std::nullopt;
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }
}

std::string ProcessBackend::drain_stderr() {
  if (err_child_ >= 0) {
    char chunk[4096];
    while (err_buffer_.size() < kMaxStderr) {
      pollfd fd{err_child_, POLLIN, 0};
      if (::poll(&fd, 1, 50) <= 0) break;
      const ssize_t n = ::read(err_child_, chunk, sizeof chunk);
      if (n <= 0) break;
      err_buffer_.append(chunk, static_cast<size_t>(n));
    }
  }
  std::string s;
  s.swap(err_buffer_);
  return s;
}

std::string ProcessBackend::exit_description() {
  if (pid_ <= 0) return "not running";
  int status = 0;
  pid_t r = 0;
  for (int i = 0; i < 100 && (r = ::waitpid(pid_, &status, WNOHANG)) == 0; ++i) ::usleep(10000);
  if (r != pid_) return "closed its output";
  pid_ = -1;
  last_status_ = status;
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  if (WIFEXITED(status)) {
    const int code = WEXITSTATUS(status);
    // sh reports a child killed by signal N as status 128 + N
    if (code > 128 && code < 128 + 65) return "killed by signal " + std::to_string(code - 128);
    return "exited with status " + std::to_string(code);
  }
  return "terminated";
}

RunResult ProcessBackend::run(const Graph& g, uint64_t data_seed) {
  RunResult r;
  if (pid_ < 0) {
    try {
      launch();
    } catch (const BackendLaunchError& e) {
      r.status = RunResult::Status::kCrash;
      r.message = e.what();
      return r;
    }
  }
  err_buffer_.clear();
  const nlohmann::json request = {{"op", "run"}, {"graph", graph_to_json(g)}, {"data_seed", data_seed}};
  bool timed_out = false;
  std::optional<std::string> line;
  if (send(request.dump())) line = receive(timeout_, timed_out);
  if (!line) {
    if (timed_out) {
      r.status = RunResult::Status::kTimeout;
      r.message = "no response within the timeout";
    } else {
      r.status = RunResult::Status::kCrash;
      r.message = exit_description();
      r.trace = drain_stderr();
    }
    stop();
    return r;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(*line);
  } catch (const nlohmann::json::exception&) {
    r.status = RunResult::Status::kCrash;
    r.message = "malformed response";
    r.trace = drain_stderr();
    stop();
    return r;
  }
  try {
    if (j.at("status") == "ok") {
      r.outputs = decode_outputs(j.at("outputs"));
    } else {
      r.status = RunResult::Status::kError;
      r.message = j.value("code", "error") + ": " + j.value("message", "");
      r.trace = j.value("trace", "");
    }
  } catch (const std::exception& e) {
    r.status = RunResult::Status::kCrash;
    r.message = std::string("malformed response: ") + e.what();
    stop();
  }
  return r;
}

}  // namespace graphsmith
