// Copyright 2026 The toolmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fcntl.h>
#include <linux/close_range.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <system_error>
#include <thread>

#include "toolmix/tools.h"

namespace toolmix {
namespace {

using Clock = std::chrono::steady_clock;

// Child-side failure stages reported through the status pipe.
enum ChildStage : int { kStageIsolation = 1, kStageChdir = 2, kStageExec = 3 };

struct ChildFailure {
  int stage;
  int error;
};

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& other) noexcept : fd_(other.release()) {}
  Fd& operator=(Fd&& other) noexcept {
    reset(other.release());
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset(int fd = -1) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

Pipe MakePipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    throw std::system_error(errno, std::generic_category(), "pipe2");
  }
  return {Fd(fds[0]), Fd(fds[1])};
}

std::string ResolveExecutable(const std::string& name) {
  if (name.find('/') != std::string::npos) return name;
  const char* path = std::getenv("PATH");
  std::string_view dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
  while (!dirs.empty()) {
    const std::size_t colon = dirs.find(':');
    std::string dir(dirs.substr(0, colon));
    dirs = colon == std::string_view::npos ? "" : dirs.substr(colon + 1);
    if (dir.empty()) continue;
    std::string candidate = dir + "/" + name;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate;
  }
  return {};
}

// Temporary directory removed on scope exit.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& root) {
    std::string base = root;
    if (base.empty()) {
      const char* tmp = std::getenv("TMPDIR");
      base = tmp && *tmp ? tmp : "/tmp";
    }
    std::string tmpl = base + "/toolmix-sandbox-XXXXXX";
    if (::mkdtemp(tmpl.data()) == nullptr) {
      throw std::system_error(errno, std::generic_category(),
                              "mkdtemp " + tmpl);
    }
    path_ = tmpl;
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

void SetNonBlocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

// Appends up to `cap` bytes total; reports whether anything was dropped.
void AppendCapped(std::string& out, const char* data, std::size_t n,
                  std::size_t cap, bool& truncated) {
  const std::size_t room = out.size() < cap ? cap - out.size() : 0;
  if (n > room) truncated = true;
  out.append(data, std::min(n, room));
}

ExecutionResult SandboxFailure(std::string message, Millis wall) {
  ExecutionResult result;
  result.status = ExecStatus::kRuntimeError;
  result.stderr_text = "sandbox failure: " + std::move(message);
  result.exit_code = -1;
  result.sandbox_failure = true;
  result.wall_time = wall;
  return result;
}

[[noreturn]] void ChildFail(int status_fd, int stage) {
  ChildFailure failure{stage, errno};
  [[maybe_unused]] ssize_t n = ::write(status_fd, &failure, sizeof(failure));
  ::_exit(127);
}

}  // namespace

CodeSandbox::CodeSandbox(SandboxOptions options)
    : options_(std::move(options)),
      interpreter_path_(ResolveExecutable(options_.interpreter)) {
  // A child that exits before reading all of stdin must surface as EPIPE,
  // not kill the engine.
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });
}

ExecutionResult CodeSandbox::Run(std::string_view source, Millis limit) const {
  if (source.empty()) throw std::invalid_argument("empty code source");
  if (limit <= Millis::zero()) throw std::invalid_argument("limit must be > 0");

  const auto start = Clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<Millis>(Clock::now() - start);
  };
  if (interpreter_path_.empty()) {
    return SandboxFailure("interpreter '" + options_.interpreter +
                              "' not found on PATH",
                          elapsed());
  }

  std::optional<ScratchDir> scratch;
  Pipe in, out, err, status;
  try {
    scratch.emplace(options_.scratch_root);
    in = MakePipe();
    out = MakePipe();
    err = MakePipe();
    status = MakePipe();
  } catch (const std::exception& e) {
    return SandboxFailure(e.what(), elapsed());
  }

  // Everything the child needs is built before fork: only async-signal-safe
  // calls are allowed between fork and exec.
  std::vector<std::string> args = {interpreter_path_};
  args.insert(args.end(), options_.interpreter_args.begin(),
              options_.interpreter_args.end());
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  std::vector<std::string> env = {
      "PATH=/usr/local/bin:/usr/bin:/bin",
      "HOME=" + scratch->path(),
      "TMPDIR=" + scratch->path(),
      "LANG=C.UTF-8",
      "PYTHONDONTWRITEBYTECODE=1",
      "PYTHONIOENCODING=utf-8",
  };
  std::vector<char*> envp;
  for (auto& e : env) envp.push_back(e.data());
  envp.push_back(nullptr);
  const char* workdir = scratch->path().c_str();
  const NetworkPolicy network = options_.network;

  const pid_t pid = ::fork();
  if (pid < 0) {
    return SandboxFailure(std::string("fork: ") + std::strerror(errno),
                          elapsed());
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    if (network != NetworkPolicy::kAllow) {
      if (::unshare(CLONE_NEWUSER | CLONE_NEWNET) != 0 &&
          network == NetworkPolicy::kDeny) {
        ChildFail(status.write.get(), kStageIsolation);
      }
    }
    struct rlimit no_core = {0, 0};
    ::setrlimit(RLIMIT_CORE, &no_core);
    if (::chdir(workdir) != 0) ChildFail(status.write.get(), kStageChdir);
    ::dup2(in.read.get(), STDIN_FILENO);
    ::dup2(out.write.get(), STDOUT_FILENO);
    ::dup2(err.write.get(), STDERR_FILENO);
    // Descriptors inherited without O_CLOEXEC must not leak into user code.
    if (::close_range(3, ~0U, CLOSE_RANGE_CLOEXEC) != 0) {
      for (int fd = 3; fd < 4096; ++fd) {
        if (fd != status.write.get()) ::close(fd);
      }
    }
    ::execve(argv[0], argv.data(), envp.data());
    ChildFail(status.write.get(), kStageExec);
  }

  ::setpgid(pid, pid);
  in.read.reset();
  out.write.reset();
  err.write.reset();
  status.write.reset();

  // Blocks until exec succeeds (EOF via O_CLOEXEC) or the child reports.
  ChildFailure failure{};
  ssize_t got;
  do {
    got = ::read(status.read.get(), &failure, sizeof(failure));
  } while (got < 0 && errno == EINTR);
  if (got == static_cast<ssize_t>(sizeof(failure))) {
    int wstatus;
    ::waitpid(pid, &wstatus, 0);
    const char* stage = failure.stage == kStageIsolation
                            ? "network isolation (unshare)"
                        : failure.stage == kStageChdir ? "chdir"
                                                       : "exec";
    return SandboxFailure(
        std::string(stage) + ": " + std::strerror(failure.error), elapsed());
  }

  SetNonBlocking(in.write.get());
  SetNonBlocking(out.read.get());
  SetNonBlocking(err.read.get());

  ExecutionResult result;
  const auto deadline = start + limit;
  std::size_t written = 0;
  bool timed_out = false;
  bool reaped = false;
  int wstatus = 0;
  char buf[8192];

  auto drain = [&](Fd& fd, std::string& sink) {
    while (fd.valid()) {
      const ssize_t n = ::read(fd.get(), buf, sizeof(buf));
      if (n > 0) {
        AppendCapped(sink, buf, static_cast<std::size_t>(n),
                     options_.max_output_bytes, result.output_truncated);
      } else if (n == 0) {
        fd.reset();
      } else {
        if (errno == EINTR) continue;
        if (errno != EAGAIN) fd.reset();
        break;
      }
    }
  };

  while (out.read.valid() || err.read.valid() || !reaped) {
    if (!reaped) {
      const pid_t r = ::waitpid(pid, &wstatus, WNOHANG);
      if (r == pid) reaped = true;
    }
    const auto now = Clock::now();
    if (!timed_out && now >= deadline) {
      timed_out = true;
      ::kill(-pid, SIGKILL);
      if (!reaped) {
        ::waitpid(pid, &wstatus, 0);
        reaped = true;
      }
    }
    if (timed_out) {
      // Group is dead; collect what is already buffered and stop.
      drain(out.read, result.stdout_text);
      drain(err.read, result.stderr_text);
      break;
    }
    if (reaped && !out.read.valid() && !err.read.valid()) break;

    pollfd fds[3];
    nfds_t nfds = 0;
    if (out.read.valid()) fds[nfds++] = {out.read.get(), POLLIN, 0};
    if (err.read.valid()) fds[nfds++] = {err.read.get(), POLLIN, 0};
    if (in.write.valid()) fds[nfds++] = {in.write.get(), POLLOUT, 0};
    auto wait = std::chrono::duration_cast<Millis>(deadline - now).count();
    if (reaped || nfds == 0) wait = std::min<long long>(wait, 10);
    if (!reaped) wait = std::min<long long>(wait, 50);
    ::poll(fds, nfds, static_cast<int>(std::max<long long>(wait, 1)));

    if (in.write.valid()) {
      while (written < source.size()) {
        const ssize_t n = ::write(in.write.get(), source.data() + written,
                                  source.size() - written);
        if (n > 0) {
          written += static_cast<std::size_t>(n);
        } else {
          if (n < 0 && errno == EINTR) continue;
          if (n < 0 && errno != EAGAIN) written = source.size();
          break;
        }
      }
      if (written >= source.size()) in.write.reset();
    }
    drain(out.read, result.stdout_text);
    drain(err.read, result.stderr_text);
    if (reaped && (out.read.valid() || err.read.valid())) {
      // Exited child whose descendants still hold the pipes: give them
      // until the deadline, the loop above kills the group then.
      continue;
    }
  }
  // Clean up anything left in the group (backgrounded descendants).
  ::kill(-pid, SIGKILL);

  result.wall_time = elapsed();
  if (timed_out) {
    result.status = ExecStatus::kTimeout;
    result.exit_code = -1;
    if (result.wall_time < limit) result.wall_time = limit;
  } else if (WIFEXITED(wstatus)) {
    result.exit_code = WEXITSTATUS(wstatus);
    result.status =
        result.exit_code == 0 ? ExecStatus::kOk : ExecStatus::kRuntimeError;
  } else {
    result.exit_code = -1;
    result.status = ExecStatus::kRuntimeError;
    if (WIFSIGNALED(wstatus)) {
      result.stderr_text +=
          "\nkilled by signal " + std::to_string(WTERMSIG(wstatus));
    }
  }
  return result;
}

}  // namespace toolmix
