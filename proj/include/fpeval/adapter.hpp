#pragma once

// External systems under test, driven through a subprocess protocol:
//
//   matcher    <exe> <templateA> <templateB>   stdout: one decimal score
//   quality    <exe> <image>                    stdout: one decimal score
//   extractor  <exe> <image> <out_template>     writes a template file
//
// Exit status 0 means success. Surrounding whitespace on stdout is ignored.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "fpeval/core.hpp"

extern char** environ;

namespace fpeval {

enum class SystemRole { kMatcher, kExtractor, kQuality };

inline std::string_view to_string(SystemRole r) {
  switch (r) {
    case SystemRole::kMatcher: return "matcher";
    case SystemRole::kExtractor: return "extractor";
    case SystemRole::kQuality: return "quality";
  }
  return "unknown";
}

inline std::optional<SystemRole> system_role_from_string(std::string_view s) {
  for (auto r : {SystemRole::kMatcher, SystemRole::kExtractor, SystemRole::kQuality})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

struct ExternalSystem {
  std::string name;
  std::string executable;
  SystemRole role = SystemRole::kMatcher;
  double score_min = 0.0;
  double score_max = 1.0;
  double timeout_seconds = 30.0;

  void validate() const {
    if (!(score_max > score_min)) throw InvalidArgument("external system '" + name + "': score max must exceed min");
    if (!(timeout_seconds > 0.0)) throw InvalidArgument("external system '" + name + "': timeout must be positive");
    if (executable.empty()) throw InvalidArgument("external system '" + name + "': no executable");
  }
};

enum class CallStatus { kOk, kSpawnFailed, kNonzeroExit, kTimeout, kUnparseable };

inline std::string_view to_string(CallStatus s) {
  switch (s) {
    case CallStatus::kOk: return "ok";
    case CallStatus::kSpawnFailed: return "spawn_failed";
    case CallStatus::kNonzeroExit: return "nonzero_exit";
    case CallStatus::kTimeout: return "timeout";
    case CallStatus::kUnparseable: return "unparseable_output";
  }
  return "unknown";
}

struct ProcessResult {
  CallStatus status = CallStatus::kOk;
  int exit_code = 0;
  std::string output;
};

/// Runs `exe args...` with stdout captured and stderr discarded; kills the
/// process if it outlives `timeout_seconds`.
inline ProcessResult run_process(const std::string& exe, const std::vector<std::string>& args,
                                 double timeout_seconds) {
  ProcessResult result;
  int out_pipe[2];
  if (pipe(out_pipe) != 0) {
    result.status = CallStatus::kSpawnFailed;
    return result;
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);
  posix_spawn_file_actions_addclose(&actions, out_pipe[1]);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);

  // New process group so a timeout also reaps grandchildren (shell shims).
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  std::vector<char*> argv;
  argv.push_back(const_cast<char*>(exe.c_str()));
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  pid_t pid = 0;
  const int rc = posix_spawn(&pid, exe.c_str(), &actions, &attr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  close(out_pipe[1]);
  if (rc != 0) {
    close(out_pipe[0]);
    result.status = CallStatus::kSpawnFailed;
    return result;
  }

  using Clock = std::chrono::steady_clock;
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(timeout_seconds));
  bool timed_out = false;
  char buf[4096];
  for (;;) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (remaining <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{out_pipe[0], POLLIN, 0};
    const int pr = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining, 1000)));
    if (pr < 0 && errno == EINTR) continue;
    if (pr == 0) continue;
    const ssize_t n = read(out_pipe[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    result.output.append(buf, static_cast<std::size_t>(n));
    if (result.output.size() > (1u << 20)) break;  // runaway output
  }
  close(out_pipe[0]);

  int status = 0;
  if (timed_out) {
    kill(-pid, SIGKILL);
    waitpid(pid, &status, 0);
    result.status = CallStatus::kTimeout;
    return result;
  }
  // Output closed; the process may still be running.
  for (;;) {
    const pid_t w = waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) break;
    if (Clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      waitpid(pid, &status, 0);
      result.status = CallStatus::kTimeout;
      return result;
    }
    usleep(1000);
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    result.status = CallStatus::kNonzeroExit;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  return result;
}

/// Parses the single-number stdout contract.
inline std::optional<double> parse_score_output(std::string_view text) {
  static const std::regex kNumber(R"(^\s*[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?\s*$)");
  const std::string s(text);
  if (!std::regex_match(s, kNumber)) return std::nullopt;
  return std::stod(s);
}

struct ExternalScore {
  CallStatus status = CallStatus::kOk;
  double value = 0.0;     // clamped into the declared range
  double raw = 0.0;       // as printed
  bool clamped = false;
  std::string detail;

  bool ok() const noexcept { return status == CallStatus::kOk; }
};

namespace detail {

inline ExternalScore score_call(const ExternalSystem& system, const std::vector<std::string>& args) {
  ExternalScore out;
  const auto pr = run_process(system.executable, args, system.timeout_seconds);
  out.status = pr.status;
  if (pr.status != CallStatus::kOk) {
    out.detail = std::string(to_string(pr.status));
    if (pr.status == CallStatus::kNonzeroExit) out.detail += " (" + std::to_string(pr.exit_code) + ")";
    return out;
  }
  const auto v = parse_score_output(pr.output);
  if (!v) {
    out.status = CallStatus::kUnparseable;
    out.detail = "unparseable output";
    return out;
  }
  out.raw = *v;
  out.value = std::clamp(*v, system.score_min, system.score_max);
  out.clamped = out.value != *v;
  return out;
}

}  // namespace detail

/// Invokes an external matcher on two template files.
inline ExternalScore match_external(const ExternalSystem& system, const std::string& a_path,
                                    const std::string& b_path) {
  return detail::score_call(system, {a_path, b_path});
}

/// Invokes an external quality scorer on one image file.
inline ExternalScore quality_external(const ExternalSystem& system, const std::string& image_path) {
  return detail::score_call(system, {image_path});
}

/// Invokes an external extractor; on success the template is at `out_path`.
inline ProcessResult extract_external(const ExternalSystem& system, const std::string& image_path,
                                      const std::string& out_path) {
  return run_process(system.executable, {image_path, out_path}, system.timeout_seconds);
}

/// Tally of external calls; the run fails when more than 10% of them did.
struct FailureTally {
  std::size_t attempted = 0;
  std::size_t failed = 0;
  std::size_t clamped = 0;

  static constexpr double kMaxFailureRate = 0.10;

  void record(bool ok, bool was_clamped = false) {
    ++attempted;
    if (!ok) ++failed;
    if (was_clamped) ++clamped;
  }
  double rate() const noexcept { return attempted == 0 ? 0.0 : static_cast<double>(failed) / attempted; }
  bool exceeded() const noexcept { return rate() > kMaxFailureRate; }
  FailureTally& operator+=(const FailureTally& o) {
    attempted += o.attempted;
    failed += o.failed;
    clamped += o.clamped;
    return *this;
  }
};

}  // namespace fpeval
