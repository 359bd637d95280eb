#include "sandbox.hpp"

#include <fcntl.h>
#include <linux/audit.h>
#include <linux/filter.h>
#include <linux/landlock.h>
#include <linux/seccomp.h>
#include <poll.h>
#include <signal.h>
#include <sys/ioctl.h>
#include <sys/prctl.h>
#include <sys/resource.h>
#include <sys/socket.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstddef>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <system_error>

#ifndef LANDLOCK_ACCESS_FS_REFER
#define LANDLOCK_ACCESS_FS_REFER (1ULL << 13)
#endif
#ifndef LANDLOCK_ACCESS_FS_TRUNCATE
#define LANDLOCK_ACCESS_FS_TRUNCATE (1ULL << 14)
#endif
#ifndef CLOSE_RANGE_CLOEXEC
#define CLOSE_RANGE_CLOEXEC (1U << 2)
#endif

#if defined(__x86_64__)
#define STAGERL_AUDIT_ARCH AUDIT_ARCH_X86_64
#elif defined(__aarch64__)
#define STAGERL_AUDIT_ARCH AUDIT_ARCH_AARCH64
#endif

namespace stagerl::detail {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

class UniqueFd {
 public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) : fd_(fd) {}
  UniqueFd(UniqueFd&& o) noexcept : fd_(o.release()) {}
  UniqueFd& operator=(UniqueFd&& o) noexcept {
    reset(o.release());
    return *this;
  }
  ~UniqueFd() { reset(); }
  int get() const { return fd_; }
  int release() { return std::exchange(fd_, -1); }
  void reset(int fd = -1) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
  }
  explicit operator bool() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
};

// ---- Landlock -------------------------------------------------------------

int landlock_abi() {
#ifdef SYS_landlock_create_ruleset
  static const int abi = [] {
    long v = syscall(SYS_landlock_create_ruleset, nullptr, 0, LANDLOCK_CREATE_RULESET_VERSION);
    return v < 0 ? 0 : static_cast<int>(v);
  }();
  return abi;
#else
  return 0;
#endif
}

// Ruleset allowing writes only beneath `workdir` and to /dev/null.
UniqueFd make_write_ruleset(const fs::path& workdir) {
#ifdef SYS_landlock_create_ruleset
  const int abi = landlock_abi();
  if (abi < 1) return {};
  std::uint64_t dir_rights = LANDLOCK_ACCESS_FS_WRITE_FILE | LANDLOCK_ACCESS_FS_REMOVE_DIR |
                             LANDLOCK_ACCESS_FS_REMOVE_FILE | LANDLOCK_ACCESS_FS_MAKE_CHAR |
                             LANDLOCK_ACCESS_FS_MAKE_DIR | LANDLOCK_ACCESS_FS_MAKE_REG |
                             LANDLOCK_ACCESS_FS_MAKE_SOCK | LANDLOCK_ACCESS_FS_MAKE_FIFO |
                             LANDLOCK_ACCESS_FS_MAKE_BLOCK | LANDLOCK_ACCESS_FS_MAKE_SYM;
  std::uint64_t file_rights = LANDLOCK_ACCESS_FS_WRITE_FILE;
  if (abi >= 2) dir_rights |= LANDLOCK_ACCESS_FS_REFER;
  if (abi >= 3) {
    dir_rights |= LANDLOCK_ACCESS_FS_TRUNCATE;
    file_rights |= LANDLOCK_ACCESS_FS_TRUNCATE;
  }
  landlock_ruleset_attr attr{};
  attr.handled_access_fs = dir_rights;
  UniqueFd ruleset(static_cast<int>(syscall(SYS_landlock_create_ruleset, &attr, sizeof(attr), 0)));
  if (!ruleset) return {};

  auto add_rule = [&](const fs::path& p, std::uint64_t rights) {
    UniqueFd target(::open(p.c_str(), O_PATH | O_CLOEXEC));
    if (!target) return false;
    landlock_path_beneath_attr rule{};
    rule.allowed_access = rights;
    rule.parent_fd = target.get();
    return syscall(SYS_landlock_add_rule, ruleset.get(), LANDLOCK_RULE_PATH_BENEATH, &rule, 0) == 0;
  };
  if (!add_rule(workdir, dir_rights)) return {};
  add_rule("/dev/null", file_rights);
  return ruleset;
#else
  (void)workdir;
  return {};
#endif
}

// ---- seccomp ---------------------------------------------------------------

constexpr std::uint32_t kWriteOpenFlags = O_WRONLY | O_RDWR | O_CREAT | O_TRUNC;

std::vector<sock_filter> build_filter() {
  std::vector<sock_filter> f;
#ifdef STAGERL_AUDIT_ARCH
  f.push_back(BPF_STMT(BPF_LD | BPF_W | BPF_ABS, offsetof(seccomp_data, arch)));
  f.push_back(BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, STAGERL_AUDIT_ARCH, 1, 0));
  f.push_back(BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_KILL_PROCESS));
  f.push_back(BPF_STMT(BPF_LD | BPF_W | BPF_ABS, offsetof(seccomp_data, nr)));
#if defined(__x86_64__)
  f.push_back(BPF_JUMP(BPF_JMP | BPF_JGE | BPF_K, 0x40000000u, 0, 1));
  f.push_back(BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_KILL_PROCESS));
#endif
  const long always[] = {
#ifdef SYS_creat
      SYS_creat,
#endif
#ifdef SYS_mkdir
      SYS_mkdir,
#endif
#ifdef SYS_rmdir
      SYS_rmdir,
#endif
#ifdef SYS_unlink
      SYS_unlink,
#endif
#ifdef SYS_rename
      SYS_rename,
#endif
#ifdef SYS_link
      SYS_link,
#endif
#ifdef SYS_symlink
      SYS_symlink,
#endif
#ifdef SYS_mknod
      SYS_mknod,
#endif
#ifdef SYS_openat2
      SYS_openat2,
#endif
      SYS_mkdirat, SYS_unlinkat, SYS_renameat, SYS_renameat2, SYS_linkat, SYS_symlinkat,
      SYS_mknodat, SYS_truncate,
  };
  for (long nr : always) {
    f.push_back(BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, static_cast<std::uint32_t>(nr), 0, 1));
    f.push_back(BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_USER_NOTIF));
  }
  auto flags_check = [&](long nr, int flag_arg) {
    f.push_back(BPF_JUMP(BPF_JMP | BPF_JEQ | BPF_K, static_cast<std::uint32_t>(nr), 0, 4));
    f.push_back(BPF_STMT(BPF_LD | BPF_W | BPF_ABS,
                         static_cast<std::uint32_t>(offsetof(seccomp_data, args) + 8 * flag_arg)));
    f.push_back(BPF_JUMP(BPF_JMP | BPF_JSET | BPF_K, kWriteOpenFlags, 0, 1));
    f.push_back(BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_USER_NOTIF));
    f.push_back(BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_ALLOW));
  };
  flags_check(SYS_openat, 2);
#ifdef SYS_open
  flags_check(SYS_open, 1);
#endif
  f.push_back(BPF_STMT(BPF_RET | BPF_K, SECCOMP_RET_ALLOW));
#endif
  return f;
}

// Which syscall arguments name paths the call would create or modify, and
// the dirfd argument each is relative to (-1: AT_FDCWD implied).
struct PathArg {
  int path_index;
  int dirfd_index;
};

std::vector<PathArg> modified_paths(long nr) {
#ifdef SYS_open
  if (nr == SYS_open) return {{0, -1}};
#endif
#ifdef SYS_creat
  if (nr == SYS_creat) return {{0, -1}};
#endif
#ifdef SYS_mkdir
  if (nr == SYS_mkdir) return {{0, -1}};
#endif
#ifdef SYS_rmdir
  if (nr == SYS_rmdir) return {{0, -1}};
#endif
#ifdef SYS_unlink
  if (nr == SYS_unlink) return {{0, -1}};
#endif
#ifdef SYS_rename
  if (nr == SYS_rename) return {{0, -1}, {1, -1}};
#endif
#ifdef SYS_link
  if (nr == SYS_link) return {{1, -1}};
#endif
#ifdef SYS_symlink
  if (nr == SYS_symlink) return {{1, -1}};
#endif
#ifdef SYS_mknod
  if (nr == SYS_mknod) return {{0, -1}};
#endif
#ifdef SYS_openat2
  if (nr == SYS_openat2) return {{1, 0}};
#endif
  if (nr == SYS_openat || nr == SYS_mkdirat || nr == SYS_unlinkat || nr == SYS_mknodat) return {{1, 0}};
  if (nr == SYS_renameat || nr == SYS_renameat2) return {{1, 0}, {3, 2}};
  if (nr == SYS_linkat) return {{3, 2}};
  if (nr == SYS_symlinkat) return {{2, 1}};
  if (nr == SYS_truncate) return {{0, -1}};
  return {};
}

std::optional<std::string> read_child_string(int mem_fd, std::uint64_t addr) {
  std::string out;
  char buf[256];
  while (out.size() < 4096) {
    ssize_t n = ::pread(mem_fd, buf, sizeof(buf), static_cast<off_t>(addr + out.size()));
    if (n <= 0) return std::nullopt;
    for (ssize_t i = 0; i < n; ++i) {
      if (buf[i] == '\0') return out;
      out.push_back(buf[i]);
    }
  }
  return std::nullopt;
}

std::string read_link(const std::string& p) {
  std::error_code ec;
  auto t = fs::read_symlink(p, ec);
  return ec ? std::string() : t.string();
}

// Path as the child would see it, with /proc/self and /dev/std* rewritten to
// the child's pid.
fs::path child_view(int pid, int dirfd, const std::string& raw) {
  const std::string proc = "/proc/" + std::to_string(pid);
  std::string p = raw;
  auto rewrite = [&](const std::string& from, const std::string& to) {
    if (p == from || p.rfind(from + "/", 0) == 0) {
      p = to + p.substr(from.size());
      return true;
    }
    return false;
  };
  rewrite("/proc/self", proc) || rewrite("/dev/stdin", proc + "/fd/0") ||
      rewrite("/dev/stdout", proc + "/fd/1") || rewrite("/dev/stderr", proc + "/fd/2") ||
      rewrite("/dev/fd", proc + "/fd");
  fs::path path(p);
  if (path.is_relative()) {
    std::string base = (dirfd == AT_FDCWD) ? read_link(proc + "/cwd")
                                           : read_link(proc + "/fd/" + std::to_string(dirfd));
    path = fs::path(base) / path;
  }
  std::error_code ec;
  fs::path canon = fs::weakly_canonical(path, ec);
  return ec ? path.lexically_normal() : canon;
}

bool is_beneath(const fs::path& p, const fs::path& root) {
  auto pi = p.begin();
  for (auto ri = root.begin(); ri != root.end(); ++ri, ++pi) {
    if (ri->empty()) continue;
    if (pi == p.end() || *pi != *ri) return false;
  }
  return true;
}

struct NotifyContext {
  int listener;
  fs::path workdir;
  bool violation = false;
  std::string violation_path;
};

void handle_notification(NotifyContext& ctx, std::vector<char>& req_buf, std::vector<char>& resp_buf) {
  std::memset(req_buf.data(), 0, req_buf.size());
  auto* req = reinterpret_cast<seccomp_notif*>(req_buf.data());
  if (ioctl(ctx.listener, SECCOMP_IOCTL_NOTIF_RECV, req) != 0) return;

  bool allowed = true;
  std::string offending;
  const int pid = static_cast<int>(req->pid);
  UniqueFd mem(::open(("/proc/" + std::to_string(pid) + "/mem").c_str(), O_RDONLY | O_CLOEXEC));
  for (const auto& arg : modified_paths(req->data.nr)) {
    std::optional<std::string> raw;
    if (mem) raw = read_child_string(mem.get(), req->data.args[arg.path_index]);
    if (!raw) {
      allowed = false;
      offending = "<unreadable path>";
      break;
    }
    int dirfd = AT_FDCWD;
    if (arg.dirfd_index >= 0) dirfd = static_cast<int>(static_cast<std::int32_t>(req->data.args[arg.dirfd_index]));
    fs::path resolved = child_view(pid, dirfd, *raw);
    if (resolved == "/dev/null" || is_beneath(resolved, ctx.workdir)) continue;
    allowed = false;
    offending = resolved.string();
    break;
  }
#ifdef SYS_openat2
  if (allowed && req->data.nr == SYS_openat2 && mem) {
    // open_how.flags is the first field; read-only opens are fine.
    std::uint64_t flags = 0;
    if (::pread(mem.get(), &flags, sizeof(flags), static_cast<off_t>(req->data.args[2])) == sizeof(flags) &&
        (flags & kWriteOpenFlags) == 0) {
      allowed = true;
    }
  }
#endif

  // The target may have died or been replaced while we inspected it.
  if (ioctl(ctx.listener, SECCOMP_IOCTL_NOTIF_ID_VALID, &req->id) != 0) return;

  std::memset(resp_buf.data(), 0, resp_buf.size());
  auto* resp = reinterpret_cast<seccomp_notif_resp*>(resp_buf.data());
  resp->id = req->id;
  if (allowed) {
    resp->flags = SECCOMP_USER_NOTIF_FLAG_CONTINUE;
  } else {
    resp->error = -EACCES;
    if (!ctx.violation) ctx.violation_path = offending;
    ctx.violation = true;
  }
  ioctl(ctx.listener, SECCOMP_IOCTL_NOTIF_SEND, resp);
}

void set_limit(int resource, rlim_t value) {
  rlimit r{value, value};
  setrlimit(resource, &r);
}

[[noreturn]] void child_fail(int status_fd, int err) {
  ssize_t ignored = ::write(status_fd, &err, sizeof(err));
  (void)ignored;
  _exit(127);
}

}  // namespace

fs::path resolve_executable(const std::string& name) {
  if (name.empty()) return {};
  auto executable = [](const fs::path& p) {
    return ::access(p.c_str(), X_OK) == 0 && !fs::is_directory(p);
  };
  if (name.find('/') != std::string::npos) return executable(name) ? fs::path(name) : fs::path();
  const char* path_env = std::getenv("PATH");
  std::string paths = path_env ? path_env : "/usr/local/bin:/usr/bin:/bin";
  std::size_t start = 0;
  while (start <= paths.size()) {
    std::size_t end = paths.find(':', start);
    if (end == std::string::npos) end = paths.size();
    fs::path dir = paths.substr(start, end - start);
    if (dir.empty()) dir = ".";
    if (executable(dir / name)) return dir / name;
    start = end + 1;
  }
  return {};
}

SandboxOutcome run_sandboxed(const SandboxRequest& req) {
  SandboxOutcome out;
  if (req.argv.empty()) {
    out.launch_error = "empty command";
    return out;
  }
  const fs::path exe = resolve_executable(req.argv[0]);
  if (exe.empty()) {
    out.launch_error = "runner '" + req.argv[0] + "' not found";
    return out;
  }

  UniqueFd in_fd(::open(req.stdin_path.c_str(), O_RDONLY | O_CLOEXEC));
  UniqueFd out_fd(::open(req.stdout_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
  UniqueFd err_fd(::open(req.stderr_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
  if (!in_fd || !out_fd || !err_fd) {
    out.launch_error = std::string("cannot open redirection files: ") + std::strerror(errno);
    return out;
  }
  int status_pipe[2];
  if (pipe2(status_pipe, O_CLOEXEC) != 0) {
    out.launch_error = std::string("pipe: ") + std::strerror(errno);
    return out;
  }
  UniqueFd status_read(status_pipe[0]), status_write(status_pipe[1]);

  UniqueFd ruleset;
  std::vector<sock_filter> filter;
  UniqueFd sock_parent, sock_child;
  if (req.confine_writes) {
    ruleset = make_write_ruleset(req.workdir);
    filter = build_filter();
    int sv[2];
    if (!filter.empty() && socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) == 0) {
      sock_parent.reset(sv[0]);
      sock_child.reset(sv[1]);
    } else {
      filter.clear();
    }
  }
  sock_fprog prog{static_cast<unsigned short>(filter.size()), filter.data()};

  std::vector<std::string> env_store = {
      "PATH=" + std::string(std::getenv("PATH") ? std::getenv("PATH") : "/usr/local/bin:/usr/bin:/bin"),
      "HOME=" + req.workdir.string(), "TMPDIR=" + req.workdir.string(), "PYTHONDONTWRITEBYTECODE=1",
      "LANG=C.UTF-8"};
  std::vector<char*> envp;
  for (auto& e : env_store) envp.push_back(e.data());
  envp.push_back(nullptr);
  std::vector<std::string> argv_store = req.argv;
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  argv.push_back(nullptr);
  const std::string exe_str = exe.string();
  const std::string workdir_str = req.workdir.string();
  const rlim_t cpu_seconds = static_cast<rlim_t>((req.time_limit_ms + 999) / 1000 + 1);
  const rlim_t address_space = static_cast<rlim_t>(req.memory_limit_mb) << 20;

  const auto started = Clock::now();
  pid_t pid = fork();
  if (pid < 0) {
    out.launch_error = std::string("fork: ") + std::strerror(errno);
    return out;
  }
  if (pid == 0) {
    // Child: only async-signal-safe calls from here on.
    setpgid(0, 0);
    prctl(PR_SET_PDEATHSIG, SIGKILL);
    if (dup2(in_fd.get(), 0) < 0 || dup2(out_fd.get(), 1) < 0 || dup2(err_fd.get(), 2) < 0) {
      child_fail(status_write.get(), errno);
    }
    syscall(SYS_close_range, 3u, ~0u, CLOSE_RANGE_CLOEXEC);
    if (chdir(workdir_str.c_str()) != 0) child_fail(status_write.get(), errno);
    set_limit(RLIMIT_CPU, cpu_seconds);
    set_limit(RLIMIT_AS, address_space);
    set_limit(RLIMIT_FSIZE, static_cast<rlim_t>(req.file_size_limit));
    set_limit(RLIMIT_CORE, 0);
    prctl(PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0);
#ifdef SYS_landlock_restrict_self
    if (ruleset) syscall(SYS_landlock_restrict_self, ruleset.get(), 0);
#endif
    if (!filter.empty()) {
      long listener = syscall(SYS_seccomp, SECCOMP_SET_MODE_FILTER, SECCOMP_FILTER_FLAG_NEW_LISTENER, &prog);
      if (listener >= 0) {
        char control[CMSG_SPACE(sizeof(int))];
        std::memset(control, 0, sizeof(control));
        char byte = 'x';
        iovec iov{&byte, 1};
        msghdr msg{};
        msg.msg_iov = &iov;
        msg.msg_iovlen = 1;
        msg.msg_control = control;
        msg.msg_controllen = sizeof(control);
        cmsghdr* cm = CMSG_FIRSTHDR(&msg);
        cm->cmsg_level = SOL_SOCKET;
        cm->cmsg_type = SCM_RIGHTS;
        cm->cmsg_len = CMSG_LEN(sizeof(int));
        int lfd = static_cast<int>(listener);
        std::memcpy(CMSG_DATA(cm), &lfd, sizeof(int));
        if (sendmsg(sock_child.get(), &msg, 0) < 0) child_fail(status_write.get(), errno);
        ::close(lfd);
      }
      ::close(sock_child.get());
    }
    execve(exe_str.c_str(), argv.data(), envp.data());
    child_fail(status_write.get(), errno);
  }

  setpgid(pid, pid);  // also done in the child; whichever runs first wins
  in_fd.reset();
  out_fd.reset();
  err_fd.reset();
  status_write.reset();
  sock_child.reset();

  NotifyContext ctx{-1, fs::weakly_canonical(req.workdir), false, {}};
  UniqueFd listener;
  if (sock_parent) {
    char byte;
    char control[CMSG_SPACE(sizeof(int))];
    iovec iov{&byte, 1};
    msghdr msg{};
    msg.msg_iov = &iov;
    msg.msg_iovlen = 1;
    msg.msg_control = control;
    msg.msg_controllen = sizeof(control);
    if (recvmsg(sock_parent.get(), &msg, MSG_CMSG_CLOEXEC) > 0) {
      cmsghdr* cm = CMSG_FIRSTHDR(&msg);
      if (cm && cm->cmsg_type == SCM_RIGHTS) {
        int fd;
        std::memcpy(&fd, CMSG_DATA(cm), sizeof(int));
        listener.reset(fd);
      }
    }
    sock_parent.reset();
  }
  ctx.listener = listener.get();

  int exec_errno = 0;
  ssize_t n;
  do {
    n = ::read(status_read.get(), &exec_errno, sizeof(exec_errno));
  } while (n < 0 && errno == EINTR);
  if (n == static_cast<ssize_t>(sizeof(exec_errno))) {
    waitpid(pid, nullptr, 0);
    out.kind = SandboxOutcome::Kind::launch_failed;
    out.launch_error = "exec of '" + exe_str + "' failed: " + std::strerror(exec_errno);
    return out;
  }

  seccomp_notif_sizes sizes{};
  if (syscall(SYS_seccomp, SECCOMP_GET_NOTIF_SIZES, 0, &sizes) != 0) {
    sizes.seccomp_notif = sizeof(seccomp_notif);
    sizes.seccomp_notif_resp = sizeof(seccomp_notif_resp);
  }
  std::vector<char> req_buf(std::max<std::size_t>(sizes.seccomp_notif, sizeof(seccomp_notif)));
  std::vector<char> resp_buf(std::max<std::size_t>(sizes.seccomp_notif_resp, sizeof(seccomp_notif_resp)));

  UniqueFd pidfd(static_cast<int>(syscall(SYS_pidfd_open, pid, 0)));
  const auto deadline = started + std::chrono::milliseconds(req.time_limit_ms);
  bool timed_out = false;
  for (;;) {
    auto now = Clock::now();
    if (now >= deadline) {
      timed_out = true;
      break;
    }
    int wait_ms = static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count()) + 1;
    pollfd fds[2];
    int nfds = 0;
    if (pidfd) {
      fds[nfds++] = {pidfd.get(), POLLIN, 0};
    } else {
      wait_ms = std::min(wait_ms, 5);
    }
    if (listener) fds[nfds++] = {listener.get(), POLLIN, 0};
    int rc = ::poll(fds, static_cast<nfds_t>(nfds), wait_ms);
    if (rc < 0 && errno != EINTR) break;
    bool exited = false;
    if (pidfd) {
      exited = rc > 0 && (fds[0].revents & POLLIN);
    } else {
      siginfo_t si{};
      exited = waitid(P_PID, static_cast<id_t>(pid), &si, WEXITED | WNOHANG | WNOWAIT) == 0 && si.si_pid == pid;
    }
    if (listener && rc > 0) {
      const pollfd& lf = fds[nfds - 1];
      if (lf.revents & POLLIN) handle_notification(ctx, req_buf, resp_buf);
      if (lf.revents & (POLLHUP | POLLERR)) listener.reset();
    }
    if (exited) break;
  }
  if (timed_out) kill(-pid, SIGKILL);

  int status = 0;
  rusage usage{};
  while (wait4(pid, &status, 0, &usage) < 0 && errno == EINTR) {
  }
  kill(-pid, SIGKILL);  // stragglers left in the process group
  out.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started).count();
  out.max_rss_kb = usage.ru_maxrss;
  out.write_violation = ctx.violation;
  out.violation_path = ctx.violation_path;
  if (timed_out) {
    out.kind = SandboxOutcome::Kind::timed_out;
  } else if (WIFSIGNALED(status)) {
    out.kind = SandboxOutcome::Kind::signaled;
    out.signal = WTERMSIG(status);
  } else {
    out.kind = SandboxOutcome::Kind::exited;
    out.exit_code = WEXITSTATUS(status);
  }
  return out;
}

}  // namespace stagerl::detail
