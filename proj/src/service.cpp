#include "core/service.hpp"

#include <csignal>
#include <sys/wait.h>
#include <unistd.h>

#include "core/error.hpp"

namespace core {

LineService::LineService(const std::string& command) {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw IoError("pipe() failed");
  pid_ = fork();
  if (pid_ < 0) throw IoError("fork() failed");
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
  to_child_ = fdopen(in_pipe[1], "w");
  from_child_ = fdopen(out_pipe[0], "r");
  if (!to_child_ || !from_child_) throw IoError("fdopen() failed");
  std::signal(SIGPIPE, SIG_IGN);
}

LineService::~LineService() {
  if (to_child_) std::fclose(to_child_);
  if (from_child_) std::fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

nlohmann::json LineService::request(const nlohmann::json& req) {
  std::lock_guard lock(mu_);
  auto line = req.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), to_child_) != line.size() || std::fflush(to_child_) != 0) {
    throw IoError("scoring service: write failed");
  }
  std::string reply;
  for (int c = std::fgetc(from_child_); c != EOF && c != '\n'; c = std::fgetc(from_child_)) {
    reply.push_back(static_cast<char>(c));
  }
  if (reply.empty()) throw IoError("scoring service: no reply");
  try {
    auto out = nlohmann::json::parse(reply);
    if (out.contains("error")) throw ValidationError("scoring service error: " + out["error"].dump());
    return out;
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("scoring service: malformed reply: ") + e.what());
  }
}

}  // namespace core
