#pragma once

#include <cstdio>
#include <mutex>
#include <string>

#include <json.hpp>

namespace core {

// Line-delimited JSON request/response over a child process's stdin/stdout.
// One request is in flight at a time; request() is safe to call from many
// threads.
class LineService {
 public:
  // `command` is run through /bin/sh -c.
  explicit LineService(const std::string& command);
  ~LineService();

  LineService(const LineService&) = delete;
  LineService& operator=(const LineService&) = delete;

  nlohmann::json request(const nlohmann::json& req);

 private:
  int pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
  std::mutex mu_;
};

}  // namespace core
