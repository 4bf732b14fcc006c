#include <csignal>
#include <cstdio>
#include <memory>
#include <mutex>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "lftkit/systems.hpp"

namespace lftkit::systems {

namespace {

using nlohmann::json;

class PluginProcess {
 public:
  explicit PluginProcess(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
      throw Error("plugin: pipe() failed");
    }
    pid_ = fork();
    if (pid_ < 0) throw Error("plugin: fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    // A dead child must surface as a read error, not SIGPIPE.
    std::signal(SIGPIPE, SIG_IGN);
    in_ = fdopen(to_child[1], "w");
    out_ = fdopen(from_child[0], "r");
    if (in_ == nullptr || out_ == nullptr) throw Error("plugin: fdopen() failed");
  }

  PluginProcess(const PluginProcess&) = delete;
  PluginProcess& operator=(const PluginProcess&) = delete;

  ~PluginProcess() {
    if (in_ != nullptr) fclose(in_);
    if (out_ != nullptr) fclose(out_);
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  json request(const json& message) {
    std::lock_guard lock(mutex_);
    const std::string line = message.dump() + "\n";
    if (std::fputs(line.c_str(), in_) < 0 || std::fflush(in_) != 0) {
      throw Error("plugin: write to subprocess failed");
    }
    char* buffer = nullptr;
    std::size_t capacity = 0;
    const auto length = getline(&buffer, &capacity, out_);
    std::unique_ptr<char, decltype(&std::free)> guard(buffer, &std::free);
    if (length <= 0) throw Error("plugin: subprocess closed its output");
    json reply = json::parse(std::string(buffer, static_cast<std::size_t>(length)));
    if (reply.contains("error")) {
      throw Error("plugin: " + reply["error"].get<std::string>());
    }
    return reply;
  }

 private:
  pid_t pid_ = -1;
  FILE* in_ = nullptr;
  FILE* out_ = nullptr;
  std::mutex mutex_;
};

json to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector from_json(const json& j, int expected, const char* what) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<int>(values.size()) != expected) {
    throw Error(std::string("plugin: wrong length for ") + what);
  }
  return Eigen::Map<const Vector>(values.data(), expected);
}

}  // namespace

NonlinearSystem plugin(const std::string& command) {
  auto process = std::make_shared<PluginProcess>(command);
  const json info = process->request({{"op", "describe"}});
  NonlinearSystem sys;
  sys.name = info.value("name", std::string("plugin"));
  sys.state_dim = info.at("n").get<int>();
  sys.input_dim = info.at("n_u").get<int>();
  sys.output_dim = info.at("n_y").get<int>();
  if (info.contains("equation_variables")) {
    sys.equation_variables = info["equation_variables"].get<std::vector<std::vector<int>>>();
  }
  const int n = sys.state_dim;
  const int ny = sys.output_dim;
  sys.f = [process, n](const Vector& x, const Vector& u) {
    const json reply = process->request({{"op", "f"}, {"x", to_json(x)}, {"u", to_json(u)}});
    return from_json(reply.at("dx"), n, "dx");
  };
  sys.h = [process, ny](const Vector& x, const Vector& u) {
    const json reply = process->request({{"op", "h"}, {"x", to_json(x)}, {"u", to_json(u)}});
    return from_json(reply.at("y"), ny, "y");
  };
  for (int i = 0; i < sys.state_dim; ++i) sys.state_labels.push_back("x" + std::to_string(i + 1));
  for (int i = 0; i < sys.input_dim; ++i) sys.input_labels.push_back("u" + std::to_string(i + 1));
  return sys;
}

}  // namespace lftkit::systems
