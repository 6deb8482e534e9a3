#include "sicl/remote_backend.hpp"

#include <httplib.h>

#include <csignal>
#include <cstdio>
#include <sys/wait.h>
#include <unistd.h>

#include "sicl/error.hpp"
#include "sicl/mock_backend.hpp"

namespace sicl {

class RemoteBackend::Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string send(std::string_view op, const std::string& body) = 0;
};

class RemoteBackend::HttpTransport final : public Transport {
 public:
  explicit HttpTransport(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    base_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!base_.empty() && base_.back() == '/') base_.pop_back();
  }

  std::string send(std::string_view op, const std::string& body) override {
    // One client per call keeps concurrent requests independent.
    httplib::Client client(origin_);
    client.set_connection_timeout(10);
    client.set_read_timeout(600);
    client.set_write_timeout(600);
    const std::string path = base_ + "/v1/" + std::string(op);
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      throw Error(ErrorCode::BackendUnavailable,
                  origin_ + path + ": " + httplib::to_string(res.error()));
    }
    return res->body;
  }

 private:
  std::string origin_;
  std::string base_;
};

class RemoteBackend::StdioTransport final : public Transport {
 public:
  explicit StdioTransport(const std::string& command) {
    std::signal(SIGPIPE, SIG_IGN);
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw Error(ErrorCode::BackendUnavailable, "pipe() failed");
    pid_ = fork();
    if (pid_ < 0) throw Error(ErrorCode::BackendUnavailable, "fork() failed");
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
    in_ = fdopen(to_child[1], "w");
    out_ = fdopen(from_child[0], "r");
    if (in_ == nullptr || out_ == nullptr) throw Error(ErrorCode::BackendUnavailable, "fdopen() failed");
  }

  ~StdioTransport() override {
    if (in_ != nullptr) std::fclose(in_);
    if (out_ != nullptr) std::fclose(out_);
    if (pid_ > 0) waitpid(pid_, nullptr, 0);
  }

  std::string send(std::string_view, const std::string& body) override {
    std::lock_guard lock(mutex_);
    if (std::fwrite(body.data(), 1, body.size(), in_) != body.size() || std::fputc('\n', in_) == EOF ||
        std::fflush(in_) != 0) {
      throw Error(ErrorCode::BackendUnavailable, "backend process closed its input");
    }
    std::string line;
    for (int c = std::fgetc(out_); c != '\n'; c = std::fgetc(out_)) {
      if (c == EOF) throw Error(ErrorCode::BackendUnavailable, "backend process closed its output");
      line.push_back(static_cast<char>(c));
    }
    return line;
  }

 private:
  std::mutex mutex_;
  pid_t pid_ = -1;
  FILE* in_ = nullptr;
  FILE* out_ = nullptr;
};

RemoteBackend::RemoteBackend(std::string url) : url_(std::move(url)) {
  if (url_.starts_with("http://")) {
    transport_ = std::make_unique<HttpTransport>(url_);
  } else if (url_.starts_with("stdio:")) {
    transport_ = std::make_unique<StdioTransport>(url_.substr(6));
  } else {
    throw Error(ErrorCode::ConfigError, "unsupported backend url '" + url_ + "'");
  }
}

RemoteBackend::~RemoteBackend() = default;

protocol::json RemoteBackend::exchange(const protocol::Request& request) const {
  const std::string op = std::holds_alternative<protocol::EncodeRequest>(request) ? "encode" : "transcribe";
  const std::string reply = transport_->send(op, protocol::to_json(request).dump());
  try {
    return protocol::json::parse(reply);
  } catch (const protocol::json::exception& e) {
    throw Error(ErrorCode::ProtocolError, std::string("unparseable reply: ") + e.what());
  }
}

EmbeddingSequence RemoteBackend::encode(const Waveform& w) const {
  protocol::EncodeRequest req{w.sample_rate, {w.samples.data(), w.samples.data() + w.size()}};
  return protocol::to_embedding(protocol::parse_encode_response(exchange(req)));
}

Transcript RemoteBackend::transcribe(const Waveform& w, const ControlSequence& control) const {
  protocol::TranscribeRequest req{w.sample_rate, {w.samples.data(), w.samples.data() + w.size()}, control};
  auto resp = protocol::parse_transcribe_response(exchange(req));
  // Servers are required to strip the forced prefix; enforce it on this side as well.
  if (control.prefix && !control.prefix->empty() && resp.text.starts_with(*control.prefix))
    resp.text.erase(0, control.prefix->size());
  return {std::move(resp.text), std::move(resp.applied_control)};
}

BackendPtr make_backend(std::string_view spec) {
  if (spec == "mock") return std::make_shared<MockBackend>();
  return std::make_shared<RemoteBackend>(std::string(spec));
}

std::string backend_spec_from_env(std::string_view fallback) {
  const char* url = std::getenv("SICL_BACKEND_URL");
  if (url != nullptr && *url != '\0') return url;
  return std::string(fallback);
}

}  // namespace sicl
