#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "sicl/backend.hpp"
#include "sicl/protocol.hpp"

namespace sicl {

/// Client for a model server speaking the JSON wire protocol.
/// Transport is HTTP (POST /v1/encode, /v1/transcribe) or newline-delimited JSON
/// exchanged with a child process over stdin/stdout.
class RemoteBackend final : public Backend {
 public:
  /// "http://host:port[/base]" or "stdio:<shell command>".
  explicit RemoteBackend(std::string url);
  ~RemoteBackend() override;

  RemoteBackend(const RemoteBackend&) = delete;
  RemoteBackend& operator=(const RemoteBackend&) = delete;

  EmbeddingSequence encode(const Waveform& w) const override;
  Transcript transcribe(const Waveform& w, const ControlSequence& control) const override;
  std::string tag() const override { return url_; }

  /// Sends one request and returns the parsed JSON reply.
  protocol::json exchange(const protocol::Request& request) const;

 private:
  class Transport;
  class HttpTransport;
  class StdioTransport;

  std::string url_;
  std::unique_ptr<Transport> transport_;
};

}  // namespace sicl
