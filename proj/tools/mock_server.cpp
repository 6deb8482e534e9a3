// sicl-mock-server: serves the mock backend over the wire protocol.
//   sicl-mock-server --stdio            newline-delimited JSON on stdin/stdout
//   sicl-mock-server --port 8080        HTTP POST /v1/encode, /v1/transcribe

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "sicl/mock_backend.hpp"
#include "sicl/protocol.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that clashes with Eigen internals.
#include <httplib.h>

int main(int argc, char** argv) {
  CLI::App app{"Mock model server for the sicl wire protocol"};
  bool stdio = false;
  int port = 8080;
  std::string host = "127.0.0.1";
  app.add_flag("--stdio", stdio, "Serve newline-delimited JSON over stdin/stdout");
  app.add_option("--port", port, "HTTP port")->capture_default_str();
  app.add_option("--host", host, "HTTP bind address")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const sicl::MockBackend backend;
  if (stdio) {
    std::string line;
    while (std::getline(std::cin, line)) {
      std::cout << sicl::protocol::handle(backend, line) << '\n' << std::flush;
    }
    return 0;
  }

  httplib::Server server;
  const auto serve = [&](const httplib::Request& req, httplib::Response& res) {
    res.set_content(sicl::protocol::handle(backend, req.body), "application/json");
  };
  server.Post("/v1/encode", serve);
  server.Post("/v1/transcribe", serve);
  std::cerr << "listening on " << host << ":" << port << "\n";
  return server.listen(host, port) ? 0 : 1;
}
