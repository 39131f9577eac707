#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "clarq/eval.hpp"

namespace clarq {

/// Handles a POST /select body {"utterances": [{"speaker", "text"}], "top_k"}
/// and returns {"candidates": [{"cq_id", "text", "fused_score"}]}. Throws
/// ParseError or ArgumentError on a bad request.
std::string handle_select(const Engine& engine, std::string_view body);

/// HTTP front end: POST /select, GET /health. Requests are served
/// concurrently; the engine is only read.
class SelectionServer {
 public:
  explicit SelectionServer(const Engine& engine);
  ~SelectionServer();
  SelectionServer(const SelectionServer&) = delete;
  SelectionServer& operator=(const SelectionServer&) = delete;

  /// Binds to host:port (port 0 picks a free port) and returns the port.
  int bind(const std::string& host, int port);
  /// Blocks until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace clarq
