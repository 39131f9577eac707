#include "clarq/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include "clarq/errors.hpp"

namespace clarq {

using nlohmann::json;

std::string handle_select(const Engine& engine, std::string_view body) {
  std::vector<Utterance> context;
  std::size_t top_k = 30;
  try {
    const auto j = json::parse(body);
    for (const auto& u : j.at("utterances")) {
      Utterance utt;
      utt.index = context.size();
      utt.speaker = speaker_from_string(u.at("speaker").get<std::string>());
      utt.text = u.at("text").get<std::string>();
      context.push_back(std::move(utt));
    }
    if (j.contains("top_k")) top_k = j.at("top_k").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ParseError("select request", 0, e.what());
  }
  if (context.empty()) throw ArgumentError("select needs at least one utterance");
  if (top_k == 0) throw ArgumentError("top_k must be >= 1");

  const auto ranked = engine.run_pipeline(context);
  json out;
  auto& arr = out["candidates"] = json::array();
  for (std::size_t i = 0; i < std::min(top_k, ranked.size()); ++i) {
    const auto* q = engine.cq_index().find(ranked[i].cq_id);
    arr.push_back({{"cq_id", ranked[i].cq_id}, {"text", q ? q->text : ""}, {"fused_score", *ranked[i].fused_score}});
  }
  return out.dump();
}

struct SelectionServer::Impl {
  const Engine& engine;
  httplib::Server server;
};

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kArgument:
    case ErrorCode::kParse:
    case ErrorCode::kValidation:
    case ErrorCode::kEmptyQuery: return 400;
    case ErrorCode::kTransport:
    case ErrorCode::kProtocol: return 502;
    default: return 500;
  }
}

}  // namespace

SelectionServer::SelectionServer(const Engine& engine) : impl_(new Impl{engine, {}}) {
  impl_->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  impl_->server.Post("/select", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      res.set_content(handle_select(impl_->engine, req.body), "application/json");
    } catch (const Error& e) {
      res.status = status_for(e.code());
      res.set_content(json{{"error", e.what()}, {"code", static_cast<int>(e.code())}}.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

SelectionServer::~SelectionServer() { stop(); }

int SelectionServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw IoError("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void SelectionServer::listen() { impl_->server.listen_after_bind(); }

void SelectionServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace clarq
