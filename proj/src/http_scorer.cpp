#include <thread>

#include <httplib.h>

#include "clarq/errors.hpp"
#include "clarq/rerank.hpp"

namespace clarq {

HttpScorer::HttpScorer(HttpScorerConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.retries < 0) throw ArgumentError("scorer retries must be >= 0");
}

std::vector<double> HttpScorer::score(ModelId model, std::span<const ScorePair> pairs) const {
  if (pairs.empty()) return {};
  const auto body = encode_score_request(model, pairs);

  // One client per call keeps concurrent batches independent.
  httplib::Client client(cfg_.base_url);
  client.set_connection_timeout(cfg_.connect_timeout);
  client.set_read_timeout(cfg_.read_timeout);
  client.set_write_timeout(cfg_.read_timeout);

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
    auto res = client.Post("/score", body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw ProtocolError("scorer at " + cfg_.base_url + " rejected request: HTTP " + std::to_string(res->status) +
                          " " + res->body);
    return decode_score_response(res->body, pairs.size());
  }
  throw TransportError("scorer at " + cfg_.base_url + " unreachable after " + std::to_string(cfg_.retries + 1) +
                       " attempts: " + last_error);
}

}  // namespace clarq
