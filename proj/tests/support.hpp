#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "clarq/corpus.hpp"

namespace testing {

inline std::filesystem::path data_dir() { return CLARQ_DATA_DIR; }

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto now = std::chrono::steady_clock::now().time_since_epoch().count();
  auto p = std::filesystem::temp_directory_path() /
           ("clarq_" + tag + "_" + std::to_string(now) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(p);
  return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline clarq::Utterance user(std::string text, std::size_t index = 0) {
  return {index, clarq::Speaker::kUser, std::move(text), false, {}};
}

inline clarq::Utterance agent(std::string text, std::size_t index = 0) {
  return {index, clarq::Speaker::kAgent, std::move(text), false, {}};
}

// Alternating USER/AGENT utterances with contiguous indices.
inline std::vector<clarq::Utterance> dialogue(const std::vector<std::string>& texts) {
  std::vector<clarq::Utterance> out;
  for (std::size_t i = 0; i < texts.size(); ++i)
    out.push_back({i, i % 2 == 0 ? clarq::Speaker::kUser : clarq::Speaker::kAgent, texts[i], false, {}});
  return out;
}

inline std::vector<clarq::Document> docs(const std::vector<std::pair<std::string, std::string>>& items) {
  std::vector<clarq::Document> out;
  for (const auto& [id, text] : items) out.push_back({id, text, "", "\n" + text});
  return out;
}

}  // namespace testing
