// Command-line front end over the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clarq/clarq.h"

namespace {

struct Failure {
  clarq_status status;
};

void check(clarq_status s) {
  if (s != CLARQ_OK) {
    std::cerr << "error (" << clarq_status_name(s) << "): " << clarq_last_error() << "\n";
    throw Failure{s};
  }
}

void emit(char* s, const std::string& out_path = {}) {
  std::string text = s ? s : "";
  clarq_string_free(s);
  if (out_path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << "\n";
    throw Failure{CLARQ_E_IO};
  }
  out << text << "\n";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path << "\n";
    throw Failure{CLARQ_E_IO};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

struct EngineArgs {
  std::string index;
  std::string docs;
  std::string cq;
  std::string config;
  std::string mode;
  std::string fusion;

  void add_to(CLI::App* app) {
    app->add_option("--index", index, "Document index file")->required();
    app->add_option("--docs", docs, "Documents TSV")->required();
    app->add_option("--cq", cq, "Clarification index directory")->required();
    app->add_option("--config", config, "Pipeline config JSON file");
    app->add_option("--mode", mode, "Ranking mode")->check(CLI::IsMember({"irbase", "context", "passage", "fusion"}));
    app->add_option("--fusion", fusion, "Score normalization before CombSUM")->check(CLI::IsMember({"raw", "minmax"}));
  }

  clarq_engine* open() const {
    nlohmann::json cfg = nlohmann::json::object();
    if (!config.empty()) {
      try {
        cfg = nlohmann::json::parse(slurp(config));
      } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << config << ": " << e.what() << "\n";
        throw Failure{CLARQ_E_PARSE};
      }
    }
    // Command-line mode and fusion override the file.
    if (!mode.empty()) cfg["mode"] = mode;
    if (!fusion.empty()) cfg["fusion"] = fusion;
    const auto text = cfg.dump();
    clarq_engine* e = nullptr;
    check(clarq_engine_open(index.c_str(), docs.c_str(), cq.c_str(), text.c_str(), &e));
    return e;
  }
};

std::vector<size_t> parse_ks(const std::string& s) {
  std::vector<size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<size_t>(v));
    } catch (const std::exception&) {
      std::cerr << "error: bad k value '" << item << "'\n";
      throw Failure{CLARQ_E_ARGUMENT};
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clarification question selection for conversational search"};
  app.set_version_flag("--version", clarq_version());
  app.require_subcommand(1);

  // index build / stats
  auto* index = app.add_subcommand("index", "Document index");
  index->require_subcommand(1);
  std::string docs, field = "text", out, conversations, in;
  auto* index_build = index->add_subcommand("build", "Build a document index");
  index_build->add_option("--docs", docs, "Documents TSV (id, text)")->required();
  index_build->add_option("--field", field, "Indexed field")
      ->check(CLI::IsMember({"text", "anchor", "anchor_and_text"}));
  index_build->add_option("--out", out, "Output index file")->required();
  index_build->add_option("--conversations", conversations, "Dataset whose training split supplies anchors");
  auto* index_stats = index->add_subcommand("stats", "Print index statistics");
  index_stats->add_option("--in", in, "Index file")->required();

  // query weigh
  auto* query = app.add_subcommand("query", "Conversational query");
  query->require_subcommand(1);
  std::string conversation, index_path;
  auto* weigh = query->add_subcommand("weigh", "Print term weights for a context");
  weigh->add_option("--conversation", conversation, "Context JSON file")->required();
  weigh->add_option("--index", index_path, "Document index file")->required();

  // passages
  std::size_t top = 10;
  auto* passages = app.add_subcommand("passages", "Rank passages for a context");
  passages->add_option("--conversation", conversation, "Context JSON file")->required();
  passages->add_option("--index", index_path, "Document index file")->required();
  passages->add_option("--docs", docs, "Documents TSV")->required();
  passages->add_option("--top", top, "Number of passages");

  // cq index / mine
  auto* cq = app.add_subcommand("cq", "Clarification questions");
  cq->require_subcommand(1);
  std::string pool, logs, dataset_out;
  auto* cq_index = cq->add_subcommand("index", "Build the clarification index");
  cq_index->add_option("--pool", pool, "Pool TSV (id, text)")->required();
  cq_index->add_option("--out", out, "Output directory")->required();
  auto* cq_mine = cq->add_subcommand("mine", "Mine clarification questions from support logs");
  cq_mine->add_option("--logs", logs, "Support logs JSONL")->required();
  cq_mine->add_option("--docs", docs, "Documents TSV")->required();
  cq_mine->add_option("--index", index_path, "Document index file")->required();
  cq_mine->add_option("--out", out, "Output pool TSV")->required();
  cq_mine->add_option("--dataset", dataset_out, "Also write the labelled dataset JSON");

  // select
  EngineArgs select_args;
  std::string context_file;
  std::size_t top_k = 30;
  auto* select = app.add_subcommand("select", "Rank clarification questions for a context");
  select_args.add_to(select);
  select->add_option("--context", context_file, "Context JSON file")->required();
  select->add_option("--top", top_k, "Number of questions");

  // eval
  EngineArgs eval_args;
  std::string dataset, split = "dev", ks = "5,10,20,30", report_out;
  auto* eval = app.add_subcommand("eval", "Recall@k evaluation");
  eval_args.add_to(eval);
  eval->add_option("--dataset", dataset, "Dataset directory, JSONL or JSON")->required();
  eval->add_option("--split", split, "Split")->check(CLI::IsMember({"train", "dev", "test"}));
  eval->add_option("--k", ks, "Comma-separated cutoffs");
  eval->add_option("--out", report_out, "Write the report here instead of stdout");

  // serve
  EngineArgs serve_args;
  std::string host = "127.0.0.1";
  int port = 8700;
  auto* serve = app.add_subcommand("serve", "Serve POST /select and GET /health");
  serve_args.add_to(serve);
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");

  // triplets
  std::string kind = "context";
  std::uint64_t seed = 13;
  std::size_t negatives = 4;
  auto* triplets = app.add_subcommand("triplets", "Generate training triplets");
  triplets->add_option("--dataset", dataset, "Dataset directory, JSONL or JSON")->required();
  triplets->add_option("--kind", kind, "Triplet kind")->check(CLI::IsMember({"context", "passage"}));
  triplets->add_option("--docs", docs, "Documents TSV");
  triplets->add_option("--index", index_path, "Document index file (passage triplets)");
  triplets->add_option("--seed", seed, "Random seed");
  triplets->add_option("--negatives", negatives, "Negatives per positive");
  triplets->add_option("--out", out, "Output JSONL")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    char* result = nullptr;
    if (index_build->parsed()) {
      check(clarq_index_build(docs.c_str(), field.c_str(), opt(conversations), out.c_str()));
    } else if (index_stats->parsed()) {
      check(clarq_index_stats(in.c_str(), &result));
      emit(result);
    } else if (weigh->parsed()) {
      const auto ctx = slurp(conversation);
      check(clarq_weigh_context(index_path.c_str(), ctx.c_str(), &result));
      emit(result);
    } else if (passages->parsed()) {
      const auto ctx = slurp(conversation);
      check(clarq_passages(index_path.c_str(), docs.c_str(), ctx.c_str(), top, &result));
      emit(result);
    } else if (cq_index->parsed()) {
      check(clarq_cq_index_build(pool.c_str(), out.c_str()));
    } else if (cq_mine->parsed()) {
      check(clarq_mine(logs.c_str(), docs.c_str(), index_path.c_str(), out.c_str(), opt(dataset_out), &result));
      emit(result);
    } else if (select->parsed()) {
      const auto ctx = slurp(context_file);
      clarq_engine* e = select_args.open();
      const auto s = clarq_engine_select(e, ctx.c_str(), top_k, &result);
      clarq_engine_close(e);
      check(s);
      emit(result);
    } else if (eval->parsed()) {
      const auto k = parse_ks(ks);
      clarq_engine* e = eval_args.open();
      const auto s = clarq_engine_evaluate(e, dataset.c_str(), split.c_str(), k.data(), k.size(), &result);
      clarq_engine_close(e);
      check(s);
      emit(result, report_out);
    } else if (serve->parsed()) {
      clarq_engine* e = serve_args.open();
      std::cerr << "listening on " << host << ":" << port << "\n";
      const auto s = clarq_engine_serve(e, host.c_str(), port);
      clarq_engine_close(e);
      check(s);
    } else if (triplets->parsed()) {
      check(clarq_triplets(dataset.c_str(), opt(docs), opt(index_path), kind.c_str(), seed, negatives, out.c_str(),
                           &result));
      emit(result);
    }
  } catch (const Failure& f) {
    return static_cast<int>(f.status) == 100 ? 2 : 1;
  }
  return 0;
}
