#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"
#include "lne/errors.hpp"
#include "lne/evaluation.hpp"
#include "lne/graph.hpp"
#include "lne/graph_io.hpp"
#include "lne/hyperparams.hpp"
#include "lne/parallel.hpp"
#include "lne/propagation.hpp"
#include "lne/randsvd.hpp"
#include "lne/sparsifier.hpp"
#include "lne/tuner.hpp"

namespace lne {

struct TaskSpec {
  std::string type = "none";  // classify | linkpred | none
  std::string labels_path;
  double train_ratio = 0.1;
  std::uint32_t repeats = 10;
  double lambda = 1.0;
  double holdout_ratio = 0.01;
  std::uint32_t negatives = 1000;

  void validate() const {
    if (type != "classify" && type != "linkpred" && type != "none") {
      throw InvalidArgument("task.type must be classify, linkpred or none");
    }
    if (type == "classify" && labels_path.empty()) throw InvalidArgument("task.labels is required for classify");
  }
};

inline void to_json(nlohmann::json& j, const TaskSpec& t) {
  j = nlohmann::json{{"type", t.type},           {"labels", t.labels_path},     {"train_ratio", t.train_ratio},
                     {"repeats", t.repeats},     {"lambda", t.lambda},          {"holdout_ratio", t.holdout_ratio},
                     {"negatives", t.negatives}};
}

inline void from_json(const nlohmann::json& j, TaskSpec& t) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(field);
  };
  get("type", t.type);
  get("labels", t.labels_path);
  get("train_ratio", t.train_ratio);
  get("repeats", t.repeats);
  get("lambda", t.lambda);
  get("holdout_ratio", t.holdout_ratio);
  get("negatives", t.negatives);
}

/// One pipeline run. The JSON form is a single object whose keys are the
/// field names below plus the HyperParams keys at top level.
struct RunConfig {
  std::string graph_path;
  std::string embedding_path;
  std::string stats_path;
  std::string sparsifier_dump_path;
  HyperParams params;
  TaskSpec task;
  std::uint32_t threads = 0;  // 0 = default
  bool compress = true;

  /// `check_paths` also requires input files to exist.
  void validate(bool check_paths = true) const {
    if (graph_path.empty()) throw InvalidArgument("graph_path is required");
    params.validate();
    task.validate();
    if (check_paths) {
      if (!std::filesystem::exists(graph_path)) throw InvalidArgument("graph_path does not exist: " + graph_path);
      if (!task.labels_path.empty() && !std::filesystem::exists(task.labels_path)) {
        throw InvalidArgument("task.labels does not exist: " + task.labels_path);
      }
    }
  }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = c.params;
  j["graph_path"] = c.graph_path;
  j["embedding_path"] = c.embedding_path;
  j["stats_path"] = c.stats_path;
  if (!c.sparsifier_dump_path.empty()) j["sparsifier_dump_path"] = c.sparsifier_dump_path;
  j["task"] = c.task;
  j["threads"] = c.threads;
  j["compress"] = c.compress;
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
  from_json(j, c.params);
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(field);
  };
  get("graph_path", c.graph_path);
  get("embedding_path", c.embedding_path);
  get("stats_path", c.stats_path);
  get("sparsifier_dump_path", c.sparsifier_dump_path);
  get("task", c.task);
  get("threads", c.threads);
  get("compress", c.compress);
}

inline RunConfig load_run_config(const std::string& path) {
  auto is = io::open_in(path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  try {
    return j.get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

inline void save_json(const nlohmann::json& j, const std::string& path) {
  auto os = io::open_out(path);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("write failed: " + path);
}

struct EmbedOutput {
  Embedding embedding;
  nlohmann::json stats;
};

/// Sparsifier, randomized SVD and propagation on `g`. Propagation is
/// skipped when k < 2. `dump`, when set, receives the sparsifier table.
inline EmbedOutput embed_graph(const Graph& g, const HyperParams& h, std::ostream* dump = nullptr) {
  h.validate();
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };
  EmbedOutput out;
  SamplingParams sp = h.sampling(g.n(), g.m());
  SvdParams svd = h.svd();
  svd.validate(g.n());

  auto t0 = clock::now();
  Sparsifier sparsifier = sample_sparsifier(g, sp);
  SparseMatrix netmf = assemble_netmf(sparsifier.table, g, sp);
  auto t1 = clock::now();
  if (dump != nullptr) sparsifier.table.dump(*dump);
  SvdFactors f = fast_randomized_svd(netmf, svd);
  Embedding e = embedding_from_factors(f);
  auto t2 = clock::now();
  double prop_s = 0;
  if (h.k >= 2) {
    e = chebyshev_propagate(g, e, h.propagation());
    prop_s = seconds(t2, clock::now());
  }
  out.embedding = std::move(e);

  std::vector<double> sigma(f.Sigma.data(), f.Sigma.data() + f.Sigma.size());
  out.stats = {{"n", g.n()},
               {"m", g.m()},
               {"threads", num_workers()},
               {"M", sp.M},
               {"draws", sparsifier.draws},
               {"kept", sparsifier.kept},
               {"distinct_entries", sparsifier.table.size()},
               {"table_capacity", sparsifier.table.capacity()},
               {"nnz", netmf.nnz()},
               {"sigma", sigma},
               {"time_s",
                {{"sparsifier", seconds(t0, t1)}, {"svd", seconds(t1, t2)}, {"propagation", prop_s}}}};
  return out;
}

/// Residual graph for link prediction; split seed derives from the config seed.
inline LinkPredSplit link_split_for(const Graph& g, const RunConfig& c) {
  return make_link_split(g, c.task.holdout_ratio, c.params.seed);
}

/// Metrics of `emb` on the configured task. For linkpred, `emb` must have
/// been trained on link_split_for(g, c).train.
inline Metrics evaluate_task(const Embedding& emb, const Graph& g, const RunConfig& c) {
  c.task.validate();
  if (emb.n() != g.n()) {
    throw InvalidArgument("embedding has " + std::to_string(emb.n()) + " rows but graph has " +
                          std::to_string(g.n()) + " vertices");
  }
  Metrics m;
  if (c.task.type == "classify") {
    Labels labels = read_labels(c.task.labels_path, g.n());
    ClassificationOptions opt;
    opt.train_ratio = c.task.train_ratio;
    opt.repeats = c.task.repeats;
    opt.lambda = c.task.lambda;
    opt.seed = c.params.seed;
    auto r = evaluate_classification(emb, labels, opt);
    m.micro_f1 = r.micro_f1;
    m.macro_f1 = r.macro_f1;
  } else if (c.task.type == "linkpred") {
    auto split = link_split_for(g, c);
    m = link_pred_score(emb, split.positives, g, c.task.negatives, c.params.seed);
  } else {
    throw InvalidArgument("task.type none has no metrics");
  }
  return m;
}

/// Tuning objective: macro-F1 for classification, HITS@10 for link prediction.
inline double task_objective(const Metrics& m, const TaskSpec& t) {
  return t.type == "classify" ? m.macro_f1 : m.hits10;
}

struct RunOutput {
  EmbedOutput embed;
  std::optional<Metrics> metrics;
};

/// Full run: load, optionally split, embed, optionally evaluate.
inline RunOutput run_pipeline(const RunConfig& c, const Graph& g, bool evaluate) {
  RunOutput out;
  std::ofstream dump;
  if (!c.sparsifier_dump_path.empty()) dump = io::open_out(c.sparsifier_dump_path);
  std::ostream* dp = c.sparsifier_dump_path.empty() ? nullptr : &dump;
  if (c.task.type == "linkpred") {
    auto split = link_split_for(g, c);
    out.embed = embed_graph(split.train, c.params, dp);
    out.embed.stats["heldout_edges"] = split.positives.size();
  } else {
    out.embed = embed_graph(g, c.params, dp);
  }
  if (evaluate && c.task.type != "none") out.metrics = evaluate_task(out.embed.embedding, g, c);
  return out;
}

}  // namespace lne
