// lightne: convert, embed, eval and tune from the command line.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <new>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lne/errors.hpp"
#include "lne/graph_io.hpp"
#include "lne/parallel.hpp"
#include "lne/pipeline.hpp"
#include "lne/tuner.hpp"

namespace {

using nlohmann::json;

struct Globals {
  std::optional<std::uint32_t> threads;
  std::optional<std::uint64_t> seed;
  std::string config;
};

int fail(const std::string& kind, const std::string& message, json extra = json::object(), int code = 1) {
  json j{{"error", kind}, {"message", message}};
  j.update(extra);
  std::cerr << j.dump() << std::endl;
  return code;
}

void apply_threads(const Globals& g, const lne::RunConfig* cfg) {
  if (g.threads) {
    lne::set_num_workers(*g.threads);
  } else if (cfg != nullptr && cfg->threads > 0) {
    lne::set_num_workers(cfg->threads);
  }
}

lne::RunConfig load_config(const Globals& g) {
  if (g.config.empty()) throw lne::InvalidArgument("--config is required");
  lne::RunConfig cfg = lne::load_run_config(g.config);
  if (g.seed) cfg.params.seed = *g.seed;
  cfg.validate();
  apply_threads(g, &cfg);
  return cfg;
}

int cmd_convert(const Globals& g, const std::string& in, const std::string& out, bool compress, bool remap) {
  apply_threads(g, nullptr);
  lne::EdgeList raw = lne::read_edge_list(in);
  lne::EdgeList edges = lne::normalize_edges(raw, remap);
  lne::Graph graph = lne::build_graph(edges, compress);
  lne::write_graph(graph, out);
  const double raw_bytes = 8.0 * static_cast<double>(graph.m());
  json j{{"n", graph.n()},
         {"m", graph.m()},
         {"compressed", graph.compressed()},
         {"bytes", graph.adjacency_bytes()},
         {"compression_ratio", graph.adjacency_bytes() > 0 ? raw_bytes / static_cast<double>(graph.adjacency_bytes()) : 1.0}};
  std::cout << j.dump() << std::endl;
  return 0;
}

int cmd_embed(const Globals& g) {
  lne::RunConfig cfg = load_config(g);
  if (cfg.embedding_path.empty()) throw lne::InvalidArgument("embedding_path is required");
  lne::Graph graph = lne::load_graph(cfg.graph_path, cfg.compress);
  auto run = lne::run_pipeline(cfg, graph, false);
  lne::write_embedding(run.embed.embedding, cfg.embedding_path);
  run.embed.stats["embedding_path"] = cfg.embedding_path;
  if (!cfg.stats_path.empty()) lne::save_json(run.embed.stats, cfg.stats_path);
  std::cout << run.embed.stats.dump() << std::endl;
  return 0;
}

int cmd_eval(const Globals& g, std::string embedding_path) {
  lne::RunConfig cfg = load_config(g);
  if (embedding_path.empty()) embedding_path = cfg.embedding_path;
  if (embedding_path.empty()) throw lne::InvalidArgument("no embedding path given");
  lne::Graph graph = lne::load_graph(cfg.graph_path, cfg.compress);
  lne::Embedding emb = lne::read_embedding(embedding_path);
  lne::Metrics m = lne::evaluate_task(emb, graph, cfg);
  std::cout << m.to_json().dump() << std::endl;
  return 0;
}

int cmd_tune(const Globals& g, std::size_t budget, const std::string& best_path, const std::string& log_path,
             const lne::SearchSpace& space_in) {
  lne::RunConfig cfg = load_config(g);
  if (budget < 1) throw lne::InvalidArgument("budget must be >= 1");
  if (cfg.task.type == "none") throw lne::InvalidArgument("tuning requires a classify or linkpred task");
  lne::Graph graph = lne::load_graph(cfg.graph_path, cfg.compress);
  lne::SearchSpace space = space_in;
  space.T = cfg.params.T;
  auto objective = [&](const lne::HyperParams& h) {
    lne::RunConfig c = cfg;
    c.params = h;
    c.sparsifier_dump_path.clear();
    auto run = lne::run_pipeline(c, graph, true);
    return lne::task_objective(*run.metrics, c.task);
  };
  auto res = lne::tune(space, objective, budget, cfg.params.seed, cfg.params, graph.m());
  {
    auto os = lne::io::open_out(log_path);
    lne::write_trial_log(res.trials, os);
  }
  lne::RunConfig best = cfg;
  best.params = res.best;
  lne::save_json(best, best_path);
  json j{{"best_objective", res.best_objective}, {"trials", res.trials.size()}, {"best_config", best_path},
         {"trial_log", log_path}};
  std::cout << j.dump() << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lightne: sparsified matrix-factorization network embedding"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads (overrides LIGHTNE_THREADS)")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--config", g.config, "RunConfig JSON file");

  std::string in, out;
  bool no_compress = false, remap = false;
  auto* convert = app.add_subcommand("convert", "Text edge list to LNE2GRPH binary");
  convert->add_option("input", in, "Edge list")->required();
  convert->add_option("output", out, "Graph file")->required();
  convert->add_flag("--no-compress", no_compress, "Store uncompressed adjacency");
  convert->add_flag("--remap", remap, "Compact vertex ids to 0..n-1");

  auto* embed = app.add_subcommand("embed", "Run sparsifier, SVD and propagation");

  std::string emb_path;
  auto* eval = app.add_subcommand("eval", "Evaluate an embedding on the config task");
  eval->add_option("--embedding", emb_path, "Embedding file (defaults to embedding_path)");

  std::size_t budget = 20;
  std::string best_path = "best_config.json", log_path = "trials.jsonl";
  lne::SearchSpace space;
  auto* tune = app.add_subcommand("tune", "Hyperparameter search");
  tune->add_option("--budget", budget, "Trial count");
  tune->add_option("--best", best_path, "Output path of the best RunConfig");
  tune->add_option("--log", log_path, "Output path of the JSON-lines trial log");
  tune->add_option("--M-lo", space.M_lo);
  tune->add_option("--M-hi", space.M_hi);

  // Global flags are accepted after the subcommand as well.
  for (auto* sub : {convert, embed, eval, tune}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), json::object(), 2);
  }

  try {
    if (*convert) return cmd_convert(g, in, out, !no_compress, remap);
    if (*embed) return cmd_embed(g);
    if (*eval) return cmd_eval(g, emb_path);
    if (*tune) return cmd_tune(g, budget, best_path, log_path, space);
  } catch (const lne::TableFullError& e) {
    return fail("table_full", e.what(),
                {{"capacity", e.capacity()}, {"suggested_table_capacity_factor", e.suggested_factor()}}, 4);
  } catch (const lne::ResourceError& e) {
    return fail("out_of_memory", e.what(), {{"required_bytes", e.required_bytes()}}, 4);
  } catch (const std::bad_alloc& e) {
    return fail("out_of_memory", e.what(), json::object(), 4);
  } catch (const lne::FormatError& e) {
    return fail("format", e.what(), json::object(), 3);
  } catch (const lne::InvalidArgument& e) {
    return fail("invalid_argument", e.what(), json::object(), 2);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), json::object(), 1);
  }
  return 1;
}
