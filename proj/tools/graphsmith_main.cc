// graphsmith: generate, coverage, fuzz, replay, stats.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "graphsmith/errors.h"
#include "graphsmith/generator.h"
#include "graphsmith/harness.h"
#include "graphsmith/metrics.h"
#include "graphsmith/serialize.h"

namespace fs = std::filesystem;
using namespace graphsmith;

namespace {

constexpr int kUsage = 1;
constexpr int kInfra = 2;

struct Options {
  std::string strategy = "isra";
  uint64_t num = 100;
  int64_t min_ops = 1;
  int64_t max_ops = 10;
  uint64_t seed = 0;
  double picking_rate = 0.97;
  int64_t max_dim = 5;
  int64_t max_len = 5;
  int retry_limit = 10;
  std::vector<std::string> whitelist;
  int jobs = default_jobs();
  std::string out;
  std::string corpus;

  // fuzz / replay
  std::vector<std::string> backends;
  bool mutant = false;
  double rel_tol = 0.1;
  double timeout = 10.0;
  uint64_t data_seed = 0;
  std::string store = "failures";
  bool fail_on_findings = false;
  std::string record_id;
};

void add_gen_flags(CLI::App* app, Options& o) {
  app->add_option("--strategy", o.strategy, "isra | declgen | randoop")->capture_default_str();
  app->add_option("--num", o.num, "number of graphs")->capture_default_str();
  app->add_option("--min-ops", o.min_ops, "lower bound on ops per graph")->capture_default_str();
  app->add_option("--max-ops", o.max_ops, "upper bound on ops per graph")->capture_default_str();
  app->add_option("--seed", o.seed, "generation seed (GRAPHSMITH_SEED overrides)")->capture_default_str();
  app->add_option("--picking-rate", o.picking_rate, "probability of reusing an existing tensor")->capture_default_str();
  app->add_option("--max-dim", o.max_dim, "rank bound for fresh tensors")->capture_default_str();
  app->add_option("--max-len", o.max_len, "length bound for fresh tensors")->capture_default_str();
  app->add_option("--retry-limit", o.retry_limit, "randoop: extra tries per op slot")->capture_default_str();
  app->add_option("--whitelist", o.whitelist, "restrict to these op types")->delimiter(',');
  app->add_option("--jobs", o.jobs, "worker threads")->capture_default_str();
}

void add_backend_flags(CLI::App* app, Options& o) {
  app->add_option("--backend", o.backends, "command of an adapter-protocol backend (repeatable)");
  app->add_flag("--mutant", o.mutant, "add the in-process backend whose Add computes a - b");
  app->add_option("--rel-tol", o.rel_tol, "relative tolerance for output comparison")->capture_default_str();
  app->add_option("--timeout", o.timeout, "per-graph timeout of external backends, seconds")->capture_default_str();
  app->add_option("--store", o.store, "failure store directory")->capture_default_str();
}

GenConfig gen_config(const Options& o) {
  GenConfig cfg;
  cfg.strategy = parse_strategy(o.strategy);
  cfg.lb = o.min_ops;
  cfg.ub = o.max_ops;
  cfg.seed = o.seed;
  cfg.picking_rate = o.picking_rate;
  cfg.max_dim = o.max_dim;
  cfg.max_len = o.max_len;
  cfg.retry_limit = o.retry_limit;
  cfg.op_whitelist = o.whitelist;
  validate(cfg);
  return cfg;
}

void print_effective(const std::string& sub, nlohmann::json j) {
  j["subcommand"] = sub;
  std::cerr << "effective-config: " << j.dump() << "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

// Graph files of a corpus directory in name order; reports are skipped.
std::vector<fs::path> corpus_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("--corpus: not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && e.path().extension() == ".json" && name.find("-report.json") == std::string::npos) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

Graph load_graph(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

// Folds a corpus directory or an inline-generated corpus into `acc`.
void fold_corpus(const Options& o, MetricsAccumulator& acc) {
  if (!o.corpus.empty()) {
    for (const auto& f : corpus_files(o.corpus)) acc.add(load_graph(f));
    return;
  }
  generate_corpus(gen_config(o), o.num, o.jobs, [&](uint64_t, const Graph& g) { acc.add(g); });
}

nlohmann::json options_json(const Options& o, bool with_gen) {
  nlohmann::json j;
  if (with_gen) {
    j = gen_config(o).to_json();
    j["num"] = o.num;
    j["jobs"] = o.jobs;
  }
  return j;
}

struct BackendSet {
  std::vector<std::unique_ptr<Backend>> owned;
  std::vector<Backend*> list;
  int launch_failures = 0;
};

BackendSet make_backends(const Options& o) {
  BackendSet s;
  s.owned.push_back(std::make_unique<ReferenceBackend>());
  if (o.mutant) s.owned.push_back(make_mutant_backend());
  for (size_t i = 0; i < o.backends.size(); ++i) {
    try {
      s.owned.push_back(std::make_unique<ProcessBackend>("backend" + std::to_string(i + 1), o.backends[i], o.timeout));
    } catch (const BackendLaunchError& e) {
      std::cerr << "warning: " << e.what() << "\n";
      ++s.launch_failures;
    }
  }
  for (auto& b : s.owned) s.list.push_back(b.get());
  return s;
}

int cmd_generate(const Options& o) {
  if (o.out.empty()) throw ConfigError("--out is required");
  const GenConfig cfg = gen_config(o);
  auto eff = options_json(o, true);
  eff["out"] = o.out;
  print_effective("generate", eff);
  const GenReport report = write_corpus(cfg, o.num, o.jobs, o.out);
  std::cout << report.to_json().dump(2) << "\n";
  return 0;
}

int cmd_coverage(const Options& o) {
  auto eff = o.corpus.empty() ? options_json(o, true) : nlohmann::json{{"corpus", o.corpus}};
  eff["out"] = o.out;
  print_effective("coverage", eff);
  MetricsAccumulator acc;
  fold_corpus(o, acc);
  const MetricsReport report = acc.report();
  if (!o.out.empty()) {
    write_text(fs::path(o.out) / "metrics.json", report.to_json().dump(2) + "\n");
    write_text(fs::path(o.out) / "metrics.csv", report.to_csv());
    write_text(fs::path(o.out) / "op_frequency.csv", report.frequency_csv());
  }
  std::cout << report.to_json().dump(2) << "\n";
  return 0;
}

int cmd_stats(const Options& o) {
  auto eff = o.corpus.empty() ? options_json(o, true) : nlohmann::json{{"corpus", o.corpus}};
  eff["out"] = o.out;
  print_effective("stats", eff);
  MetricsAccumulator acc;
  fold_corpus(o, acc);
  const std::string csv = acc.report().frequency_csv();
  if (o.out.empty()) {
    std::cout << csv;
  } else {
    write_text(o.out, csv);
  }
  return 0;
}

int cmd_fuzz(const Options& o) {
  CampaignConfig cfg;
  cfg.gen = gen_config(o);
  cfg.num = o.num;
  cfg.rel_tol = o.rel_tol;
  cfg.data_seed = o.data_seed;
  cfg.jobs = o.jobs;
  auto eff = options_json(o, true);
  eff.update({{"backends", o.backends}, {"mutant", o.mutant}, {"rel_tol", o.rel_tol}, {"timeout", o.timeout},
              {"data_seed", o.data_seed}, {"store", o.store}, {"fail_on_findings", o.fail_on_findings}});
  print_effective("fuzz", eff);
  BackendSet backends = make_backends(o);
  if (!o.backends.empty() && backends.launch_failures == static_cast<int>(o.backends.size())) {
    std::cerr << "error: no external backend could be launched\n";
    return kInfra;
  }
  FailureStore store(o.store);
  const CampaignResult result = fuzz_campaign(cfg, backends.list, store);
  nlohmann::json j = result.to_json();
  j["store"] = o.store;
  j["signatures"] = store.records().size();
  std::cout << j.dump(2) << "\n";
  return o.fail_on_findings && result.failures > 0 ? 3 : 0;
}

int cmd_replay(const Options& o) {
  print_effective("replay", {{"store", o.store}, {"id", o.record_id}, {"backends", o.backends},
                             {"mutant", o.mutant}, {"rel_tol", o.rel_tol}, {"timeout", o.timeout}});
  FailureStore store(o.store);
  const FailureRecord* rec = store.find(o.record_id);
  if (!rec) throw ConfigError("no record with id " + o.record_id + " in " + o.store);
  BackendSet backends = make_backends(o);
  if (backends.launch_failures > 0) return kInfra;
  const ReplayResult r = replay(*rec, store.dir(), backends.list, o.rel_tol);
  nlohmann::json findings = nlohmann::json::array();
  for (const auto& f : r.findings) {
    findings.push_back({{"kind", f.kind}, {"backend", f.backend}, {"message", f.message}});
  }
  std::cout << nlohmann::json{{"id", rec->id}, {"kind", rec->kind}, {"signature", rec->signature},
                              {"reproduced", r.reproduced}, {"findings", findings}}
                   .dump(2)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"graphsmith: random computation-graph generation and differential testing"};
  app.require_subcommand(1);

  auto* generate = app.add_subcommand("generate", "write a corpus of graphs and a generation report");
  add_gen_flags(generate, o);
  generate->add_option("--out", o.out, "output directory");

  auto* coverage = app.add_subcommand("coverage", "coverage metrics of a corpus (read or generated)");
  add_gen_flags(coverage, o);
  coverage->add_option("--corpus", o.corpus, "read graphs from this directory instead of generating");
  coverage->add_option("--out", o.out, "also write metrics.json, metrics.csv and op_frequency.csv here");

  auto* stats = app.add_subcommand("stats", "per-op frequency CSV of a corpus");
  add_gen_flags(stats, o);
  stats->add_option("--corpus", o.corpus, "read graphs from this directory instead of generating");
  stats->add_option("--out", o.out, "CSV file (default: stdout)");

  auto* fuzz = app.add_subcommand("fuzz", "differential-testing campaign");
  add_gen_flags(fuzz, o);
  add_backend_flags(fuzz, o);
  fuzz->add_option("--data-seed", o.data_seed, "data seed of graph 0; graph i uses data_seed + i")->capture_default_str();
  fuzz->add_flag("--fail-on-findings", o.fail_on_findings, "exit 3 when the campaign found failures");

  auto* replay_cmd = app.add_subcommand("replay", "re-run one failure record");
  add_backend_flags(replay_cmd, o);
  replay_cmd->add_option("id", o.record_id, "record id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (const char* env = std::getenv("GRAPHSMITH_SEED"); env && *env) {
    try {
      size_t pos = 0;
      o.seed = std::stoull(env, &pos);
      if (pos != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      std::cerr << "error: GRAPHSMITH_SEED is not an unsigned integer: " << env << "\n";
      return kUsage;
    }
  }
  if (o.jobs < 1) {
    std::cerr << "error: --jobs must be at least 1\n";
    return kUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(o);
    if (coverage->parsed()) return cmd_coverage(o);
    if (stats->parsed()) return cmd_stats(o);
    if (fuzz->parsed()) return cmd_fuzz(o);
    if (replay_cmd->parsed()) return cmd_replay(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfra;
  }
  return kUsage;
}
