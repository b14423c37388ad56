#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphsmith/graph.h"
#include "graphsmith/opspec.h"
#include "graphsmith/solver.h"

namespace graphsmith {

enum class Strategy { kIsra, kDeclGen, kRandoop };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& s);  // throws ConfigError

struct GenConfig {
  Strategy strategy = Strategy::kIsra;
  int64_t lb = 1;
  int64_t ub = 10;
  double picking_rate = 0.97;
  int64_t max_dim = 5;
  int64_t max_len = 5;
  std::vector<std::string> op_whitelist;  // empty: whole registry
  uint64_t seed = 0;
  int retry_limit = 10;                   // randoop: extra tries per op slot
  uint64_t max_attempts = 10'000'000;     // declgen: whole-graph tries per emitted graph

  nlohmann::json to_json() const;
};

// Throws ConfigError on bounds, rates or unknown whitelist names.
void validate(const GenConfig& cfg, const Registry& registry = builtin_registry());

struct GenReport {
  uint64_t graphs = 0;
  uint64_t ops_attempted = 0;
  uint64_t ops_rejected = 0;
  uint64_t graphs_rejected = 0;  // declgen
  uint64_t slots_skipped = 0;    // randoop
  double wall_seconds = 0;
  SolveStats solver;
  std::map<std::string, uint64_t> op_frequency;

  GenReport& operator+=(const GenReport& o);
  nlohmann::json to_json() const;
};

class Generator {
 public:
  explicit Generator(GenConfig cfg, const Registry& registry = builtin_registry());

  const GenConfig& config() const { return cfg_; }

  // Graph number `index` of the stream. Depends only on (config, index).
  // Counters are added to `report` (graphs, attempts, rejections, ...).
  Graph generate(uint64_t index, GenReport& report) const;

 private:
  Graph isra(Rng& rng, GenReport& report) const;
  Graph declgen(Rng& rng, GenReport& report) const;
  Graph randoop(Rng& rng, GenReport& report) const;

  GenConfig cfg_;
  const Registry* registry_;
  std::vector<const OpSpec*> types_;
};

// Generates graphs [0, num) with `jobs` workers and hands them to `sink` in
// index order. Output does not depend on `jobs`.
GenReport generate_corpus(const GenConfig& cfg, uint64_t num, int jobs,
                          const std::function<void(uint64_t, const Graph&)>& sink,
                          const Registry& registry = builtin_registry());

// File name of graph `index`: {strategy}-{seed}-{index}.json
std::string graph_file_name(const GenConfig& cfg, uint64_t index);

// Writes every graph plus {strategy}-{seed}-report.json into `dir`.
GenReport write_corpus(const GenConfig& cfg, uint64_t num, int jobs, const std::filesystem::path& dir,
                       const Registry& registry = builtin_registry());

int default_jobs();

}  // namespace graphsmith
