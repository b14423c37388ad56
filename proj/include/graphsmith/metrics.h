#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphsmith/graph.h"
#include "graphsmith/opspec.h"

namespace graphsmith {

struct GraphMetrics {
  int64_t noo = 0;  // op nodes
  int64_t not_ = 0; // distinct op types
  int64_t nop = 0;  // op -> op connections, one per consumer port
  int64_t ntr = 0;  // distinct (edge in, edge out) pairs at a middle op, both ends ops
  int64_t nsa = 0;  // distinct (type, input shapes, attrs without indegree)
};

GraphMetrics graph_metrics(const Graph& g);

// Fan-out of an op node: consumer ports summed over its output edges.
int64_t fan_out(const Graph& g, NodeId op);

// Canonical text of an op's input shapes and attributes (indegree excluded).
std::string op_config(const Graph& g, NodeId op);

struct MetricsReport {
  size_t corpus_size = 0;
  size_t registry_size = 0;
  double noo = 0, not_ = 0, nop = 0, ntr = 0, nsa = 0;
  double otc = 0, idc = 0, odc = 0, sec = 0, dec = 0, sac = 0;
  std::map<std::string, uint64_t> op_frequency;  // every registry op, zero included

  nlohmann::json to_json() const;
  // Two lines: header and values.
  std::string to_csv() const;
  // "op,count" rows.
  std::string frequency_csv() const;
};

// Streaming corpus fold. Operation-level metrics are averaged over every op
// of the registry, so unseen ops pull them down.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(const Registry& registry = builtin_registry());

  void add(const Graph& g);
  size_t size() const { return graphs_; }

  // Throws EmptyCorpus when nothing was added.
  MetricsReport report() const;

 private:
  int type_index(const std::string& type) const;

  const Registry* registry_;
  std::map<std::string, int, std::less<>> index_;
  size_t graphs_ = 0;
  double sum_noo_ = 0, sum_not_ = 0, sum_nop_ = 0, sum_ntr_ = 0, sum_nsa_ = 0;
  std::vector<uint64_t> freq_;
  std::vector<std::set<int64_t>> indegrees_;
  std::vector<std::set<int64_t>> fanouts_;
  std::vector<std::unordered_set<uint64_t>> configs_;  // 64-bit hashes of op_config
  std::unordered_set<uint64_t> pairs_;
  std::unordered_set<uint64_t> triples_;
};

MetricsReport corpus_metrics(const std::vector<Graph>& graphs, const Registry& registry = builtin_registry());

}  // namespace graphsmith
