#include "graphsmith/generator.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <thread>

#include "graphsmith/errors.h"
#include "graphsmith/serialize.h"

namespace graphsmith {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kIsra: return "isra";
    case Strategy::kDeclGen: return "declgen";
    case Strategy::kRandoop: return "randoop";
  }
  return "?";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "isra") return Strategy::kIsra;
  if (s == "declgen") return Strategy::kDeclGen;
  if (s == "randoop") return Strategy::kRandoop;
  throw ConfigError("unknown strategy '" + s + "' (expected isra, declgen or randoop)");
}

nlohmann::json GenConfig::to_json() const {
  return {{"strategy", to_string(strategy)}, {"lb", lb}, {"ub", ub}, {"picking_rate", picking_rate},
          {"max_dim", max_dim}, {"max_len", max_len}, {"op_whitelist", op_whitelist}, {"seed", seed},
          {"retry_limit", retry_limit}};
}

void validate(const GenConfig& cfg, const Registry& registry) {
  if (cfg.lb < 1 || cfg.lb > cfg.ub) throw ConfigError("op-count bounds must satisfy 1 <= lb <= ub");
  if (!(cfg.picking_rate >= 0 && cfg.picking_rate <= 1)) throw ConfigError("picking rate must lie in [0, 1]");
  if (cfg.max_dim < 1 || cfg.max_dim > kMaxRank) {
    throw ConfigError("max_dim must lie in [1, " + std::to_string(kMaxRank) + "]");
  }
  if (cfg.max_len < 1) throw ConfigError("max_len must be positive");
  if (cfg.retry_limit < 0) throw ConfigError("retry limit must be non-negative");
  for (const auto& name : cfg.op_whitelist) {
    if (!registry.contains(name)) throw ConfigError("unknown op in whitelist: '" + name + "'");
  }
}

GenReport& GenReport::operator+=(const GenReport& o) {
  graphs += o.graphs;
  ops_attempted += o.ops_attempted;
  ops_rejected += o.ops_rejected;
  graphs_rejected += o.graphs_rejected;
  slots_skipped += o.slots_skipped;
  solver += o.solver;
  for (const auto& [k, v] : o.op_frequency) op_frequency[k] += v;
  return *this;
}

nlohmann::json GenReport::to_json() const {
  return {{"graphs", graphs},
          {"ops_attempted", ops_attempted},
          {"ops_rejected", ops_rejected},
          {"graphs_rejected", graphs_rejected},
          {"slots_skipped", slots_skipped},
          {"backtracks", solver.backtracks},
          {"solver", {{"solves", solver.solves},
                      {"reused_inputs", solver.reused_inputs},
                      {"fresh_inputs", solver.fresh_inputs},
                      {"candidates_checked", solver.candidates_checked},
                      {"ground_constraints", solver.ground_constraints}}},
          {"wall_seconds", wall_seconds},
          {"op_frequency", op_frequency}};
}

Generator::Generator(GenConfig cfg, const Registry& registry) : cfg_(std::move(cfg)), registry_(&registry) {
  validate(cfg_, registry);
  if (cfg_.op_whitelist.empty()) {
    for (const auto& op : registry.ops()) types_.push_back(op.get());
  } else {
    for (const auto& op : registry.ops()) {
      if (std::find(cfg_.op_whitelist.begin(), cfg_.op_whitelist.end(), op->name) != cfg_.op_whitelist.end()) {
        types_.push_back(op.get());
      }
    }
  }
}

Graph Generator::generate(uint64_t index, GenReport& report) const {
  Rng rng(mix64(cfg_.seed) ^ index);
  Graph g;
  switch (cfg_.strategy) {
    case Strategy::kIsra: g = isra(rng, report); break;
    case Strategy::kDeclGen: g = declgen(rng, report); break;
    case Strategy::kRandoop: g = randoop(rng, report); break;
  }
  ++report.graphs;
  for (NodeId id : g.op_ids()) ++report.op_frequency[g.op(id).type];
  g.metadata() = {{"generator", to_string(cfg_.strategy)}, {"seed", cfg_.seed}, {"index", index},
                  {"parameters", cfg_.to_json()}};
  return g;
}

Graph Generator::isra(Rng& rng, GenReport& report) const {
  const SolverLimits limits{cfg_.max_dim, cfg_.max_len};
  const int64_t numop = rng.uniform(cfg_.lb, cfg_.ub);
  Graph g;
  std::vector<PoolEntry> pool;
  for (int64_t i = 0; i < numop; ++i) {
    const OpSpec& spec = *types_[rng.index(types_.size())];
    const int indegree = spec.indegrees[rng.index(spec.indegrees.size())];
    OpSolution sol = solve_op(spec, indegree, pool, cfg_.picking_rate, rng, limits, &report.solver);
    std::vector<EdgeId> inputs;
    for (const auto& choice : sol.inputs) {
      if (const auto* r = std::get_if<Reuse>(&choice)) {
        inputs.push_back(r->edge);
      } else {
        const TensorStruct& shape = std::get<Fresh>(choice).shape;
        const EdgeId e = g.add_placeholder(shape);
        pool.push_back({e, shape});
        inputs.push_back(e);
      }
    }
    const auto outs = infer_outputs(spec, sol.attrs, sol.input_shapes);
    const NodeId n = g.add_op(spec.name, std::move(sol.attrs), inputs, outs);
    for (EdgeId e : g.op(n).outputs) pool.push_back({e, g.edge(e).shape});
    ++report.ops_attempted;
  }
  return g;
}

namespace {

// An op built from the schema alone: static attribute domains, random ranks
// and lengths, random wiring.
struct RandomOp {
  const OpSpec* spec = nullptr;
  AttrMap attrs;
  std::vector<EdgeId> reused;  // -1 for a fresh placeholder
  std::vector<TensorStruct> shapes;
};

int64_t list_length(const AttrSpec& a, int64_t dim0) {
  int64_t n = a.count->constant;
  for (const auto& t : a.count->terms) n += t.coef * dim0;
  return std::max<int64_t>(n, 0);
}

RandomOp random_op(const OpSpec& spec, const Graph& g, Rng& rng, const GenConfig& cfg) {
  RandomOp op;
  op.spec = &spec;
  const int indegree = op.spec->indegrees[rng.index(op.spec->indegrees.size())];
  for (int k = 0; k < indegree; ++k) {
    if (!g.edges().empty() && rng.bernoulli(cfg.picking_rate)) {
      const EdgeId e = static_cast<EdgeId>(rng.index(g.edges().size()));
      op.reused.push_back(e);
      op.shapes.push_back(g.edge(e).shape);
    } else {
      TensorStruct s;
      const int64_t d = rng.uniform(1, cfg.max_dim);
      for (int64_t i = 0; i < d; ++i) s.lens.push_back(rng.uniform(1, cfg.max_len));
      op.reused.push_back(-1);
      op.shapes.push_back(std::move(s));
    }
  }
  for (const auto& a : op.spec->attrs) {
    if (a.is_list()) {
      std::vector<int64_t> v;
      const int64_t n = list_length(a, op.shapes[0].dim());
      for (int64_t j = 0; j < n; ++j) v.push_back(rng.uniform(a.lo, a.hi));
      op.attrs[a.name] = std::move(v);
    } else {
      op.attrs[a.name] = rng.uniform(a.lo, a.hi);
    }
  }
  op.attrs[kIndegreeAttr] = static_cast<int64_t>(indegree);
  return op;
}

void materialize(Graph& g, RandomOp& op) {
  std::vector<EdgeId> inputs;
  for (size_t k = 0; k < op.reused.size(); ++k) {
    inputs.push_back(op.reused[k] >= 0 ? op.reused[k] : g.add_placeholder(op.shapes[k]));
  }
  auto outs = op.spec->out_fn(op.attrs, op.shapes);
  g.add_op(op.spec->name, std::move(op.attrs), inputs, outs);
}

}  // namespace

// Whole graphs are drawn and checked; only fully valid graphs are emitted.
// The draw stops at the first invalid op, since the rest of that graph
// cannot change the verdict (and has no defined output shapes to wire into).
Graph Generator::declgen(Rng& rng, GenReport& report) const {
  for (uint64_t attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
    const int64_t numop = rng.uniform(cfg_.lb, cfg_.ub);
    Graph g;
    bool valid = true;
    for (int64_t i = 0; i < numop && valid; ++i) {
      RandomOp op = random_op(*types_[rng.index(types_.size())], g, rng, cfg_);
      ++report.ops_attempted;
      if (!check(*op.spec, op.attrs, op.shapes)) {
        ++report.ops_rejected;
        valid = false;
        break;
      }
      materialize(g, op);
    }
    if (valid) return g;
    ++report.graphs_rejected;
  }
  throw Error("declgen: no valid graph after " + std::to_string(cfg_.max_attempts) + " attempts");
}

Graph Generator::randoop(Rng& rng, GenReport& report) const {
  const int64_t numop = rng.uniform(cfg_.lb, cfg_.ub);
  Graph g;
  for (int64_t i = 0; i < numop; ++i) {
    bool placed = false;
    for (int t = 0; t <= cfg_.retry_limit && !placed; ++t) {
      RandomOp op = random_op(*types_[rng.index(types_.size())], g, rng, cfg_);
      ++report.ops_attempted;
      if (check(*op.spec, op.attrs, op.shapes)) {
        materialize(g, op);
        placed = true;
      } else {
        ++report.ops_rejected;
      }
    }
    if (!placed) ++report.slots_skipped;
  }
  return g;
}

int default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

GenReport generate_corpus(const GenConfig& cfg, uint64_t num, int jobs,
                          const std::function<void(uint64_t, const Graph&)>& sink, const Registry& registry) {
  const auto start = std::chrono::steady_clock::now();
  Generator gen(cfg, registry);
  GenReport total;
  jobs = std::max(1, jobs);
  const uint64_t chunk = static_cast<uint64_t>(jobs) * 16;
  std::vector<Graph> batch;
  std::vector<GenReport> reports;
  for (uint64_t base = 0; base < num; base += chunk) {
    const uint64_t n = std::min(chunk, num - base);
    batch.assign(n, Graph{});
    reports.assign(n, GenReport{});
    if (jobs == 1) {
      for (uint64_t i = 0; i < n; ++i) batch[i] = gen.generate(base + i, reports[i]);
    } else {
      std::atomic<uint64_t> next{0};
      std::exception_ptr error;
      std::mutex mu;
      std::vector<std::thread> workers;
      for (int w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
          for (uint64_t i; (i = next++) < n;) {
            try {
              batch[i] = gen.generate(base + i, reports[i]);
            } catch (...) {
              std::lock_guard lock(mu);
              if (!error) error = std::current_exception();
            }
          }
        });
      }
      for (auto& w : workers) w.join();
      if (error) std::rethrow_exception(error);
    }
    for (uint64_t i = 0; i < n; ++i) {
      total += reports[i];
      sink(base + i, batch[i]);
    }
  }
  total.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return total;
}

std::string graph_file_name(const GenConfig& cfg, uint64_t index) {
  return to_string(cfg.strategy) + "-" + std::to_string(cfg.seed) + "-" + std::to_string(index) + ".json";
}

GenReport write_corpus(const GenConfig& cfg, uint64_t num, int jobs, const std::filesystem::path& dir,
                       const Registry& registry) {
  std::filesystem::create_directories(dir);
  GenReport report = generate_corpus(
      cfg, num, jobs,
      [&](uint64_t index, const Graph& g) {
        std::ofstream out(dir / graph_file_name(cfg, index), std::ios::binary);
        out << serialize(g);
        if (!out) throw Error("cannot write " + (dir / graph_file_name(cfg, index)).string());
      },
      registry);
  nlohmann::json j = report.to_json();
  j["config"] = cfg.to_json();
  std::ofstream out(dir / (to_string(cfg.strategy) + "-" + std::to_string(cfg.seed) + "-report.json"));
  out << j.dump(2) << "\n";
  return report;
}

}  // namespace graphsmith
