#include "graphsmith/metrics.h"

#include <sstream>

#include "graphsmith/errors.h"
#include "graphsmith/hash.h"

namespace graphsmith {

namespace {

std::string attrs_text(const AttrMap& attrs) {
  std::string s;
  for (const auto& [name, value] : attrs) {
    if (name == kIndegreeAttr) continue;
    s += name + "=";
    if (const auto* v = std::get_if<int64_t>(&value)) {
      s += std::to_string(*v);
    } else {
      s += "[";
      for (int64_t x : std::get<std::vector<int64_t>>(value)) s += std::to_string(x) + ",";
      s += "]";
    }
    s += ";";
  }
  return s;
}

bool produced_by_op(const Graph& g, EdgeId e) { return g.is_op(g.edge(e).producer.node); }

bool consumed_by_op(const Graph& g, EdgeId e) { return !g.edge(e).consumers.empty(); }

}  // namespace

std::string op_config(const Graph& g, NodeId id) {
  const OpNode& op = g.op(id);
  std::string s;
  for (EdgeId e : op.inputs) s += to_string(g.edge(e).shape);
  return s + "|" + attrs_text(op.attrs);
}

int64_t fan_out(const Graph& g, NodeId id) {
  int64_t n = 0;
  for (EdgeId e : g.op(id).outputs) n += static_cast<int64_t>(g.edge(e).consumers.size());
  return n;
}

GraphMetrics graph_metrics(const Graph& g) {
  GraphMetrics m;
  std::set<std::string> types;
  std::set<std::string> configs;
  for (NodeId id : g.op_ids()) {
    const OpNode& op = g.op(id);
    ++m.noo;
    types.insert(op.type);
    configs.insert(op.type + "#" + op_config(g, id));

    std::set<EdgeId> in_from_ops;
    for (EdgeId e : op.inputs) {
      if (produced_by_op(g, e)) {
        ++m.nop;
        in_from_ops.insert(e);
      }
    }
    int64_t out_to_ops = 0;
    for (EdgeId e : op.outputs)
      if (consumed_by_op(g, e)) ++out_to_ops;
    m.ntr += static_cast<int64_t>(in_from_ops.size()) * out_to_ops;
  }
  m.not_ = static_cast<int64_t>(types.size());
  m.nsa = static_cast<int64_t>(configs.size());
  return m;
}

MetricsAccumulator::MetricsAccumulator(const Registry& registry) : registry_(&registry) {
  const size_t n = registry.size();
  for (size_t i = 0; i < n; ++i) index_.emplace(registry.ops()[i]->name, static_cast<int>(i));
  freq_.assign(n, 0);
  indegrees_.resize(n);
  fanouts_.resize(n);
  configs_.resize(n);
}

int MetricsAccumulator::type_index(const std::string& type) const {
  auto it = index_.find(type);
  return it == index_.end() ? -1 : it->second;
}

void MetricsAccumulator::add(const Graph& g) {
  const GraphMetrics m = graph_metrics(g);
  ++graphs_;
  sum_noo_ += static_cast<double>(m.noo);
  sum_not_ += static_cast<double>(m.not_);
  sum_nop_ += static_cast<double>(m.nop);
  sum_ntr_ += static_cast<double>(m.ntr);
  sum_nsa_ += static_cast<double>(m.nsa);

  const uint64_t n = registry_->size();
  auto type_of = [&](NodeId id) { return type_index(g.op(id).type); };
  for (NodeId id : g.op_ids()) {
    const int t = type_of(id);
    if (t < 0) continue;
    const OpNode& op = g.op(id);
    ++freq_[static_cast<size_t>(t)];
    indegrees_[static_cast<size_t>(t)].insert(static_cast<int64_t>(op.inputs.size()));
    fanouts_[static_cast<size_t>(t)].insert(fan_out(g, id));
    configs_[static_cast<size_t>(t)].insert(fnv1a(op_config(g, id)));

    for (EdgeId in : op.inputs) {
      const NodeId a = g.edge(in).producer.node;
      if (!g.is_op(a) || type_of(a) < 0) continue;
      const uint64_t ta = static_cast<uint64_t>(type_of(a));
      pairs_.insert(ta * n + static_cast<uint64_t>(t));
      for (EdgeId out : op.outputs) {
        for (const Port& c : g.edge(out).consumers) {
          const int tc = type_of(c.node);
          if (tc < 0) continue;
          triples_.insert((ta * n + static_cast<uint64_t>(t)) * n + static_cast<uint64_t>(tc));
        }
      }
    }
  }
}

MetricsReport MetricsAccumulator::report() const {
  if (graphs_ == 0) throw EmptyCorpus("metrics of an empty corpus");
  MetricsReport r;
  const double nc = static_cast<double>(registry_->size());
  const double ng = static_cast<double>(graphs_);
  r.corpus_size = graphs_;
  r.registry_size = registry_->size();
  r.noo = sum_noo_ / ng;
  r.not_ = sum_not_ / ng;
  r.nop = sum_nop_ / ng;
  r.ntr = sum_ntr_ / ng;
  r.nsa = sum_nsa_ / ng;
  double seen = 0, idc = 0, odc = 0, sac = 0;
  for (size_t i = 0; i < registry_->size(); ++i) {
    const OpSpec& spec = *registry_->ops()[i];
    r.op_frequency[spec.name] = freq_[i];
    if (freq_[i] > 0) seen += 1;
    idc += static_cast<double>(indegrees_[i].size()) / static_cast<double>(spec.indegrees.size());
    odc += static_cast<double>(fanouts_[i].size());
    sac += static_cast<double>(configs_[i].size());
  }
  r.otc = seen / nc;
  r.idc = idc / nc;
  r.odc = odc / nc;
  r.sac = sac / nc;
  r.sec = static_cast<double>(pairs_.size()) / (nc * nc);
  r.dec = static_cast<double>(triples_.size()) / (nc * nc * nc);
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  return {{"corpus_size", corpus_size}, {"registry_size", registry_size},
          {"NOO", noo}, {"NOT", not_}, {"NOP", nop}, {"NTR", ntr}, {"NSA", nsa},
          {"OTC", otc}, {"IDC", idc}, {"ODC", odc}, {"SEC", sec}, {"DEC", dec}, {"SAC", sac},
          {"op_frequency", op_frequency}};
}

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "corpus_size,registry_size,NOO,NOT,NOP,NTR,NSA,OTC,IDC,ODC,SEC,DEC,SAC\n";
  os << corpus_size << ',' << registry_size << ',' << noo << ',' << not_ << ',' << nop << ',' << ntr << ',' << nsa
     << ',' << otc << ',' << idc << ',' << odc << ',' << sec << ',' << dec << ',' << sac << '\n';
  return os.str();
}

std::string MetricsReport::frequency_csv() const {
  std::string s = "op,count\n";
  for (const auto& [name, count] : op_frequency) s += name + "," + std::to_string(count) + "\n";
  return s;
}

MetricsReport corpus_metrics(const std::vector<Graph>& graphs, const Registry& registry) {
  MetricsAccumulator acc(registry);
  for (const auto& g : graphs) acc.add(g);
  return acc.report();
}

}  // namespace graphsmith
