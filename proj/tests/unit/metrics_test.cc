#include <gtest/gtest.h>

#include <set>

#include "graphsmith/errors.h"
#include "graphsmith/generator.h"
#include "graphsmith/metrics.h"
#include "../support/graphs.h"

namespace graphsmith {
namespace {

TEST(GraphMetrics, AddConcatHandCount) {
  const auto m = graph_metrics(testing::add_concat_graph());
  EXPECT_EQ(m.noo, 2);
  EXPECT_EQ(m.not_, 2);
  EXPECT_EQ(m.nop, 1);
  EXPECT_EQ(m.ntr, 0);
  EXPECT_EQ(m.nsa, 2);
}

TEST(GraphMetrics, EmptyGraph) {
  const auto m = graph_metrics(Graph{});
  EXPECT_EQ(m.noo + m.not_ + m.nop + m.ntr + m.nsa, 0);
}

TEST(GraphMetrics, ReluChain) {
  const auto m = graph_metrics(testing::relu_chain(3));
  EXPECT_EQ(m.noo, 3);
  EXPECT_EQ(m.not_, 1);
  EXPECT_EQ(m.nop, 2);
  EXPECT_EQ(m.ntr, 1);
  EXPECT_EQ(m.nsa, 1);
}

// Edge-by-edge recount, independent of graph_metrics' per-op walk.
std::pair<int64_t, int64_t> recount(const Graph& g) {
  int64_t nop = 0;
  std::set<std::pair<EdgeId, EdgeId>> triples;
  for (const auto& in : g.edges()) {
    if (!g.is_op(in.producer.node)) continue;
    nop += static_cast<int64_t>(in.consumers.size());
    for (const auto& c : in.consumers) {
      for (const auto& out : g.edges()) {
        if (out.producer.node == c.node && !out.consumers.empty()) triples.insert({in.id, out.id});
      }
    }
  }
  return {nop, static_cast<int64_t>(triples.size())};
}

TEST(GraphMetrics, RecountOracleOnGeneratedGraphs) {
  GenConfig cfg;
  cfg.lb = 1;
  cfg.ub = 15;
  cfg.seed = 8;
  generate_corpus(cfg, 100, 1, [&](uint64_t, const Graph& g) {
    const auto m = graph_metrics(g);
    const auto [nop, ntr] = recount(g);
    EXPECT_EQ(m.nop, nop);
    EXPECT_EQ(m.ntr, ntr);
    EXPECT_GE(m.noo, m.not_);
  });
}

TEST(GraphMetrics, RelabelingInvariant) {
  // Same topology built in a different creation order.
  Graph a;
  {
    const EdgeId x = a.add_placeholder({2});
    const EdgeId y = a.add_placeholder({2});
    const EdgeId r = a.op(a.add_op("Relu", {}, {x}, {{2}})).outputs[0];
    a.add_op("Add", {}, {r, y}, {{2}});
  }
  Graph b;
  {
    const EdgeId y = b.add_placeholder({2});
    const EdgeId x = b.add_placeholder({2});
    const EdgeId r = b.op(b.add_op("Relu", {}, {x}, {{2}})).outputs[0];
    b.add_op("Add", {}, {r, y}, {{2}});
  }
  const auto ma = graph_metrics(a), mb = graph_metrics(b);
  EXPECT_EQ(ma.nop, mb.nop);
  EXPECT_EQ(ma.ntr, mb.ntr);
  EXPECT_EQ(ma.nsa, mb.nsa);
}

TEST(CorpusMetrics, SingleAddGraph) {
  Graph g;
  const EdgeId a = g.add_placeholder({2});
  const EdgeId b = g.add_placeholder({2});
  g.add_op("Add", {}, {a, b}, {{2}});
  const auto r = corpus_metrics({g});
  const double nc = static_cast<double>(builtin_registry().size());
  EXPECT_DOUBLE_EQ(r.otc, 1.0 / nc);
  EXPECT_DOUBLE_EQ(r.idc, 1.0 / nc);  // Add has a single allowed indegree
  EXPECT_DOUBLE_EQ(r.sac, 1.0 / nc);
  EXPECT_DOUBLE_EQ(r.odc, 1.0 / nc);
  EXPECT_DOUBLE_EQ(r.sec, 0.0);
  EXPECT_EQ(r.op_frequency.at("Add"), 1u);
  EXPECT_EQ(r.op_frequency.at("Relu"), 0u);
}

TEST(CorpusMetrics, ChainPairsAndTriples) {
  const auto r = corpus_metrics({testing::relu_chain(3)});
  const double nc = static_cast<double>(builtin_registry().size());
  EXPECT_DOUBLE_EQ(r.sec, 1.0 / (nc * nc));
  EXPECT_DOUBLE_EQ(r.dec, 1.0 / (nc * nc * nc));
  EXPECT_DOUBLE_EQ(r.odc, 2.0 / nc);  // fan-outs 1 and 0
}

TEST(CorpusMetrics, EmptyCorpusRaises) {
  EXPECT_THROW(corpus_metrics({}), EmptyCorpus);
}

TEST(CorpusMetrics, MonotoneUnderAddition) {
  GenConfig cfg;
  cfg.lb = 1;
  cfg.ub = 10;
  MetricsAccumulator acc;
  MetricsReport prev;
  bool first = true;
  generate_corpus(cfg, 50, 1, [&](uint64_t, const Graph& g) {
    acc.add(g);
    const auto r = acc.report();
    if (!first) {
      EXPECT_GE(r.otc, prev.otc);
      EXPECT_GE(r.idc, prev.idc);
      EXPECT_GE(r.sec, prev.sec);
      EXPECT_GE(r.dec, prev.dec);
    }
    for (double f : {r.otc, r.idc, r.sec, r.dec}) {
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
    }
    prev = r;
    first = false;
  });
}

TEST(CorpusMetrics, ReportFormats) {
  const auto r = corpus_metrics({testing::add_concat_graph()});
  const auto j = r.to_json();
  for (const char* k : {"NOO", "NOT", "NOP", "NTR", "NSA", "OTC", "IDC", "ODC", "SEC", "DEC", "SAC"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  const std::string csv = r.to_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  const std::string freq = r.frequency_csv();
  EXPECT_EQ(freq.rfind("op,count\n", 0), 0u);
  EXPECT_NE(freq.find("Concat,1\n"), std::string::npos);
}

}  // namespace
}  // namespace graphsmith
