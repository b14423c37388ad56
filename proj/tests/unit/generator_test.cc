#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "graphsmith/errors.h"
#include "graphsmith/generator.h"
#include "graphsmith/opspec.h"
#include "graphsmith/serialize.h"

namespace graphsmith {
namespace {

std::vector<std::string> serialized_corpus(const GenConfig& cfg, uint64_t num, int jobs) {
  std::vector<std::string> out;
  generate_corpus(cfg, num, jobs, [&](uint64_t i, const Graph& g) {
    EXPECT_EQ(i, out.size());
    out.push_back(serialize(g));
  });
  return out;
}

TEST(Generator, SameSeedSameBytes) {
  GenConfig cfg;
  cfg.seed = 42;
  cfg.ub = 20;
  EXPECT_EQ(serialized_corpus(cfg, 50, 1), serialized_corpus(cfg, 50, 1));
}

TEST(Generator, JobsDoNotChangeOutput) {
  for (auto s : {Strategy::kIsra, Strategy::kDeclGen, Strategy::kRandoop}) {
    GenConfig cfg;
    cfg.strategy = s;
    cfg.seed = 3;
    cfg.ub = 8;
    EXPECT_EQ(serialized_corpus(cfg, 40, 1), serialized_corpus(cfg, 40, 4)) << to_string(s);
  }
}

TEST(Generator, DifferentSeedsDiffer) {
  GenConfig a, b;
  a.seed = 1;
  b.seed = 2;
  EXPECT_NE(serialized_corpus(a, 10, 1), serialized_corpus(b, 10, 1));
}

TEST(Generator, SingleAddGraph) {
  GenConfig cfg;
  cfg.lb = cfg.ub = 1;
  cfg.op_whitelist = {"Add"};
  generate_corpus(cfg, 20, 1, [](uint64_t, const Graph& g) {
    ASSERT_EQ(g.num_ops(), 1u);
    const auto& op = g.op(g.op_ids()[0]);
    EXPECT_EQ(op.type, "Add");
    EXPECT_EQ(g.edge(op.inputs[0]).shape, g.edge(op.inputs[1]).shape);
    EXPECT_EQ(g.edge(op.outputs[0]).shape, g.edge(op.inputs[0]).shape);
  });
}

TEST(Generator, OpCountWithinBounds) {
  GenConfig cfg;
  cfg.lb = 3;
  cfg.ub = 7;
  generate_corpus(cfg, 100, 1, [](uint64_t, const Graph& g) {
    EXPECT_GE(g.num_ops(), 3u);
    EXPECT_LE(g.num_ops(), 7u);
  });
}

TEST(Generator, InvalidConfigsRaise) {
  auto bad = [](auto mutate) {
    GenConfig cfg;
    mutate(cfg);
    EXPECT_THROW(validate(cfg), ConfigError);
  };
  bad([](GenConfig& c) { c.lb = 0; });
  bad([](GenConfig& c) { c.lb = 5, c.ub = 4; });
  bad([](GenConfig& c) { c.picking_rate = 1.5; });
  bad([](GenConfig& c) { c.picking_rate = -0.1; });
  bad([](GenConfig& c) { c.max_dim = 0; });
  bad([](GenConfig& c) { c.max_len = 0; });
  bad([](GenConfig& c) { c.retry_limit = -1; });
  bad([](GenConfig& c) { c.op_whitelist = {"NoSuchOp"}; });
  EXPECT_THROW(parse_strategy("grammar"), ConfigError);
  EXPECT_EQ(parse_strategy("declgen"), Strategy::kDeclGen);
  EXPECT_NO_THROW(validate(GenConfig{}));
}

TEST(Generator, EveryStrategyEmitsValidGraphs) {
  for (auto s : {Strategy::kIsra, Strategy::kDeclGen, Strategy::kRandoop}) {
    GenConfig cfg;
    cfg.strategy = s;
    cfg.ub = s == Strategy::kDeclGen ? 4 : 15;
    generate_corpus(cfg, 100, 1, [&](uint64_t i, const Graph& g) {
      EXPECT_EQ(validate_graph(g, builtin_registry()), "") << to_string(s) << " graph " << i;
    });
  }
}

TEST(Generator, IsraNeverRejects) {
  GenConfig cfg;
  cfg.ub = 30;
  const GenReport r = generate_corpus(cfg, 200, 1, [](uint64_t, const Graph&) {});
  EXPECT_EQ(r.graphs, 200u);
  EXPECT_EQ(r.ops_rejected, 0u);
  EXPECT_EQ(r.solver.backtracks, 0u);
  EXPECT_GT(r.ops_attempted, 0u);
  EXPECT_EQ(r.solver.solves, r.ops_attempted);
}

TEST(Generator, DeclGenUnaryAlwaysAccepted) {
  GenConfig cfg;
  cfg.strategy = Strategy::kDeclGen;
  cfg.op_whitelist = {"Relu"};
  const GenReport r = generate_corpus(cfg, 100, 1, [](uint64_t, const Graph&) {});
  EXPECT_EQ(r.graphs_rejected, 0u);
}

TEST(Generator, DeclGenAddAcceptanceMatchesAnalyticRate) {
  // Fresh inputs of rank 1..2 and lengths 1..5 agree with probability
  // (1/4)(1/5 + 1/25) = 0.06, so rejections per graph are geometric.
  GenConfig cfg;
  cfg.strategy = Strategy::kDeclGen;
  cfg.lb = cfg.ub = 1;
  cfg.max_dim = 2;
  cfg.max_len = 5;
  cfg.op_whitelist = {"Add"};
  const uint64_t n = 2000;
  const GenReport r = generate_corpus(cfg, n, 1, [](uint64_t, const Graph&) {});
  const double p = 0.06;
  const double mean = (1 - p) / p;
  const double sd = std::sqrt((1 - p) / (p * p) / static_cast<double>(n));
  EXPECT_NEAR(static_cast<double>(r.graphs_rejected) / n, mean, 4 * sd);
}

TEST(Generator, RandoopZeroRetriesSkipsSlots) {
  GenConfig cfg;
  cfg.strategy = Strategy::kRandoop;
  cfg.retry_limit = 0;
  cfg.ub = 20;
  const GenReport r = generate_corpus(cfg, 100, 1, [](uint64_t, const Graph&) {});
  EXPECT_EQ(r.slots_skipped, r.ops_rejected);
  EXPECT_GT(r.slots_skipped, 0u);
}

TEST(Generator, OpFrequencyMatchesGraphs) {
  GenConfig cfg;
  cfg.ub = 12;
  std::map<std::string, uint64_t> counted;
  const GenReport r = generate_corpus(cfg, 50, 1, [&](uint64_t, const Graph& g) {
    for (NodeId id : g.op_ids()) ++counted[g.op(id).type];
  });
  EXPECT_EQ(r.op_frequency, counted);
}

TEST(Generator, MetadataRecordsParameters) {
  GenConfig cfg;
  cfg.seed = 11;
  GenReport r;
  const Graph g = Generator(cfg).generate(4, r);
  ASSERT_TRUE(g.metadata().contains("parameters"));
  EXPECT_EQ(g.metadata()["parameters"]["seed"], 11u);
}

TEST(WriteCorpus, FileNames) {
  GenConfig cfg;
  cfg.strategy = Strategy::kRandoop;
  cfg.seed = 9;
  cfg.ub = 3;
  EXPECT_EQ(graph_file_name(cfg, 12), "randoop-9-12.json");
  const auto dir = std::filesystem::temp_directory_path() / "graphsmith_write_corpus_test";
  std::filesystem::remove_all(dir);
  write_corpus(cfg, 3, 1, dir);
  for (int i = 0; i < 3; ++i) {
    const auto path = dir / graph_file_name(cfg, i);
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(validate_graph(deserialize(ss.str()), builtin_registry()), "");
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "randoop-9-report.json"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace graphsmith
