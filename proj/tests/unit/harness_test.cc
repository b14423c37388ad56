#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "graphsmith/errors.h"
#include "graphsmith/harness.h"
#include "graphsmith/protocol.h"
#include "graphsmith/serialize.h"
#include "../support/graphs.h"

namespace graphsmith {
namespace {

namespace fs = std::filesystem;

TensorValue scalar(float x) {
  TensorValue t(TensorStruct{1});
  t.data[0] = x;
  return t;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("graphsmith_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

TEST(Compare, RelativeTolerance) {
  EXPECT_TRUE(compare(scalar(1.0f), scalar(1.05f), 0.1));
  EXPECT_FALSE(compare(scalar(1.0f), scalar(1.2f), 0.1));
  EXPECT_TRUE(compare(scalar(0.0f), scalar(1e-8f), 0.1));
  EXPECT_FALSE(compare(scalar(0.0f), scalar(1e-3f), 0.1));
  EXPECT_TRUE(compare(scalar(-100.0f), scalar(-95.0f), 0.1));
}

TEST(Compare, NonFinite) {
  EXPECT_TRUE(compare(scalar(NAN), scalar(NAN), 0.1));
  EXPECT_FALSE(compare(scalar(NAN), scalar(1.0f), 0.1));
  EXPECT_TRUE(compare(scalar(INFINITY), scalar(INFINITY), 0.1));
  EXPECT_FALSE(compare(scalar(INFINITY), scalar(-INFINITY), 0.1));
  EXPECT_FALSE(compare(scalar(INFINITY), scalar(3e38f), 0.1));
}

TEST(Compare, ShapeMismatch) {
  EXPECT_FALSE(compare(TensorValue(TensorStruct{2, 3}), TensorValue(TensorStruct{3, 2}), 0.1));
}

TEST(Protocol, OutputsRoundTrip) {
  OutputMap m;
  TensorValue t(TensorStruct{2, 2});
  t.data = {1.5f, NAN, INFINITY, -INFINITY};
  m.emplace(7, t);
  const OutputMap back = decode_outputs(nlohmann::json::parse(encode_outputs(m).dump()));
  ASSERT_EQ(back.size(), 1u);
  const auto& v = back.at(7);
  EXPECT_EQ(v.shape, t.shape);
  EXPECT_EQ(v.data[0], 1.5f);
  EXPECT_TRUE(std::isnan(v.data[1]));
  EXPECT_EQ(v.data[2], INFINITY);
  EXPECT_EQ(v.data[3], -INFINITY);
  EXPECT_THROW(decode_outputs(nlohmann::json::parse(R"({"x":{"shape":[1],"data":[1]}})")), Error);
  EXPECT_THROW(decode_outputs(nlohmann::json::parse(R"({"1":{"shape":[1],"data":["zero"]}})")), Error);
}

TEST(Protocol, Hello) {
  const auto r = handle_request({{"op", "hello"}}, {});
  EXPECT_EQ(r["version"], kProtocolVersion);
  EXPECT_GT(r["ops"].size(), 20u);
  ServeOptions only;
  only.ops = {"Add", "Relu"};
  EXPECT_EQ(handle_request({{"op", "hello"}}, only)["ops"], nlohmann::json({"Add", "Relu"}));
}

TEST(Protocol, RunMatchesExecutor) {
  const Graph g = testing::add_concat_graph();
  const auto r = handle_request({{"op", "run"}, {"graph", graph_to_json(g)}, {"data_seed", 5u}}, {});
  ASSERT_EQ(r["status"], "ok") << r.dump();
  const OutputMap got = decode_outputs(r["outputs"]);
  const OutputMap want = execute(g, synth_inputs(g, 5, builtin_registry()), builtin_registry());
  ASSERT_EQ(got.size(), want.size());
  for (const auto& [e, v] : want) EXPECT_TRUE(compare(v, got.at(e), 1e-6));
}

TEST(Protocol, Errors) {
  EXPECT_EQ(handle_request({{"op", "dance"}}, {})["code"], "protocol");
  EXPECT_EQ(handle_request(nlohmann::json::array(), {})["code"], "protocol");
  EXPECT_EQ(handle_request({{"op", "run"}}, {})["code"], "protocol");
  EXPECT_EQ(handle_request({{"op", "run"}, {"graph", 3}, {"data_seed", 1u}}, {})["code"], "protocol");
  ServeOptions only;
  only.ops = {"Relu"};
  const auto r = handle_request({{"op", "run"}, {"graph", graph_to_json(testing::add_concat_graph())}, {"data_seed", 1u}}, only);
  EXPECT_EQ(r["status"], "error");
  EXPECT_EQ(r["code"], "unsupported");
}

TEST(Protocol, ServeLoop) {
  std::istringstream in("{\"op\":\"hello\"}\nnot json\n\n{\"op\":\"hello\"}\n");
  std::ostringstream out;
  serve(in, out, {});
  std::istringstream lines(out.str());
  std::string line;
  std::vector<nlohmann::json> responses;
  while (std::getline(lines, line)) responses.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(responses.size(), 3u);
  EXPECT_EQ(responses[1]["code"], "protocol");
  EXPECT_EQ(responses[2]["version"], 1);
}

TEST(Signature, NormalizeMessage) {
  EXPECT_EQ(normalize_message("bad shape at node 17 (size 42)"), "bad shape at node <id> (size <n>)");
  EXPECT_EQ(normalize_message("cannot open /tmp/x/y.json"), "cannot open <path>");
  EXPECT_EQ(normalize_message("ptr 0xdeadBEEF"), "ptr <hex>");
  EXPECT_EQ(normalize_message("edge 3 and edge 12"), normalize_message("edge 9 and edge 1"));
  EXPECT_EQ(first_frame("\n  #0 foo() at bar.cc:12\n#1 main"), "#<n> foo() at bar.cc:<n>");
  EXPECT_EQ(first_frame(""), "");
  EXPECT_EQ(make_signature("crash", "b", "m 1", ""), make_signature("crash", "b", "m 2", ""));
  EXPECT_NE(make_signature("crash", "a", "m", ""), make_signature("crash", "b", "m", ""));
}

FailureRecord sample_record(const std::string& sig) {
  FailureRecord r;
  r.kind = "error";
  r.backends = {"b"};
  r.signature = sig;
  r.messages = {"boom"};
  r.gen_seed = 1;
  r.graph_index = 2;
  r.data_seed = 3;
  return r;
}

TEST(FailureStore, DedupAndReload) {
  const auto dir = fresh_dir("store");
  {
    FailureStore store(dir);
    EXPECT_TRUE(store.record(sample_record("s1"), testing::add_concat_graph()));
    EXPECT_FALSE(store.record(sample_record("s1"), testing::add_concat_graph()));
    EXPECT_TRUE(store.record(sample_record("s0"), testing::relu_chain(2)));
    store.save();
    ASSERT_EQ(store.records().size(), 2u);
    EXPECT_EQ(store.records().at("s1").count, 2u);
    EXPECT_EQ(store.records().at("s1").id.size(), 16u);
  }
  FailureStore again(dir);
  ASSERT_EQ(again.records().size(), 2u);
  const FailureRecord& r = again.records().at("s1");
  EXPECT_EQ(r.count, 2u);
  EXPECT_EQ(r.data_seed, 3u);
  EXPECT_EQ(again.find(r.id), &r);
  EXPECT_EQ(again.find("nope"), nullptr);
  EXPECT_TRUE(fs::exists(dir / r.graph_path));
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  // sorted by signature
  std::ifstream in(dir / "failures.jsonl");
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(nlohmann::json::parse(first)["signature"], "s0");
  fs::remove_all(dir);
}

CampaignConfig small_campaign(uint64_t num) {
  CampaignConfig cfg;
  cfg.gen.seed = 21;
  cfg.gen.ub = 10;
  cfg.num = num;
  cfg.data_seed = 100;
  return cfg;
}

TEST(Campaign, ReferenceAgainstItselfIsClean) {
  const auto dir = fresh_dir("clean");
  ReferenceBackend a, b("reference2");
  FailureStore store(dir);
  const auto r = fuzz_campaign(small_campaign(100), {&a, &b}, store);
  EXPECT_EQ(r.graphs, 100u);
  EXPECT_EQ(r.runs, 200u);
  EXPECT_EQ(r.failures, 0u);
  EXPECT_TRUE(store.records().empty());
  fs::remove_all(dir);
}

TEST(Campaign, MutantGivesOneSignatureAndReplays) {
  const auto dir = fresh_dir("mutant");
  ReferenceBackend ref;
  auto mutant = make_mutant_backend();
  FailureStore store(dir);
  const auto r = fuzz_campaign(small_campaign(200), {&ref, mutant.get()}, store);
  ASSERT_EQ(store.records().size(), 1u);
  EXPECT_GT(r.failures, 0u);
  const FailureRecord& rec = store.records().begin()->second;
  EXPECT_EQ(rec.kind, "inconsistency");
  EXPECT_EQ(rec.count, r.failures);

  // The reproducer holds an Add.
  const Graph g = deserialize([&] {
    std::ifstream in(dir / rec.graph_path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }());
  bool has_add = false;
  for (NodeId id : g.op_ids()) has_add |= g.op(id).type == "Add";
  EXPECT_TRUE(has_add);

  const auto rep1 = replay(rec, dir, {&ref, mutant.get()}, 0.1);
  const auto rep2 = replay(rec, dir, {&ref, mutant.get()}, 0.1);
  EXPECT_TRUE(rep1.reproduced);
  EXPECT_EQ(rep1.signatures, rep2.signatures);
  EXPECT_FALSE(replay(rec, dir, {&ref}, 0.1).reproduced);

  // A second campaign over the same stream adds no signatures.
  FailureStore again(dir);
  EXPECT_EQ(fuzz_campaign(small_campaign(200), {&ref, mutant.get()}, again).new_signatures, 0u);
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------

std::string ref_backend(const std::string& flags = "") { return std::string(GRAPHSMITH_REF_BACKEND) + " " + flags; }

Graph graph_with(const std::string& type) {
  Graph g;
  const EdgeId a = g.add_placeholder({2, 2});
  if (type == "MatMul") {
    g.add_op("MatMul", {}, {a, g.add_placeholder({2, 2})}, {{2, 2}});
  } else {
    g.add_op(type, {}, {a}, {{2, 2}});
  }
  return g;
}

TEST(ProcessBackend, MatchesReference) {
  ProcessBackend p("proc", ref_backend(), 10);
  EXPECT_EQ(p.protocol_version(), 1);
  ReferenceBackend ref;
  EXPECT_EQ(p.supported_ops(), ref.supported_ops());
  GenConfig cfg;
  cfg.seed = 5;
  cfg.ub = 8;
  generate_corpus(cfg, 20, 1, [&](uint64_t i, const Graph& g) {
    EXPECT_TRUE(check_graph(g, i, {&ref, &p}, 1e-6).empty()) << "graph " << i;
  });
}

TEST(ProcessBackend, MutateAddIsInconsistent) {
  ProcessBackend p("proc", ref_backend("--mutate-add"), 10);
  ReferenceBackend ref;
  const auto f = check_graph(testing::add_concat_graph(), 1, {&ref, &p}, 0.1);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].kind, "inconsistency");
  EXPECT_EQ(f[0].backend, "proc");
}

TEST(ProcessBackend, CrashThenRelaunch) {
  ProcessBackend p("proc", ref_backend("--crash-on-op Exp"), 10);
  const RunResult crash = p.run(graph_with("Exp"), 1);
  EXPECT_EQ(crash.status, RunResult::Status::kCrash);
  EXPECT_NE(crash.message.find("signal"), std::string::npos) << crash.message;
  EXPECT_EQ(p.run(graph_with("Relu"), 1).status, RunResult::Status::kOk);
}

TEST(ProcessBackend, TimeoutThenRelaunch) {
  ProcessBackend p("proc", ref_backend("--hang-on-op MatMul"), 0.5);
  const RunResult hang = p.run(graph_with("MatMul"), 1);
  EXPECT_EQ(hang.status, RunResult::Status::kTimeout);
  EXPECT_EQ(p.run(graph_with("Relu"), 1).status, RunResult::Status::kOk);
}

TEST(ProcessBackend, AdvertisedSubset) {
  ProcessBackend p("proc", ref_backend("--ops Relu,Exp"), 10);
  EXPECT_EQ(p.supported_ops(), (std::set<std::string>{"Exp", "Relu"}));
  EXPECT_FALSE(p.supports(testing::add_concat_graph()));
  EXPECT_TRUE(p.supports(testing::relu_chain(3)));
  ReferenceBackend ref;
  uint64_t skipped = 0;
  EXPECT_TRUE(check_graph(testing::add_concat_graph(), 1, {&ref, &p}, 0.1, &skipped).empty());
  EXPECT_EQ(skipped, 1u);
}

TEST(ProcessBackend, LaunchFailures) {
  EXPECT_THROW(ProcessBackend("x", "/nonexistent/backend", 2), BackendLaunchError);
  EXPECT_THROW(ProcessBackend("x", "echo not-json", 2), BackendLaunchError);
  EXPECT_THROW(ProcessBackend("x", "echo '{\"ops\":[],\"version\":99}'", 2), BackendLaunchError);
}

TEST(ProcessBackend, CampaignRecordsEachFaultOnce) {
  const auto dir = fresh_dir("faults");
  ReferenceBackend ref;
  ProcessBackend crash("crashy", ref_backend("--crash-on-op Conv"), 10);
  ProcessBackend mutant("mutant", ref_backend("--mutate-add"), 10);
  FailureStore store(dir);
  auto cfg = small_campaign(60);
  cfg.gen.op_whitelist = {"Add", "Conv", "Relu"};
  fuzz_campaign(cfg, {&ref, &crash, &mutant}, store);
  std::map<std::string, int> kinds;
  for (const auto& [sig, r] : store.records()) ++kinds[r.kind + "/" + r.backends[0]];
  EXPECT_EQ(kinds["crash/crashy"], 1);
  EXPECT_EQ(kinds["inconsistency/mutant"], 1);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace graphsmith
