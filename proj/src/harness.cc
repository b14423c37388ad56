#include "graphsmith/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>

#include "graphsmith/errors.h"
#include "graphsmith/hash.h"
#include "graphsmith/serialize.h"

namespace graphsmith {

bool compare(const TensorValue& a, const TensorValue& b, double rel_tol) {
  if (a.shape != b.shape || a.data.size() != b.data.size()) return false;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double x = a.data[i], y = b.data[i];
    if (std::isnan(x) || std::isnan(y)) {
      if (std::isnan(x) != std::isnan(y)) return false;
      continue;
    }
    if (std::isinf(x) || std::isinf(y)) {
      if (x != y) return false;
      continue;
    }
    const double scale = std::max({std::fabs(x), std::fabs(y), 1e-6});
    if (std::fabs(x - y) > rel_tol * scale) return false;
  }
  return true;
}

bool Backend::supports(const Graph& g) const {
  const auto& ops = supported_ops();
  for (NodeId id : g.op_ids())
    if (!ops.count(g.op(id).type)) return false;
  return true;
}

// ---------------------------------------------------------------------------

ReferenceBackend::ReferenceBackend(std::string name, ExecOptions options, const Registry& registry)
    : name_(std::move(name)), options_(std::move(options)), registry_(&registry) {
  for (const auto& spec : registry.ops())
    if (spec->has_kernel()) ops_.insert(spec->name);
}

RunResult ReferenceBackend::run(const Graph& g, uint64_t data_seed) {
  RunResult r;
  try {
    r.outputs = execute(g, synth_inputs(g, data_seed, *registry_), *registry_, options_);
  } catch (const std::exception& e) {
    r.status = RunResult::Status::kError;
    r.message = e.what();
  }
  return r;
}

std::unique_ptr<Backend> make_mutant_backend() {
  ExecOptions options;
  options.kernel_overrides["Add"] = [](const AttrMap&, ValueSpan in) {
    TensorValue out(in[0].shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = in[0].data[i] - in[1].data[i];
    return std::vector<TensorValue>{std::move(out)};
  };
  return std::make_unique<ReferenceBackend>("mutant", std::move(options));
}

// ---------------------------------------------------------------------------

std::string normalize_message(const std::string& message) {
  static const std::regex path(R"((^|[\s'"(=])(/[^\s'":]+)+)");
  static const std::regex hex(R"(0[xX][0-9a-fA-F]+)");
  static const std::regex node(R"(\b(node|edge|op)\s*#?\s*\d+)", std::regex::icase);
  static const std::regex digits(R"(\d+)");
  std::string s = std::regex_replace(message, path, "$1<path>");
  s = std::regex_replace(s, hex, "<hex>");
  s = std::regex_replace(s, node, "$1 <id>");
  s = std::regex_replace(s, digits, "<n>");
  return s;
}

std::string first_frame(const std::string& trace) {
  std::istringstream in(trace);
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t");
    if (b != std::string::npos) return normalize_message(line.substr(b));
  }
  return {};
}

std::string make_signature(const std::string& kind, const std::string& backend, const std::string& message,
                           const std::string& trace) {
  return kind + "|" + backend + "|" + normalize_message(message) + "|" + first_frame(trace);
}

namespace {

std::string hex_id(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

nlohmann::json FailureRecord::to_json() const {
  return {{"id", id},
          {"kind", kind},
          {"backends", backends},
          {"signature", signature},
          {"graph_path", graph_path},
          {"gen_seed", gen_seed},
          {"graph_index", graph_index},
          {"data_seed", data_seed},
          {"messages", messages},
          {"first_seen", first_seen},
          {"count", count},
          {"gen_config", gen_config}};
}

FailureRecord FailureRecord::from_json(const nlohmann::json& j) {
  FailureRecord r;
  r.id = j.at("id");
  r.kind = j.at("kind");
  r.backends = j.at("backends").get<std::vector<std::string>>();
  r.signature = j.at("signature");
  r.graph_path = j.at("graph_path");
  r.gen_seed = j.at("gen_seed");
  r.graph_index = j.at("graph_index");
  r.data_seed = j.at("data_seed");
  r.messages = j.at("messages").get<std::vector<std::string>>();
  r.first_seen = j.at("first_seen");
  r.count = j.at("count");
  r.gen_config = j.value("gen_config", nlohmann::json::object());
  return r;
}

FailureStore::FailureStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::ifstream in(dir_ / "failures.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    FailureRecord r = FailureRecord::from_json(nlohmann::json::parse(line));
    records_.emplace(r.signature, std::move(r));
  }
}

bool FailureStore::record(FailureRecord rec, const Graph& g) {
  auto it = records_.find(rec.signature);
  if (it != records_.end()) {
    it->second.count += rec.count;
    return false;
  }
  rec.id = hex_id(fnv1a(rec.signature));
  rec.graph_path = "graphs/" + rec.id + ".json";
  if (rec.first_seen.empty()) rec.first_seen = utc_now();
  std::filesystem::create_directories(dir_ / "graphs");
  std::ofstream out(dir_ / rec.graph_path, std::ios::binary);
  out << serialize(g);
  if (!out) throw Error("cannot write " + (dir_ / rec.graph_path).string());
  records_.emplace(rec.signature, std::move(rec));
  return true;
}

const FailureRecord* FailureStore::find(const std::string& id) const {
  for (const auto& [sig, r] : records_)
    if (r.id == id) return &r;
  return nullptr;
}

void FailureStore::save() const {
  std::filesystem::create_directories(dir_);
  std::ofstream out(dir_ / "failures.jsonl");
  std::map<std::string, uint64_t> by_kind;
  uint64_t total = 0;
  for (const auto& [sig, r] : records_) {
    out << r.to_json().dump() << "\n";
    by_kind[r.kind] += 1;
    total += r.count;
  }
  nlohmann::json summary = {{"signatures", records_.size()}, {"occurrences", total}, {"by_kind", by_kind}};
  std::ofstream(dir_ / "summary.json") << summary.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

nlohmann::json CampaignResult::to_json() const {
  return {{"graphs", graphs}, {"runs", runs}, {"skipped", skipped}, {"failures", failures},
          {"new_signatures", new_signatures}, {"by_kind", by_kind}};
}

namespace {

std::string kind_of(RunResult::Status s) {
  switch (s) {
    case RunResult::Status::kOk: return "ok";
    case RunResult::Status::kError: return "error";
    case RunResult::Status::kCrash: return "crash";
    case RunResult::Status::kTimeout: return "timeout";
  }
  return "?";
}

// Compares a backend's outputs with the reference's; empty when consistent.
std::string mismatch(const OutputMap& ref, const OutputMap& got, double rel_tol) {
  for (const auto& [edge, value] : ref) {
    auto it = got.find(edge);
    if (it == got.end()) return "missing output";
    if (it->second.shape != value.shape) return "output shape mismatch";
    if (!compare(value, it->second, rel_tol)) return "output mismatch";
  }
  if (got.size() != ref.size()) return "unexpected output";
  return {};
}

}  // namespace

std::vector<Finding> check_graph(const Graph& g, uint64_t data_seed, const std::vector<Backend*>& backends,
                                 double rel_tol, uint64_t* skipped, uint64_t* runs) {
  std::vector<Finding> findings;
  if (backends.empty()) return findings;
  Backend& ref = *backends[0];
  if (!ref.supports(g)) {
    if (skipped) ++*skipped;
    return findings;
  }
  const RunResult base = ref.run(g, data_seed);
  if (runs) ++*runs;
  if (base.status != RunResult::Status::kOk) {
    findings.push_back({kind_of(base.status), ref.name(), base.message, base.trace});
    return findings;
  }
  for (size_t b = 1; b < backends.size(); ++b) {
    Backend& other = *backends[b];
    if (!other.supports(g)) {
      if (skipped) ++*skipped;
      continue;
    }
    const RunResult r = other.run(g, data_seed);
    if (runs) ++*runs;
    if (r.status != RunResult::Status::kOk) {
      findings.push_back({kind_of(r.status), other.name(), r.message, r.trace});
      continue;
    }
    if (auto m = mismatch(base.outputs, r.outputs, rel_tol); !m.empty()) {
      findings.push_back({"inconsistency", other.name(), m, ""});
    }
  }
  return findings;
}

CampaignResult fuzz_campaign(const CampaignConfig& cfg, const std::vector<Backend*>& backends, FailureStore& store) {
  if (backends.empty()) throw ConfigError("a campaign needs at least one backend");
  CampaignResult result;
  generate_corpus(cfg.gen, cfg.num, cfg.jobs, [&](uint64_t index, const Graph& g) {
    ++result.graphs;
    const uint64_t data_seed = cfg.data_seed + index;
    for (const Finding& f : check_graph(g, data_seed, backends, cfg.rel_tol, &result.skipped, &result.runs)) {
      ++result.failures;
      ++result.by_kind[f.kind];
      FailureRecord rec;
      rec.kind = f.kind;
      rec.backends = {f.backend};
      rec.signature = make_signature(f.kind, f.backend, f.message, f.trace);
      rec.gen_seed = cfg.gen.seed;
      rec.graph_index = index;
      rec.data_seed = data_seed;
      rec.messages = {f.message};
      if (!f.trace.empty()) rec.messages.push_back(f.trace);
      rec.gen_config = cfg.gen.to_json();
      if (store.record(std::move(rec), g)) ++result.new_signatures;
    }
  });
  store.save();
  return result;
}

ReplayResult replay(const FailureRecord& rec, const std::filesystem::path& store_dir,
                    const std::vector<Backend*>& backends, double rel_tol) {
  std::ifstream in(store_dir / rec.graph_path, std::ios::binary);
  if (!in) throw Error("cannot read reproducer " + (store_dir / rec.graph_path).string());
  std::stringstream ss;
  ss << in.rdbuf();
  const Graph g = deserialize(ss.str());
  ReplayResult r;
  r.findings = check_graph(g, rec.data_seed, backends, rel_tol);
  for (const auto& f : r.findings) {
    r.signatures.push_back(make_signature(f.kind, f.backend, f.message, f.trace));
    if (r.signatures.back() == rec.signature) r.reproduced = true;
  }
  return r;
}

}  // namespace graphsmith
