#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphsmith/executor.h"
#include "graphsmith/generator.h"

namespace graphsmith {

// |a - b| <= rel_tol * max(|a|, |b|, 1e-6) for every element, with matching
// NaN and Inf status (infinities must also agree in sign). Shapes must match.
bool compare(const TensorValue& a, const TensorValue& b, double rel_tol);

struct RunResult {
  enum class Status { kOk, kError, kCrash, kTimeout };
  Status status = Status::kOk;
  OutputMap outputs;
  std::string message;
  std::string trace;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const std::string& name() const = 0;
  virtual const std::set<std::string>& supported_ops() const = 0;
  virtual RunResult run(const Graph& g, uint64_t data_seed) = 0;

  bool supports(const Graph& g) const;
};

// The executor, in process. Overrides replace kernels by op name.
class ReferenceBackend : public Backend {
 public:
  explicit ReferenceBackend(std::string name = "reference", ExecOptions options = {},
                            const Registry& registry = builtin_registry());
  const std::string& name() const override { return name_; }
  const std::set<std::string>& supported_ops() const override { return ops_; }
  RunResult run(const Graph& g, uint64_t data_seed) override;

 private:
  std::string name_;
  ExecOptions options_;
  const Registry* registry_;
  std::set<std::string> ops_;
};

// Reference executor whose Add kernel computes a - b.
std::unique_ptr<Backend> make_mutant_backend();

// External process speaking the adapter protocol, launched via /bin/sh -c.
// A backend that times out or dies is killed and relaunched for the next
// graph. Throws BackendLaunchError when the handshake fails.
class ProcessBackend : public Backend {
 public:
  ProcessBackend(std::string name, std::string command, double timeout_seconds);
  ~ProcessBackend() override;
  ProcessBackend(const ProcessBackend&) = delete;
  ProcessBackend& operator=(const ProcessBackend&) = delete;

  const std::string& name() const override { return name_; }
  const std::set<std::string>& supported_ops() const override { return ops_; }
  RunResult run(const Graph& g, uint64_t data_seed) override;

  const std::string& command() const { return command_; }
  int protocol_version() const { return version_; }

 private:
  void launch();
  void stop();
  bool send(const std::string& line);
  // Reads one line from the child's stdout; nullopt on EOF or timeout
  // (`timed_out` tells which).
  std::optional<std::string> receive(double seconds, bool& timed_out);
  std::string drain_stderr();
  std::string exit_description();

  std::string name_;
  std::string command_;
  double timeout_;
  int version_ = 0;
  std::set<std::string> ops_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int err_child_ = -1;
  std::string buffer_;
  std::string err_buffer_;
  int last_status_ = 0;
};

// Digits, 0x-hex literals, absolute paths and node ids are replaced so that
// the same underlying failure maps to the same text.
std::string normalize_message(const std::string& message);

// First non-empty line of a stack trace, normalized; empty if none.
std::string first_frame(const std::string& trace);

struct FailureRecord {
  std::string id;    // hex FNV-1a of the signature
  std::string kind;  // crash | error | inconsistency | timeout
  std::vector<std::string> backends;
  std::string signature;
  std::string graph_path;  // relative to the store directory
  uint64_t gen_seed = 0;
  uint64_t graph_index = 0;
  uint64_t data_seed = 0;
  std::vector<std::string> messages;
  std::string first_seen;
  uint64_t count = 1;
  nlohmann::json gen_config;

  nlohmann::json to_json() const;
  static FailureRecord from_json(const nlohmann::json& j);
};

std::string make_signature(const std::string& kind, const std::string& backend, const std::string& message,
                           const std::string& trace);

// One record per signature; failures.jsonl (one record per line, sorted by
// signature) plus summary.json in `dir`. Reproducer graphs go to dir/graphs.
class FailureStore {
 public:
  explicit FailureStore(std::filesystem::path dir);

  // Inserts a new record (saving `g` as its reproducer) or increments the
  // count of the existing one. Returns true when the signature is new.
  bool record(FailureRecord rec, const Graph& g);

  const std::map<std::string, FailureRecord>& records() const { return records_; }
  const FailureRecord* find(const std::string& id) const;
  void save() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, FailureRecord> records_;  // by signature
};

struct CampaignConfig {
  GenConfig gen;
  uint64_t num = 100;
  double rel_tol = 0.1;
  uint64_t data_seed = 0;  // data seed of graph i is data_seed + i
  int jobs = 1;
};

struct CampaignResult {
  uint64_t graphs = 0;
  uint64_t runs = 0;
  uint64_t skipped = 0;  // backend lacked an op of the graph
  uint64_t failures = 0; // failing (graph, backend) pairs before dedup
  uint64_t new_signatures = 0;
  std::map<std::string, uint64_t> by_kind;
  nlohmann::json to_json() const;
};

// One observed failure on one graph.
struct Finding {
  std::string kind;
  std::string backend;
  std::string message;
  std::string trace;
};

// Runs one graph on every backend; backends[0] is the reference the others
// are compared against.
std::vector<Finding> check_graph(const Graph& g, uint64_t data_seed, const std::vector<Backend*>& backends,
                                 double rel_tol, uint64_t* skipped = nullptr, uint64_t* runs = nullptr);

CampaignResult fuzz_campaign(const CampaignConfig& cfg, const std::vector<Backend*>& backends, FailureStore& store);

struct ReplayResult {
  bool reproduced = false;
  std::vector<Finding> findings;
  std::vector<std::string> signatures;
};

// Re-runs the record's reproducer graph (relative to the store directory)
// with its data seed.
ReplayResult replay(const FailureRecord& rec, const std::filesystem::path& store_dir,
                    const std::vector<Backend*>& backends, double rel_tol);

}  // namespace graphsmith
