#include "graphsmith/executor.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "graphsmith/errors.h"
#include "graphsmith/rng.h"

namespace graphsmith {

bool is_divisor_placeholder(const Graph& g, NodeId placeholder, const Registry& registry) {
  const Edge& e = g.edge(g.placeholder(placeholder).output);
  for (const Port& c : e.consumers) {
    const OpSpec* spec = registry.find(g.op(c.node).type);
    if (!spec) continue;
    const auto& d = spec->divisor_inputs;
    if (std::find(d.begin(), d.end(), static_cast<int>(c.slot)) != d.end()) return true;
  }
  return false;
}

InputMap synth_inputs(const Graph& g, uint64_t data_seed, const Registry& registry) {
  SplitMix64 rng(data_seed);
  InputMap out;
  for (NodeId id : g.placeholder_ids()) {
    const auto& ph = g.placeholder(id);
    const bool divisor = is_divisor_placeholder(g, id, registry);
    TensorValue v(ph.shape);
    for (float& x : v.data) {
      const auto k = static_cast<int64_t>(rng.next() >> 40);
      if (divisor) x = static_cast<float>(static_cast<double>(k + (int64_t{1} << 23)) / 16777216.0);
      else x = static_cast<float>(static_cast<double>(2 * k - (int64_t{1} << 24)) / 16777216.0);
    }
    out.emplace(id, std::move(v));
  }
  return out;
}

std::vector<std::string> unsupported_ops(const Graph& g, const Registry& registry) {
  std::set<std::string> missing;
  for (NodeId id : g.op_ids()) {
    const auto& type = g.op(id).type;
    const OpSpec* spec = registry.find(type);
    if (!spec || !spec->has_kernel()) missing.insert(type);
  }
  return {missing.begin(), missing.end()};
}

namespace {

bool all_finite(const TensorValue& v) {
  return std::all_of(v.data.begin(), v.data.end(), [](float x) { return std::isfinite(x); });
}

}  // namespace

OutputMap execute(const Graph& g, const InputMap& inputs, const Registry& registry, const ExecOptions& options) {
  if (auto missing = unsupported_ops(g, registry); !missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw UnsupportedOp("no numeric kernel for: " + names);
  }
  std::vector<TensorValue> values(g.edges().size());
  for (NodeId id : topo_order(g)) {
    if (!g.is_op(id)) {
      const auto& ph = g.placeholder(id);
      auto it = inputs.find(id);
      if (it == inputs.end()) throw PreconditionError("no data for placeholder " + std::to_string(id));
      if (it->second.shape != ph.shape || it->second.data.size() != static_cast<size_t>(ph.shape.volume())) {
        throw PreconditionError("data for placeholder " + std::to_string(id) + " has the wrong shape");
      }
      values[static_cast<size_t>(ph.output)] = it->second;
      continue;
    }
    const OpNode& op = g.op(id);
    std::vector<TensorValue> ins;
    ins.reserve(op.inputs.size());
    for (EdgeId e : op.inputs) ins.push_back(values[static_cast<size_t>(e)]);
    const OpSpec& spec = registry.get(op.type);
    auto ov = options.kernel_overrides.find(op.type);
    const Kernel& kernel = ov != options.kernel_overrides.end() ? ov->second : spec.kernel;
    std::vector<TensorValue> outs = kernel(op.attrs, ins);
    if (outs.size() != op.outputs.size()) {
      throw Error(op.type + " (node " + std::to_string(id) + "): kernel produced the wrong number of outputs");
    }
    for (size_t i = 0; i < outs.size(); ++i) {
      const EdgeId e = op.outputs[i];
      if (outs[i].shape != g.edge(e).shape) {
        throw Error(op.type + " (node " + std::to_string(id) + "): kernel output shape " + to_string(outs[i].shape) +
                    " differs from " + to_string(g.edge(e).shape));
      }
      if (options.strict && !all_finite(outs[i]) && std::all_of(ins.begin(), ins.end(), all_finite)) {
        throw NumericError(op.type + " (node " + std::to_string(id) + "): non-finite result");
      }
      values[static_cast<size_t>(e)] = std::move(outs[i]);
    }
  }
  OutputMap out;
  for (EdgeId e : g.output_edges()) out.emplace(e, std::move(values[static_cast<size_t>(e)]));
  return out;
}

}  // namespace graphsmith
