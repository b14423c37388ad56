#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "graphsmith/graph.h"
#include "graphsmith/opspec.h"
#include "graphsmith/tensor_value.h"

namespace graphsmith {

using InputMap = std::map<NodeId, TensorValue>;   // placeholder id -> data
using OutputMap = std::map<EdgeId, TensorValue>;  // output edge id -> data

// Placeholder data from one SplitMix64 stream seeded with data_seed.
// Placeholders are filled in ascending node id, elements in row-major order;
// each element takes k = next() >> 40 and becomes (2k - 2^24) / 2^24, in
// [-1, 1). A placeholder feeding a divisor-flagged slot (Div's denominator,
// Pow's base) becomes (k + 2^23) / 2^24 rounded to float32, in [0.5, 1.5].
InputMap synth_inputs(const Graph& g, uint64_t data_seed, const Registry& registry = builtin_registry());

// True when the placeholder feeds at least one divisor-flagged slot.
bool is_divisor_placeholder(const Graph& g, NodeId placeholder, const Registry& registry);

struct ExecOptions {
  // Raise NumericError when an op turns finite inputs into non-finite output.
  bool strict = false;
  // Kernels used instead of the registry's, by op name.
  std::map<std::string, Kernel> kernel_overrides;
};

// Op types in g without a numeric kernel, sorted, unique.
std::vector<std::string> unsupported_ops(const Graph& g, const Registry& registry = builtin_registry());

// Evaluates g in topological order and returns the values of the output
// edges (edges with no consumer). Throws UnsupportedOp if any op lacks a
// kernel.
OutputMap execute(const Graph& g, const InputMap& inputs, const Registry& registry = builtin_registry(),
                  const ExecOptions& options = {});

}  // namespace graphsmith
