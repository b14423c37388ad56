#pragma once

#include <string>

#include "graphsmith/harness.h"
#include "graphsmith/solver.h"
#include "oracles.h"

namespace graphsmith::testing {

struct KernelCheck {
  int cases = 0;
  int mismatches = 0;
  std::string first_failure;
};

// Random valid (attrs, shapes) from the solver, random data in [-1, 1]
// ([0.5, 1.5] on divisor slots), kernel versus oracle at relative tolerance.
inline KernelCheck check_kernel(const OpSpec& op, int cases, uint64_t seed, double rel_tol = 1e-5) {
  KernelCheck r;
  const Oracle& oracle = oracles().at(op.name);
  Rng rng(seed);
  for (int c = 0; c < cases; ++c) {
    const int k = op.indegrees[rng.index(op.indegrees.size())];
    const OpSolution sol = solve_op(op, k, {}, 0.0, rng, {4, 4});
    std::vector<TensorValue> ins;
    for (size_t slot = 0; slot < sol.input_shapes.size(); ++slot) {
      const bool divisor = std::count(op.divisor_inputs.begin(), op.divisor_inputs.end(), static_cast<int>(slot)) > 0;
      TensorValue v(sol.input_shapes[slot]);
      for (auto& x : v.data) x = static_cast<float>(divisor ? 0.5 + rng.unit() : 2 * rng.unit() - 1);
      ins.push_back(std::move(v));
    }
    const auto got = op.kernel(sol.attrs, ins);
    const auto want = oracle(sol.attrs, ins);
    ++r.cases;
    bool ok = got.size() == want.size();
    for (size_t i = 0; ok && i < got.size(); ++i) ok = compare(want[i], got[i], rel_tol);
    if (!ok) {
      ++r.mismatches;
      if (r.first_failure.empty()) {
        std::string shapes;
        for (const auto& s : sol.input_shapes) shapes += to_string(s);
        r.first_failure = op.name + " " + shapes;
      }
    }
  }
  return r;
}

}  // namespace graphsmith::testing
