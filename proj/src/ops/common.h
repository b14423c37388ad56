#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "graphsmith/dsl.h"
#include "graphsmith/opspec.h"

namespace graphsmith::ops {

void register_elementwise(Registry& r);
void register_reduce(Registry& r);
void register_shape(Registry& r);
void register_nn(Registry& r);

// dim(k) = dim(0) and every length of input k equals input 0's.
std::vector<dsl::Constraint> same_shape_as_first(int indegree);
bool all_same_shape(ShapeSpan in);

// Row-major strides.
std::vector<int64_t> strides_of(const TensorStruct& s);

// Splits a shape around a 1-based axis: product before, length at, product after.
struct AxisView {
  int64_t outer = 1;
  int64_t n = 1;
  int64_t inner = 1;
};
AxisView axis_view(const TensorStruct& s, int64_t axis);

// Calls f(index) for every multi-index of `s` in row-major order.
void for_each_index(const TensorStruct& s, const std::function<void(const std::vector<int64_t>&)>& f);

inline std::vector<TensorStruct> one(TensorStruct s) { return {std::move(s)}; }

}  // namespace graphsmith::ops
