#pragma once

#include <vector>

#include "graphsmith/tensor.h"

namespace graphsmith {

// Row-major float32 tensor.
struct TensorValue {
  TensorStruct shape;
  std::vector<float> data;

  TensorValue() = default;
  explicit TensorValue(TensorStruct s) : shape(std::move(s)), data(static_cast<size_t>(shape.volume()), 0.0f) {}
  TensorValue(TensorStruct s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {}

  bool operator==(const TensorValue&) const = default;
};

}  // namespace graphsmith
