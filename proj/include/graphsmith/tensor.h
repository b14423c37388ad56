#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace graphsmith {

enum class DType { kFloat32 };

inline const char* dtype_name(DType) { return "float32"; }

// Structure of a tensor: dimension count plus per-dimension lengths.
struct TensorStruct {
  std::vector<int64_t> lens;
  DType dtype = DType::kFloat32;

  TensorStruct() = default;
  TensorStruct(std::vector<int64_t> l) : lens(std::move(l)) {}  // NOLINT
  TensorStruct(std::initializer_list<int64_t> l) : lens(l) {}

  int64_t dim() const { return static_cast<int64_t>(lens.size()); }

  // 1-based, matching the attribute convention of the graph format.
  int64_t at(int64_t i) const { return lens.at(static_cast<size_t>(i - 1)); }

  int64_t volume() const {
    int64_t v = 1;
    for (int64_t l : lens) v *= l;
    return v;
  }

  bool operator==(const TensorStruct&) const = default;
  auto operator<=>(const TensorStruct&) const = default;
};

std::string to_string(const TensorStruct& s);

}  // namespace graphsmith
