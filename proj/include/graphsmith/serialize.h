#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "graphsmith/graph.h"

namespace graphsmith {

inline constexpr int kGraphFormatVersion = 1;

// Canonical graph JSON. Object keys are sorted and arrays are in id order,
// so equal graphs serialize to equal bytes.
nlohmann::json graph_to_json(const Graph& g);
std::string serialize(const Graph& g);

// Throws SchemaError naming the offending JSON path.
Graph graph_from_json(const nlohmann::json& j);
Graph deserialize(std::string_view bytes);

}  // namespace graphsmith
