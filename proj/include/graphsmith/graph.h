#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphsmith/tensor.h"

namespace graphsmith {

using NodeId = int64_t;
using EdgeId = int64_t;

// Attribute values are integers or integer lists. Axis-like attributes are
// 1-based.
using AttrValue = std::variant<int64_t, std::vector<int64_t>>;
using AttrMap = std::map<std::string, AttrValue>;

inline constexpr const char* kIndegreeAttr = "indegree";

struct Port {
  NodeId node = 0;
  int64_t slot = 0;
  bool operator==(const Port&) const = default;
  auto operator<=>(const Port&) const = default;
};

struct Edge {
  EdgeId id = 0;
  TensorStruct shape;
  Port producer;
  std::vector<Port> consumers;  // empty: the edge is a graph output
  bool operator==(const Edge&) const = default;
};

struct OpNode {
  NodeId id = 0;
  std::string type;
  AttrMap attrs;  // always contains "indegree"
  std::vector<EdgeId> inputs;
  std::vector<EdgeId> outputs;
  bool operator==(const OpNode&) const = default;
};

struct PlaceholderNode {
  NodeId id = 0;
  EdgeId output = 0;
  TensorStruct shape;
  bool operator==(const PlaceholderNode&) const = default;
};

using Node = std::variant<PlaceholderNode, OpNode>;

// DAG of op and placeholder nodes. Node and edge ids are dense and assigned
// in creation order. Built single-threaded, then treated as immutable.
class Graph {
 public:
  Graph() = default;

  // Adds a placeholder and its single output edge; returns the edge id.
  EdgeId add_placeholder(TensorStruct shape);

  // Appends an op consuming `inputs` (in slot order) and producing one edge
  // per entry of `output_shapes`. "indegree" is inserted into attrs.
  NodeId add_op(std::string type, AttrMap attrs, const std::vector<EdgeId>& inputs,
                const std::vector<TensorStruct>& output_shapes);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<size_t>(id)); }
  const Edge& edge(EdgeId id) const { return edges_.at(static_cast<size_t>(id)); }

  bool is_op(NodeId id) const { return std::holds_alternative<OpNode>(node(id)); }
  const OpNode& op(NodeId id) const { return std::get<OpNode>(node(id)); }
  const PlaceholderNode& placeholder(NodeId id) const { return std::get<PlaceholderNode>(node(id)); }

  std::vector<NodeId> op_ids() const;
  std::vector<NodeId> placeholder_ids() const;
  std::vector<EdgeId> output_edges() const;
  size_t num_ops() const;
  bool empty() const { return nodes_.empty(); }

  nlohmann::json& metadata() { return metadata_; }
  const nlohmann::json& metadata() const { return metadata_; }

  bool operator==(const Graph& other) const {
    return nodes_ == other.nodes_ && edges_ == other.edges_ && metadata_ == other.metadata_;
  }

  // Low-level insertion used by the deserializer; ids must be dense.
  void insert_raw(std::vector<Node> nodes, std::vector<Edge> edges, nlohmann::json metadata);

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  nlohmann::json metadata_ = nlohmann::json::object();
};

NodeId node_id(const Node& n);

// Topological order over all nodes; ties broken by ascending id.
// Throws CycleError on a cycle.
std::vector<NodeId> topo_order(const Graph& g);

int64_t attr_int(const AttrMap& attrs, const std::string& name);
const std::vector<int64_t>& attr_list(const AttrMap& attrs, const std::string& name);

}  // namespace graphsmith
