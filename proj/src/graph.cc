#include "graphsmith/graph.h"

#include <queue>
#include <sstream>

#include "graphsmith/errors.h"

namespace graphsmith {

std::string to_string(const TensorStruct& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.lens.size(); ++i) {
    if (i) os << ',';
    os << s.lens[i];
  }
  os << ']';
  return os.str();
}

NodeId node_id(const Node& n) {
  return std::visit([](const auto& v) { return v.id; }, n);
}

EdgeId Graph::add_placeholder(TensorStruct shape) {
  const NodeId id = static_cast<NodeId>(nodes_.size());
  const EdgeId eid = static_cast<EdgeId>(edges_.size());
  edges_.push_back(Edge{eid, shape, Port{id, 0}, {}});
  nodes_.push_back(PlaceholderNode{id, eid, std::move(shape)});
  return eid;
}

NodeId Graph::add_op(std::string type, AttrMap attrs, const std::vector<EdgeId>& inputs,
                     const std::vector<TensorStruct>& output_shapes) {
  const NodeId id = static_cast<NodeId>(nodes_.size());
  OpNode op;
  op.id = id;
  op.type = std::move(type);
  op.attrs = std::move(attrs);
  op.attrs[kIndegreeAttr] = static_cast<int64_t>(inputs.size());
  op.inputs = inputs;
  for (size_t slot = 0; slot < inputs.size(); ++slot) {
    edges_.at(static_cast<size_t>(inputs[slot])).consumers.push_back(Port{id, static_cast<int64_t>(slot)});
  }
  for (size_t slot = 0; slot < output_shapes.size(); ++slot) {
    const EdgeId eid = static_cast<EdgeId>(edges_.size());
    edges_.push_back(Edge{eid, output_shapes[slot], Port{id, static_cast<int64_t>(slot)}, {}});
    op.outputs.push_back(eid);
  }
  nodes_.push_back(std::move(op));
  return id;
}

void Graph::insert_raw(std::vector<Node> nodes, std::vector<Edge> edges, nlohmann::json metadata) {
  nodes_ = std::move(nodes);
  edges_ = std::move(edges);
  metadata_ = std::move(metadata);
}

std::vector<NodeId> Graph::op_ids() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_)
    if (const auto* op = std::get_if<OpNode>(&n)) out.push_back(op->id);
  return out;
}

std::vector<NodeId> Graph::placeholder_ids() const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_)
    if (const auto* ph = std::get_if<PlaceholderNode>(&n)) out.push_back(ph->id);
  return out;
}

std::vector<EdgeId> Graph::output_edges() const {
  std::vector<EdgeId> out;
  for (const auto& e : edges_)
    if (e.consumers.empty()) out.push_back(e.id);
  return out;
}

size_t Graph::num_ops() const {
  size_t n = 0;
  for (const auto& node : nodes_) n += std::holds_alternative<OpNode>(node);
  return n;
}

std::vector<NodeId> topo_order(const Graph& g) {
  const size_t n = g.nodes().size();
  std::vector<int64_t> pending(n, 0);
  for (const auto& node : g.nodes()) {
    if (const auto* op = std::get_if<OpNode>(&node)) pending[static_cast<size_t>(op->id)] = static_cast<int64_t>(op->inputs.size());
  }
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (size_t i = 0; i < n; ++i)
    if (pending[i] == 0) ready.push(static_cast<NodeId>(i));

  std::vector<NodeId> order;
  order.reserve(n);
  while (!ready.empty()) {
    const NodeId id = ready.top();
    ready.pop();
    order.push_back(id);
    std::vector<EdgeId> outs;
    if (const auto* op = std::get_if<OpNode>(&g.node(id))) {
      outs = op->outputs;
    } else {
      outs = {g.placeholder(id).output};
    }
    for (EdgeId e : outs) {
      for (const Port& c : g.edge(e).consumers) {
        if (--pending.at(static_cast<size_t>(c.node)) == 0) ready.push(c.node);
      }
    }
  }
  if (order.size() != n) throw CycleError("graph contains a cycle");
  return order;
}

int64_t attr_int(const AttrMap& attrs, const std::string& name) {
  auto it = attrs.find(name);
  if (it == attrs.end()) throw PreconditionError("missing attribute '" + name + "'");
  if (const auto* v = std::get_if<int64_t>(&it->second)) return *v;
  throw PreconditionError("attribute '" + name + "' is a list");
}

const std::vector<int64_t>& attr_list(const AttrMap& attrs, const std::string& name) {
  auto it = attrs.find(name);
  if (it == attrs.end()) throw PreconditionError("missing attribute '" + name + "'");
  if (const auto* v = std::get_if<std::vector<int64_t>>(&it->second)) return *v;
  throw PreconditionError("attribute '" + name + "' is a scalar");
}

}  // namespace graphsmith
