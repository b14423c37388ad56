#include "graphsmith/serialize.h"

#include <algorithm>
#include <optional>

#include "graphsmith/errors.h"

namespace graphsmith {

using nlohmann::json;

namespace {

json shape_json(const TensorStruct& s) { return json(s.lens); }

json port_json(const Port& p) { return json::array({p.node, p.slot}); }

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key, "missing field");
  return *it;
}

int64_t as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected integer");
  return v.get<int64_t>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected array");
  return v;
}

TensorStruct as_shape(const json& v, const std::string& path) {
  TensorStruct s;
  const json& arr = as_array(v, path);
  for (size_t i = 0; i < arr.size(); ++i) {
    const int64_t len = as_int(arr[i], path + "[" + std::to_string(i) + "]");
    if (len < 1) throw SchemaError(path + "[" + std::to_string(i) + "]", "length must be >= 1");
    s.lens.push_back(len);
  }
  if (s.lens.empty()) throw SchemaError(path, "shape must have at least one dimension");
  return s;
}

Port as_port(const json& v, const std::string& path) {
  const json& arr = as_array(v, path);
  if (arr.size() != 2) throw SchemaError(path, "expected [node, slot]");
  return Port{as_int(arr[0], path + "[0]"), as_int(arr[1], path + "[1]")};
}

}  // namespace

json graph_to_json(const Graph& g) {
  json placeholders = json::array();
  json ops = json::array();
  for (const auto& node : g.nodes()) {
    if (const auto* ph = std::get_if<PlaceholderNode>(&node)) {
      placeholders.push_back({{"id", ph->id}, {"shape", shape_json(ph->shape)}});
    } else {
      const auto& op = std::get<OpNode>(node);
      json attrs = json::object();
      for (const auto& [name, value] : op.attrs) {
        std::visit([&](const auto& v) { attrs[name] = v; }, value);
      }
      ops.push_back({{"id", op.id},
                     {"type", op.type},
                     {"attrs", std::move(attrs)},
                     {"inputs", op.inputs},
                     {"outputs", op.outputs}});
    }
  }
  json edges = json::array();
  for (const auto& e : g.edges()) {
    json consumers = json::array();
    for (const auto& c : e.consumers) consumers.push_back(port_json(c));
    edges.push_back({{"id", e.id},
                     {"shape", shape_json(e.shape)},
                     {"producer", port_json(e.producer)},
                     {"consumers", std::move(consumers)}});
  }
  return json{{"version", kGraphFormatVersion},
              {"metadata", g.metadata()},
              {"placeholders", std::move(placeholders)},
              {"ops", std::move(ops)},
              {"edges", std::move(edges)}};
}

std::string serialize(const Graph& g) { return graph_to_json(g).dump(); }

Graph graph_from_json(const json& j) {
  if (as_int(field(j, "version", "$"), "$.version") != kGraphFormatVersion) {
    throw SchemaError("$.version", "unsupported version");
  }
  json metadata = field(j, "metadata", "$");
  if (!metadata.is_object()) throw SchemaError("$.metadata", "expected object");

  const json& jedges = as_array(field(j, "edges", "$"), "$.edges");
  std::vector<Edge> edges(jedges.size());
  for (size_t i = 0; i < jedges.size(); ++i) {
    const std::string path = "$.edges[" + std::to_string(i) + "]";
    const json& je = jedges[i];
    Edge e;
    e.id = as_int(field(je, "id", path), path + ".id");
    if (e.id != static_cast<int64_t>(i)) throw SchemaError(path + ".id", "edge ids must be dense and ordered");
    e.shape = as_shape(field(je, "shape", path), path + ".shape");
    e.producer = as_port(field(je, "producer", path), path + ".producer");
    const json& jc = as_array(field(je, "consumers", path), path + ".consumers");
    for (size_t c = 0; c < jc.size(); ++c) {
      e.consumers.push_back(as_port(jc[c], path + ".consumers[" + std::to_string(c) + "]"));
    }
    edges[i] = std::move(e);
  }

  const json& jph = as_array(field(j, "placeholders", "$"), "$.placeholders");
  const json& jops = as_array(field(j, "ops", "$"), "$.ops");
  const size_t n = jph.size() + jops.size();
  std::vector<std::optional<Node>> slots(n);
  auto claim = [&](int64_t id, const std::string& path) {
    if (id < 0 || static_cast<size_t>(id) >= n) throw SchemaError(path, "node id out of range");
    if (slots[static_cast<size_t>(id)]) throw SchemaError(path, "duplicate node id");
  };
  auto check_edge = [&](int64_t eid, const std::string& path) {
    if (eid < 0 || static_cast<size_t>(eid) >= edges.size()) throw SchemaError(path, "unknown edge id");
  };

  for (size_t i = 0; i < jph.size(); ++i) {
    const std::string path = "$.placeholders[" + std::to_string(i) + "]";
    PlaceholderNode ph;
    ph.id = as_int(field(jph[i], "id", path), path + ".id");
    claim(ph.id, path + ".id");
    ph.shape = as_shape(field(jph[i], "shape", path), path + ".shape");
    bool found = false;
    for (const auto& e : edges) {
      if (e.producer.node == ph.id) {
        if (found) throw SchemaError(path, "placeholder must feed exactly one edge");
        if (e.producer.slot != 0) throw SchemaError("$.edges[" + std::to_string(e.id) + "].producer", "placeholder slot must be 0");
        if (e.shape != ph.shape) throw SchemaError(path + ".shape", "disagrees with its edge");
        ph.output = e.id;
        found = true;
      }
    }
    if (!found) throw SchemaError(path, "placeholder has no output edge");
    slots[static_cast<size_t>(ph.id)] = Node{std::move(ph)};
  }

  for (size_t i = 0; i < jops.size(); ++i) {
    const std::string path = "$.ops[" + std::to_string(i) + "]";
    const json& jo = jops[i];
    OpNode op;
    op.id = as_int(field(jo, "id", path), path + ".id");
    claim(op.id, path + ".id");
    const json& type = field(jo, "type", path);
    if (!type.is_string()) throw SchemaError(path + ".type", "expected string");
    op.type = type.get<std::string>();
    const json& attrs = field(jo, "attrs", path);
    if (!attrs.is_object()) throw SchemaError(path + ".attrs", "expected object");
    for (auto it = attrs.begin(); it != attrs.end(); ++it) {
      const std::string apath = path + ".attrs." + it.key();
      if (it->is_number_integer()) {
        op.attrs[it.key()] = it->get<int64_t>();
      } else if (it->is_array()) {
        std::vector<int64_t> values;
        for (size_t k = 0; k < it->size(); ++k) values.push_back(as_int((*it)[k], apath + "[" + std::to_string(k) + "]"));
        op.attrs[it.key()] = std::move(values);
      } else {
        throw SchemaError(apath, "expected integer or integer list");
      }
    }
    const json& jin = as_array(field(jo, "inputs", path), path + ".inputs");
    for (size_t k = 0; k < jin.size(); ++k) {
      const std::string ipath = path + ".inputs[" + std::to_string(k) + "]";
      const int64_t eid = as_int(jin[k], ipath);
      check_edge(eid, ipath);
      const auto& cons = edges[static_cast<size_t>(eid)].consumers;
      if (std::find(cons.begin(), cons.end(), Port{op.id, static_cast<int64_t>(k)}) == cons.end()) {
        throw SchemaError(ipath, "edge does not list this op as consumer");
      }
      op.inputs.push_back(eid);
    }
    auto deg = op.attrs.find(kIndegreeAttr);
    if (deg == op.attrs.end() || !std::holds_alternative<int64_t>(deg->second) ||
        std::get<int64_t>(deg->second) != static_cast<int64_t>(op.inputs.size())) {
      throw SchemaError(path + ".attrs.indegree", "must equal the number of inputs");
    }
    const json& jout = as_array(field(jo, "outputs", path), path + ".outputs");
    for (size_t k = 0; k < jout.size(); ++k) {
      const std::string opath = path + ".outputs[" + std::to_string(k) + "]";
      const int64_t eid = as_int(jout[k], opath);
      check_edge(eid, opath);
      if (edges[static_cast<size_t>(eid)].producer != Port{op.id, static_cast<int64_t>(k)}) {
        throw SchemaError(opath, "edge producer does not match");
      }
      op.outputs.push_back(eid);
    }
    slots[static_cast<size_t>(op.id)] = Node{std::move(op)};
  }

  std::vector<Node> nodes;
  nodes.reserve(n);
  for (auto& s : slots) nodes.push_back(std::move(*s));

  for (const auto& e : edges) {
    const std::string path = "$.edges[" + std::to_string(e.id) + "]";
    if (e.producer.node < 0 || static_cast<size_t>(e.producer.node) >= n) {
      throw SchemaError(path + ".producer", "unknown node");
    }
    for (const auto& c : e.consumers) {
      if (c.node < 0 || static_cast<size_t>(c.node) >= n || !std::holds_alternative<OpNode>(nodes[static_cast<size_t>(c.node)])) {
        throw SchemaError(path + ".consumers", "consumer must be an op node");
      }
      const auto& op = std::get<OpNode>(nodes[static_cast<size_t>(c.node)]);
      if (c.slot < 0 || static_cast<size_t>(c.slot) >= op.inputs.size() || op.inputs[static_cast<size_t>(c.slot)] != e.id) {
        throw SchemaError(path + ".consumers", "consumer slot does not reference this edge");
      }
    }
    const Node& producer = nodes[static_cast<size_t>(e.producer.node)];
    if (const auto* op = std::get_if<OpNode>(&producer)) {
      if (e.producer.slot < 0 || static_cast<size_t>(e.producer.slot) >= op->outputs.size() ||
          op->outputs[static_cast<size_t>(e.producer.slot)] != e.id) {
        throw SchemaError(path + ".producer", "producer does not list this edge");
      }
    }
  }

  Graph g;
  g.insert_raw(std::move(nodes), std::move(edges), std::move(metadata));
  try {
    topo_order(g);
  } catch (const CycleError&) {
    throw SchemaError("$.edges", "graph contains a cycle");
  }
  return g;
}

Graph deserialize(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw SchemaError("$", std::string("invalid JSON: ") + e.what());
  }
  return graph_from_json(j);
}

}  // namespace graphsmith
