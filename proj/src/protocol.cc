#include "graphsmith/protocol.h"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "graphsmith/errors.h"
#include "graphsmith/serialize.h"

namespace graphsmith {

namespace {

nlohmann::json encode_float(float x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
  return static_cast<double>(x);
}

float decode_float(const nlohmann::json& j) {
  if (j.is_number()) return static_cast<float>(j.get<double>());
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "NaN") return NAN;
    if (s == "Infinity") return INFINITY;
    if (s == "-Infinity") return -INFINITY;
  }
  throw Error("malformed tensor element: " + j.dump());
}

Kernel subtracting_add() {
  return [](const AttrMap&, ValueSpan in) {
    TensorValue out(in[0].shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = in[0].data[i] - in[1].data[i];
    return std::vector<TensorValue>{std::move(out)};
  };
}

}  // namespace

nlohmann::json encode_outputs(const OutputMap& outputs) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [edge, value] : outputs) {
    nlohmann::json data = nlohmann::json::array();
    for (float x : value.data) data.push_back(encode_float(x));
    j[std::to_string(edge)] = {{"shape", value.shape.lens}, {"data", std::move(data)}};
  }
  return j;
}

OutputMap decode_outputs(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("outputs must be an object");
  OutputMap out;
  for (const auto& [key, v] : j.items()) {
    EdgeId edge;
    try {
      size_t pos = 0;
      edge = std::stoll(key, &pos);
      if (pos != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw Error("output key is not an edge id: " + key);
    }
    if (!v.is_object() || !v.contains("shape") || !v.contains("data")) throw Error("output " + key + " lacks shape/data");
    TensorValue t;
    t.shape.lens = v["shape"].get<std::vector<int64_t>>();
    for (const auto& x : v["data"]) t.data.push_back(decode_float(x));
    out.emplace(edge, std::move(t));
  }
  return out;
}

nlohmann::json error_response(const std::string& code, const std::string& message, const std::string& trace) {
  nlohmann::json j = {{"status", "error"}, {"code", code}, {"message", message}};
  if (!trace.empty()) j["trace"] = trace;
  return j;
}

nlohmann::json handle_request(const nlohmann::json& request, const ServeOptions& options, const Registry& registry) {
  if (!request.is_object() || !request.contains("op") || !request["op"].is_string()) {
    return error_response("protocol", "request without an \"op\" field");
  }
  const std::string op = request["op"];
  if (op == "hello") {
    std::vector<std::string> names;
    for (const auto& spec : registry.ops()) {
      if (!spec->has_kernel()) continue;
      if (!options.ops.empty() && !options.ops.count(spec->name)) continue;
      names.push_back(spec->name);
    }
    return {{"ops", names}, {"version", kProtocolVersion}};
  }
  if (op != "run") return error_response("protocol", "unknown op '" + op + "'");
  if (!request.contains("graph") || !request.contains("data_seed") || !request["data_seed"].is_number_unsigned()) {
    return error_response("protocol", "run request needs graph and data_seed");
  }
  Graph g;
  try {
    g = graph_from_json(request["graph"]);
  } catch (const SchemaError& e) {
    return error_response("protocol", e.what());
  }
  for (NodeId id : g.op_ids()) {
    const auto& type = g.op(id).type;
    if (!options.ops.empty() && !options.ops.count(type)) return error_response("unsupported", "unsupported op " + type);
    if (type == options.crash_on_op) std::abort();
    if (type == options.hang_on_op) {
      while (true) std::this_thread::sleep_for(std::chrono::hours(1));
    }
  }
  try {
    ExecOptions exec;
    if (options.mutate_add) exec.kernel_overrides["Add"] = subtracting_add();
    const auto inputs = synth_inputs(g, request["data_seed"].get<uint64_t>(), registry);
    return {{"status", "ok"}, {"outputs", encode_outputs(execute(g, inputs, registry, exec))}};
  } catch (const UnsupportedOp& e) {
    return error_response("unsupported", e.what());
  } catch (const std::exception& e) {
    return error_response("runtime", e.what());
  }
}

void serve(std::istream& in, std::ostream& out, const ServeOptions& options, const Registry& registry) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json response;
    try {
      response = handle_request(nlohmann::json::parse(line), options, registry);
    } catch (const nlohmann::json::exception& e) {
      response = error_response("protocol", std::string("malformed request: ") + e.what());
    }
    out << response.dump() << "\n";
    out.flush();
  }
}

}  // namespace graphsmith
