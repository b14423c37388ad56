#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "graphsmith/errors.h"
#include "graphsmith/executor.h"
#include "graphsmith/generator.h"
#include "graphsmith/metrics.h"
#include "graphsmith/opspec.h"
#include "graphsmith/protocol.h"
#include "graphsmith/serialize.h"

namespace py = pybind11;
using namespace graphsmith;

namespace {

std::vector<TensorStruct> to_structs(const std::vector<std::vector<int64_t>>& shapes) {
  return {shapes.begin(), shapes.end()};
}

std::vector<std::vector<int64_t>> to_lists(const std::vector<TensorStruct>& shapes) {
  std::vector<std::vector<int64_t>> out;
  for (const auto& s : shapes) out.push_back(s.lens);
  return out;
}

GenConfig make_config(const std::string& strategy, int64_t lb, int64_t ub, double picking_rate, int64_t max_dim,
                      int64_t max_len, std::vector<std::string> whitelist, uint64_t seed, int retry_limit) {
  GenConfig cfg;
  cfg.strategy = parse_strategy(strategy);
  cfg.lb = lb;
  cfg.ub = ub;
  cfg.picking_rate = picking_rate;
  cfg.max_dim = max_dim;
  cfg.max_len = max_len;
  cfg.op_whitelist = std::move(whitelist);
  cfg.seed = seed;
  cfg.retry_limit = retry_limit;
  validate(cfg);
  return cfg;
}

py::tuple value_tuple(const TensorValue& v) { return py::make_tuple(v.shape.lens, v.data); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  auto error = py::register_exception<Error>(m, "GraphsmithError");
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", error.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", error.ptr());
  py::register_exception<UnsupportedOp>(m, "UnsupportedOp", error.ptr());
  py::register_exception<EmptyCorpus>(m, "EmptyCorpus", error.ptr());

  m.attr("PROTOCOL_VERSION") = kProtocolVersion;

  m.def("manifest", [] { return builtin_registry().manifest().dump(); });

  m.def(
      "generate",
      [](uint64_t num, const std::string& strategy, int64_t lb, int64_t ub, double picking_rate, int64_t max_dim,
         int64_t max_len, std::vector<std::string> whitelist, uint64_t seed, int retry_limit, int jobs) {
        const GenConfig cfg =
            make_config(strategy, lb, ub, picking_rate, max_dim, max_len, std::move(whitelist), seed, retry_limit);
        std::vector<std::string> graphs;
        GenReport report;
        {
          py::gil_scoped_release release;
          report = generate_corpus(cfg, num, jobs, [&](uint64_t, const Graph& g) { graphs.push_back(serialize(g)); });
        }
        return py::make_tuple(graphs, report.to_json().dump());
      },
      py::arg("num"), py::arg("strategy") = "isra", py::arg("lb") = 1, py::arg("ub") = 10,
      py::arg("picking_rate") = 0.97, py::arg("max_dim") = 5, py::arg("max_len") = 5,
      py::arg("whitelist") = std::vector<std::string>{}, py::arg("seed") = 0, py::arg("retry_limit") = 10,
      py::arg("jobs") = 1);

  m.def("validate_graph", [](const std::string& graph) { return validate_graph(deserialize(graph), builtin_registry()); });

  m.def("graph_metrics", [](const std::string& graph) {
    const auto g = graph_metrics(deserialize(graph));
    py::dict d;
    d["NOO"] = g.noo;
    d["NOT"] = g.not_;
    d["NOP"] = g.nop;
    d["NTR"] = g.ntr;
    d["NSA"] = g.nsa;
    return d;
  });

  m.def("corpus_metrics", [](const std::vector<std::string>& graphs) {
    MetricsAccumulator acc;
    for (const auto& s : graphs) acc.add(deserialize(s));
    return acc.report().to_json().dump();
  });

  m.def("check", [](const std::string& op, const AttrMap& attrs, const std::vector<std::vector<int64_t>>& shapes) {
    return check(builtin_registry().get(op), attrs, to_structs(shapes));
  });

  m.def("infer_outputs",
        [](const std::string& op, const AttrMap& attrs, const std::vector<std::vector<int64_t>>& shapes) {
          return to_lists(infer_outputs(builtin_registry().get(op), attrs, to_structs(shapes)));
        });

  m.def("synth_inputs", [](const std::string& graph, uint64_t data_seed) {
    py::dict d;
    for (const auto& [node, v] : synth_inputs(deserialize(graph), data_seed)) d[py::int_(node)] = value_tuple(v);
    return d;
  });

  m.def("execute", [](const std::string& graph, uint64_t data_seed) {
    const Graph g = deserialize(graph);
    py::dict d;
    for (const auto& [edge, v] : execute(g, synth_inputs(g, data_seed))) d[py::int_(edge)] = value_tuple(v);
    return d;
  });

  m.def("handle_request", [](const std::string& request) {
    return handle_request(nlohmann::json::parse(request), ServeOptions{}).dump();
  });
}
