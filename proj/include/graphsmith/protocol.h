#pragma once

// Adapter protocol: newline-delimited JSON over a backend's stdin/stdout.
//
//   -> {"op":"hello"}
//   <- {"ops":[names],"version":1}
//   -> {"op":"run","graph":<graph JSON>,"data_seed":u64,"rel_note":null}
//   <- {"status":"ok","outputs":{"<edge id>":{"shape":[...],"data":[...]}}}
//    | {"status":"error","message":str,"code":str,"trace":str?}
//
// Non-finite floats travel as the strings "NaN", "Infinity", "-Infinity".
// Backends regenerate placeholder data from data_seed (see synth_inputs).

#include <iosfwd>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "graphsmith/executor.h"

namespace graphsmith {

inline constexpr int kProtocolVersion = 1;

nlohmann::json encode_outputs(const OutputMap& outputs);
OutputMap decode_outputs(const nlohmann::json& j);  // throws Error on malformed input

nlohmann::json error_response(const std::string& code, const std::string& message, const std::string& trace = "");

struct ServeOptions {
  bool mutate_add = false;     // Add computes a - b
  std::string crash_on_op;     // abort the process on graphs containing this op
  std::string hang_on_op;      // never answer graphs containing this op
  std::set<std::string> ops;   // advertised subset; empty: every op with a kernel
};

// Handles one request; the reference side of the protocol.
nlohmann::json handle_request(const nlohmann::json& request, const ServeOptions& options,
                              const Registry& registry = builtin_registry());

// Request loop until EOF. Malformed lines get a "protocol" error response.
void serve(std::istream& in, std::ostream& out, const ServeOptions& options,
           const Registry& registry = builtin_registry());

}  // namespace graphsmith
