// Reference executor behind the adapter protocol, on stdin/stdout. The fault
// flags turn it into a misbehaving backend for exercising the harness.

#include <iostream>

#include <CLI11.hpp>

#include "graphsmith/protocol.h"

int main(int argc, char** argv) {
  graphsmith::ServeOptions options;
  std::vector<std::string> ops;
  CLI::App app{"graphsmith-ref-backend: reference executor speaking the adapter protocol"};
  app.add_flag("--mutate-add", options.mutate_add, "Add computes a - b");
  app.add_option("--crash-on-op", options.crash_on_op, "abort on graphs containing this op");
  app.add_option("--hang-on-op", options.hang_on_op, "never answer graphs containing this op");
  app.add_option("--ops", ops, "advertise only these ops")->delimiter(',');
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  options.ops.insert(ops.begin(), ops.end());
  std::ios::sync_with_stdio(false);
  graphsmith::serve(std::cin, std::cout, options);
  return 0;
}
