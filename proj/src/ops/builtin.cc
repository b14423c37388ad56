#include "common.h"

namespace graphsmith {

Registry make_builtin_registry() {
  Registry r;
  ops::register_elementwise(r);
  ops::register_reduce(r);
  ops::register_shape(r);
  ops::register_nn(r);
  return r;
}

const Registry& builtin_registry() {
  static const Registry registry = make_builtin_registry();
  return registry;
}

}  // namespace graphsmith
