#include <algorithm>
#include <cmath>

#include "common.h"

namespace graphsmith::ops {

using namespace dsl;

std::vector<Constraint> same_shape_as_first(int indegree) {
  std::vector<Constraint> cs;
  for (int k = 1; k < indegree; ++k) {
    cs.push_back(eq(dim(k), dim(0)));
    cs.push_back(forall(1, dim(0), eq(len(k, bound(1)), len(0, bound(1)))));
  }
  return cs;
}

bool all_same_shape(ShapeSpan in) {
  return std::all_of(in.begin(), in.end(), [&](const TensorStruct& s) { return s.lens == in[0].lens; });
}

std::vector<int64_t> strides_of(const TensorStruct& s) {
  std::vector<int64_t> st(s.lens.size(), 1);
  for (size_t i = s.lens.size(); i-- > 1;) st[i - 1] = st[i] * s.lens[i];
  return st;
}

AxisView axis_view(const TensorStruct& s, int64_t axis) {
  AxisView v;
  for (int64_t i = 1; i <= s.dim(); ++i) {
    if (i < axis) v.outer *= s.at(i);
    else if (i == axis) v.n = s.at(i);
    else v.inner *= s.at(i);
  }
  return v;
}

void for_each_index(const TensorStruct& s, const std::function<void(const std::vector<int64_t>&)>& f) {
  if (s.volume() == 0) return;
  std::vector<int64_t> idx(s.lens.size(), 0);
  while (true) {
    f(idx);
    size_t k = idx.size();
    while (k > 0) {
      --k;
      if (++idx[k] < s.lens[k]) break;
      idx[k] = 0;
      if (k == 0) return;
    }
    if (idx.empty()) return;
  }
}

namespace {

using UnaryFn = double (*)(double);

OpSpec unary(std::string name, UnaryFn fn) {
  OpSpec s;
  s.name = std::move(name);
  s.indegrees = {1};
  s.checker = [](const AttrMap&, ShapeSpan) { return true; };
  s.out_fn = [](const AttrMap&, ShapeSpan in) { return one(in[0]); };
  s.kernel = [fn](const AttrMap&, ValueSpan in) {
    TensorValue out(in[0].shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = static_cast<float>(fn(in[0].data[i]));
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

using BinaryFn = double (*)(double, double);

OpSpec binary(std::string name, BinaryFn fn) {
  OpSpec s;
  s.name = std::move(name);
  s.indegrees = {2};
  s.constraints = same_shape_as_first;
  s.checker = [](const AttrMap&, ShapeSpan in) { return all_same_shape(in); };
  s.out_fn = [](const AttrMap&, ShapeSpan in) { return one(in[0]); };
  s.kernel = [fn](const AttrMap&, ValueSpan in) {
    TensorValue out(in[0].shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = static_cast<float>(fn(in[0].data[i], in[1].data[i]));
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

enum class Fold { kSum, kMin, kMax, kMean };

OpSpec variadic(std::string name, Fold fold) {
  OpSpec s;
  s.name = std::move(name);
  s.indegrees = {1, 2, 3, 4};
  s.constraints = same_shape_as_first;
  s.checker = [](const AttrMap&, ShapeSpan in) { return all_same_shape(in); };
  s.out_fn = [](const AttrMap&, ShapeSpan in) { return one(in[0]); };
  s.kernel = [fold](const AttrMap&, ValueSpan in) {
    TensorValue out(in[0].shape);
    for (size_t i = 0; i < out.data.size(); ++i) {
      double acc = in[0].data[i];
      for (size_t k = 1; k < in.size(); ++k) {
        const double v = in[k].data[i];
        switch (fold) {
          case Fold::kSum:
          case Fold::kMean: acc += v; break;
          case Fold::kMin: acc = std::min(acc, v); break;
          case Fold::kMax: acc = std::max(acc, v); break;
        }
      }
      if (fold == Fold::kMean) acc /= static_cast<double>(in.size());
      out.data[i] = static_cast<float>(acc);
    }
    return std::vector<TensorValue>{std::move(out)};
  };
  return s;
}

double relu(double x) { return x > 0 ? x : 0.0; }
double leaky_relu(double x) { return x < 0 ? 0.01 * x : x; }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double tanh_(double x) { return std::tanh(x); }
double neg(double x) { return -x; }
double abs_(double x) { return std::fabs(x); }
double exp_(double x) { return std::exp(x); }
double cos_(double x) { return std::cos(x); }
double sin_(double x) { return std::sin(x); }
double floor_(double x) { return std::floor(x); }
double ceil_(double x) { return std::ceil(x); }
double elu(double x) { return x < 0 ? std::expm1(x) : x; }
double softplus(double x) { return x > 30 ? x : std::log1p(std::exp(x)); }
double softsign(double x) { return x / (1.0 + std::fabs(x)); }
double hard_sigmoid(double x) { return std::clamp(0.2 * x + 0.5, 0.0, 1.0); }
double identity(double x) { return x; }

double add(double a, double b) { return a + b; }
double sub(double a, double b) { return a - b; }
double mul(double a, double b) { return a * b; }
double div_(double a, double b) { return a / b; }
double pow_(double a, double b) { return std::pow(a, b); }
double prelu(double a, double slope) { return a < 0 ? slope * a : a; }

}  // namespace

void register_elementwise(Registry& r) {
  r.add(binary("Add", add));
  r.add(binary("Sub", sub));
  r.add(binary("Mul", mul));
  OpSpec d = binary("Div", div_);
  d.divisor_inputs = {1};
  r.add(std::move(d));
  OpSpec p = binary("Pow", pow_);
  p.divisor_inputs = {0};
  r.add(std::move(p));
  r.add(binary("PRelu", prelu));

  r.add(variadic("Sum", Fold::kSum));
  r.add(variadic("Min", Fold::kMin));
  r.add(variadic("Max", Fold::kMax));
  r.add(variadic("Mean", Fold::kMean));

  r.add(unary("Relu", relu));
  r.add(unary("LeakyRelu", leaky_relu));
  r.add(unary("Sigmoid", sigmoid));
  r.add(unary("Tanh", tanh_));
  r.add(unary("Neg", neg));
  r.add(unary("Abs", abs_));
  r.add(unary("Exp", exp_));
  r.add(unary("Cos", cos_));
  r.add(unary("Sin", sin_));
  r.add(unary("Floor", floor_));
  r.add(unary("Ceil", ceil_));
  r.add(unary("Elu", elu));
  r.add(unary("Softplus", softplus));
  r.add(unary("Softsign", softsign));
  r.add(unary("HardSigmoid", hard_sigmoid));
  r.add(unary("Identity", identity));
  r.add(unary("Dropout", identity));

  // Integer bounds in quarter units: y = clamp(x, min/4, max/4).
  OpSpec clip = unary("Clip", identity);
  clip.attrs = {{"min", -4, 0, {}}, {"max", 0, 4, {}}};
  clip.kernel = [](const AttrMap& a, ValueSpan in) {
    const double lo = 0.25 * static_cast<double>(attr_int(a, "min"));
    const double hi = 0.25 * static_cast<double>(attr_int(a, "max"));
    TensorValue out(in[0].shape);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = static_cast<float>(std::clamp<double>(in[0].data[i], lo, hi));
    return std::vector<TensorValue>{std::move(out)};
  };
  r.add(std::move(clip));
}

}  // namespace graphsmith::ops
