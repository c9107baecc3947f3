/*
 * Copyright 2026 The PSZ Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "psz/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <unordered_set>

#include "psz/error.hpp"
#include "psz/fft.hpp"

namespace psz::ad {
namespace {

thread_local bool g_grad_enabled = true;

bool IsSuffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.begin(), small.end(),
                    big.end() - static_cast<std::ptrdiff_t>(small.size()));
}

// Layout of a suffix-broadcast binary op. `a_small` says which operand is
// repeated; its flat index is i % small_size.
struct BinaryLayout {
  Shape out;
  bool same = false;
  bool a_small = false;
  std::size_t small_size = 0;
};

BinaryLayout Layout(const Tensor& a, const Tensor& b, const char* op) {
  BinaryLayout layout;
  if (a.shape() == b.shape()) {
    layout.out = a.shape();
    layout.same = true;
  } else if (IsSuffix(b.shape(), a.shape())) {
    layout.out = a.shape();
    layout.small_size = b.size();
  } else if (IsSuffix(a.shape(), b.shape())) {
    layout.out = b.shape();
    layout.a_small = true;
    layout.small_size = a.size();
  } else {
    throw StructuralError(std::string(op) + ": shapes " +
                          ShapeString(a.shape()) + " and " +
                          ShapeString(b.shape()) + " do not broadcast");
  }
  return layout;
}

inline std::size_t AIndex(const BinaryLayout& l, std::size_t i) {
  return l.same || !l.a_small ? i : i % l.small_size;
}
inline std::size_t BIndex(const BinaryLayout& l, std::size_t i) {
  return l.same || l.a_small ? i : i % l.small_size;
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t dim = 1;
  std::size_t inner = 1;
};

AxisSplit SplitAt(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw StructuralError("axis " + std::to_string(axis) +
                          " out of range for shape " + ShapeString(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.dim = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <typename F>
Tensor Unary(const Tensor& a, F&& f, std::function<void(Node&)> pullback) {
  std::vector<double> out(a.size());
  const auto& x = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return MakeResult(a.shape(), std::move(out), {a}, std::move(pullback));
}

Node& In(Node& self, std::size_t i) { return *self.inputs[i]; }

}  // namespace

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<double>& Node::EnsureGrad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::Constant(Shape shape, std::vector<double> values) {
  if (NumElements(shape) != values.size()) {
    throw StructuralError("constant: " + std::to_string(values.size()) +
                          " values for shape " + ShapeString(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

Tensor Tensor::Constant(Shape shape, double fill) {
  const std::size_t n = NumElements(shape);
  return Constant(std::move(shape), std::vector<double>(n, fill));
}

Tensor Tensor::Parameter(Shape shape, std::vector<double> values) {
  Tensor t = Constant(std::move(shape), std::move(values));
  t.node_->requires_grad = true;
  t.node_->EnsureGrad();
  return t;
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->value.size(); }
const std::vector<double>& Tensor::value() const { return node_->value; }
std::vector<double>& Tensor::mutable_value() { return node_->value; }
bool Tensor::requires_grad() const { return node_->requires_grad; }
const std::vector<double>& Tensor::grad() const { return node_->grad; }
std::vector<double>& Tensor::mutable_grad() { return node_->EnsureGrad(); }

double Tensor::item() const {
  if (size() != 1) {
    throw StructuralError("item() on a tensor of shape " +
                          ShapeString(shape()));
  }
  return node_->value[0];
}

void Tensor::ZeroGrad() {
  if (node_->requires_grad) {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }
}

Tensor MakeResult(Shape shape, std::vector<double> value,
                  std::vector<Tensor> inputs,
                  std::function<void(Node&)> pullback) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool track = false;
  if (g_grad_enabled) {
    for (const Tensor& t : inputs) track = track || t.requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    node->is_leaf = false;
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) node->inputs.push_back(t.shared());
    node->pullback = std::move(pullback);
  }
  return Tensor(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool GradEnabled() { return g_grad_enabled; }

void Backward(const Tensor& loss) {
  if (!loss.defined()) throw StructuralError("backward on an empty tensor");
  Node* root = loss.node();
  if (root->value.size() != 1) {
    throw StructuralError("backward needs a scalar loss, got shape " +
                          ShapeString(root->shape));
  }
  if (root->consumed) {
    throw StructuralError("backward already ran on this loss; rebuild the "
                          "graph with a new forward pass");
  }
  root->consumed = true;
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && !child->is_leaf && !visited.count(child)) {
        if (child->consumed) {
          throw StructuralError("graph was already released by an earlier "
                                "backward pass");
        }
        visited.insert(child);
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->EnsureGrad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->pullback && !node->grad.empty()) node->pullback(*node);
  }
  for (Node* node : order) {
    if (node->is_leaf) continue;
    node->pullback = nullptr;
    node->inputs.clear();
    node->consumed = true;
    if (node != root) std::vector<double>().swap(node->grad);
  }
}

Tensor Add(const Tensor& a, const Tensor& b) {
  const BinaryLayout l = Layout(a, b, "add");
  std::vector<double> out(NumElements(l.out));
  const auto& x = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x[AIndex(l, i)] + y[BIndex(l, i)];
  }
  return MakeResult(l.out, std::move(out), {a, b}, [l](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& in = In(self, k);
      if (!in.requires_grad) continue;
      auto& g = in.EnsureGrad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[k == 0 ? AIndex(l, i) : BIndex(l, i)] += self.grad[i];
      }
    }
  });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  const BinaryLayout l = Layout(a, b, "sub");
  std::vector<double> out(NumElements(l.out));
  const auto& x = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x[AIndex(l, i)] - y[BIndex(l, i)];
  }
  return MakeResult(l.out, std::move(out), {a, b}, [l](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& in = In(self, k);
      if (!in.requires_grad) continue;
      auto& g = in.EnsureGrad();
      const double sign = k == 0 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[k == 0 ? AIndex(l, i) : BIndex(l, i)] += sign * self.grad[i];
      }
    }
  });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  const BinaryLayout l = Layout(a, b, "mul");
  std::vector<double> out(NumElements(l.out));
  const auto& x = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x[AIndex(l, i)] * y[BIndex(l, i)];
  }
  return MakeResult(l.out, std::move(out), {a, b}, [l](Node& self) {
    Node& na = In(self, 0);
    Node& nb = In(self, 1);
    if (na.requires_grad) {
      auto& g = na.EnsureGrad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[AIndex(l, i)] += self.grad[i] * nb.value[BIndex(l, i)];
      }
    }
    if (nb.requires_grad) {
      auto& g = nb.EnsureGrad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[BIndex(l, i)] += self.grad[i] * na.value[AIndex(l, i)];
      }
    }
  });
}

Tensor Scale(const Tensor& a, double s) {
  return Unary(a, [s](double v) { return s * v; }, [s](Node& self) {
    auto& g = In(self, 0).EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
  });
}

Tensor AddConstant(const Tensor& a, double c) {
  return Unary(a, [c](double v) { return v + c; }, [](Node& self) {
    auto& g = In(self, 0).EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor Relu(const Tensor& a) {
  return Unary(a, [](double v) { return v > 0.0 ? v : 0.0; }, [](Node& self) {
    Node& in = In(self, 0);
    auto& g = in.EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in.value[i] > 0.0) g[i] += self.grad[i];
    }
  });
}

Tensor Sin(const Tensor& a) {
  return Unary(a, [](double v) { return std::sin(v); }, [](Node& self) {
    Node& in = In(self, 0);
    auto& g = in.EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * std::cos(in.value[i]);
    }
  });
}

Tensor Cos(const Tensor& a) {
  return Unary(a, [](double v) { return std::cos(v); }, [](Node& self) {
    Node& in = In(self, 0);
    auto& g = in.EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] -= self.grad[i] * std::sin(in.value[i]);
    }
  });
}

Tensor Square(const Tensor& a) {
  return Unary(a, [](double v) { return v * v; }, [](Node& self) {
    Node& in = In(self, 0);
    auto& g = in.EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += 2.0 * in.value[i] * self.grad[i];
    }
  });
}

Tensor Sqrt(const Tensor& a) {
  return Unary(a, [](double v) { return std::sqrt(v); }, [](Node& self) {
    auto& g = In(self, 0).EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] / (2.0 * self.value[i]);
    }
  });
}

Tensor MaxWithConstant(const Tensor& a, double c) {
  return Unary(a, [c](double v) { return v > c ? v : c; }, [c](Node& self) {
    Node& in = In(self, 0);
    auto& g = in.EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (in.value[i] > c) g[i] += self.grad[i];
    }
  });
}

void MatMulKernel(const double* a, const double* b, double* c, std::size_t n,
                  std::size_t k, std::size_t m) {
  std::fill(c, c + n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = c + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
}

Tensor MatMul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.dim(1) != b.dim(0)) {
    throw StructuralError("matmul: incompatible shapes " +
                          ShapeString(a.shape()) + " and " +
                          ShapeString(b.shape()));
  }
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  std::vector<double> out(n * m);
  MatMulKernel(a.value().data(), b.value().data(), out.data(), n, k, m);
  return MakeResult({n, m}, std::move(out), {a, b}, [n, k, m](Node& self) {
    Node& na = In(self, 0);
    Node& nb = In(self, 1);
    const double* g = self.grad.data();
    if (na.requires_grad) {
      auto& ga = na.EnsureGrad();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* brow = nb.value.data() + p * m;
          const double* grow = g + i * m;
          for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (nb.requires_grad) {
      auto& gb = nb.EnsureGrad();
      for (std::size_t i = 0; i < n; ++i) {
        const double* grow = g + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = na.value[i * k + p];
          if (aip == 0.0) continue;
          double* gbrow = gb.data() + p * m;
          for (std::size_t j = 0; j < m; ++j) gbrow[j] += aip * grow[j];
        }
      }
    }
  });
}

Tensor Sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.value()) acc += v;
  return MakeResult({}, {acc}, {a}, [](Node& self) {
    auto& g = In(self, 0).EnsureGrad();
    for (double& v : g) v += self.grad[0];
  });
}

Tensor Mean(const Tensor& a) {
  if (a.size() == 0) throw StructuralError("mean of an empty tensor");
  return Scale(Sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor SumAxis(const Tensor& a, std::size_t axis) {
  const AxisSplit s = SplitAt(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(s.outer * s.inner, 0.0);
  const auto& x = a.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t d = 0; d < s.dim; ++d) {
      const double* src = x.data() + (o * s.dim + d) * s.inner;
      double* dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  }
  return MakeResult(std::move(out_shape), std::move(out), {a}, [s](Node& self) {
    auto& g = In(self, 0).EnsureGrad();
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t d = 0; d < s.dim; ++d) {
        double* dst = g.data() + (o * s.dim + d) * s.inner;
        const double* src = self.grad.data() + o * s.inner;
        for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Tensor Reshape(const Tensor& a, Shape shape) {
  if (NumElements(shape) != a.size()) {
    throw StructuralError("reshape: cannot view " + ShapeString(a.shape()) +
                          " as " + ShapeString(shape));
  }
  return MakeResult(std::move(shape), a.value(), {a}, [](Node& self) {
    auto& g = In(self, 0).EnsureGrad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor Gather(const Tensor& a, std::size_t axis,
              std::span<const std::size_t> indices) {
  const AxisSplit s = SplitAt(a.shape(), axis);
  for (std::size_t idx : indices) {
    if (idx >= s.dim) {
      throw StructuralError("gather: index " + std::to_string(idx) +
                            " out of range for axis of size " +
                            std::to_string(s.dim));
    }
  }
  Shape out_shape = a.shape();
  out_shape[axis] = indices.size();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  std::vector<double> out(s.outer * idx.size() * s.inner);
  const auto& x = a.value();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double* src = x.data() + (o * s.dim + idx[j]) * s.inner;
      std::copy(src, src + s.inner,
                out.data() + (o * idx.size() + j) * s.inner);
    }
  }
  return MakeResult(std::move(out_shape), std::move(out), {a},
                    [s, idx = std::move(idx)](Node& self) {
                      auto& g = In(self, 0).EnsureGrad();
                      for (std::size_t o = 0; o < s.outer; ++o) {
                        for (std::size_t j = 0; j < idx.size(); ++j) {
                          double* dst = g.data() + (o * s.dim + idx[j]) * s.inner;
                          const double* src =
                              self.grad.data() + (o * idx.size() + j) * s.inner;
                          for (std::size_t i = 0; i < s.inner; ++i) {
                            dst[i] += src[i];
                          }
                        }
                      }
                    });
}

Tensor GatherRows(const Tensor& a, std::span<const std::size_t> rows) {
  return Gather(a, 0, rows);
}

Tensor Concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw StructuralError("concat of zero tensors");
  const Shape& ref = parts.front().shape();
  std::vector<AxisSplit> splits;
  std::size_t total = 0;
  for (const Tensor& t : parts) {
    if (t.shape().size() != ref.size()) {
      throw StructuralError("concat: rank mismatch");
    }
    for (std::size_t d = 0; d < ref.size(); ++d) {
      if (d != axis && t.shape()[d] != ref[d]) {
        throw StructuralError("concat: shapes " + ShapeString(ref) + " and " +
                              ShapeString(t.shape()) + " differ off-axis");
      }
    }
    splits.push_back(SplitAt(t.shape(), axis));
    total += splits.back().dim;
  }
  Shape out_shape = ref;
  out_shape[axis] = total;
  const std::size_t outer = splits.front().outer;
  const std::size_t inner = splits.front().inner;
  std::vector<double> out(outer * total * inner);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& x = parts[p].value();
    const std::size_t dim = splits[p].dim;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy(x.begin() + static_cast<std::ptrdiff_t>(o * dim * inner),
                x.begin() + static_cast<std::ptrdiff_t>((o + 1) * dim * inner),
                out.begin() +
                    static_cast<std::ptrdiff_t>((o * total + offset) * inner));
    }
    offset += dim;
  }
  std::vector<std::size_t> dims;
  for (const auto& s : splits) dims.push_back(s.dim);
  return MakeResult(
      std::move(out_shape), std::move(out), parts,
      [dims, outer, inner, total](Node& self) {
        std::size_t offset = 0;
        for (std::size_t p = 0; p < dims.size(); ++p) {
          Node& in = In(self, p);
          if (in.requires_grad) {
            auto& g = in.EnsureGrad();
            for (std::size_t o = 0; o < outer; ++o) {
              const double* src =
                  self.grad.data() + (o * total + offset) * inner;
              double* dst = g.data() + o * dims[p] * inner;
              for (std::size_t i = 0; i < dims[p] * inner; ++i) dst[i] += src[i];
            }
          }
          offset += dims[p];
        }
      });
}

Tensor LinearIdft(const Tensor& re, const Tensor& im) {
  if (re.shape() != im.shape() || re.shape().empty()) {
    throw StructuralError("idft: real and imaginary parts must share a "
                          "non-scalar shape");
  }
  const std::size_t n = re.shape().back();
  if (!fft::IsPowerOfTwo(n)) {
    throw StructuralError("idft: length " + std::to_string(n) +
                          " is not a power of two");
  }
  const std::size_t rows = re.size() / n;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> out(re.size());
  std::vector<fft::Complex> buf(n);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < n; ++k) {
      buf[k] = {re.value()[r * n + k], im.value()[r * n + k]};
    }
    fft::Backward(buf, buf);
    for (std::size_t t = 0; t < n; ++t) out[r * n + t] = buf[t].real() * inv_n;
  }
  return MakeResult(re.shape(), std::move(out), {re, im},
                    [n, rows, inv_n](Node& self) {
                      Node& nre = In(self, 0);
                      Node& nim = In(self, 1);
                      std::vector<fft::Complex> buf(n);
                      for (std::size_t r = 0; r < rows; ++r) {
                        for (std::size_t t = 0; t < n; ++t) {
                          buf[t] = self.grad[r * n + t];
                        }
                        fft::Forward(buf, buf);
                        if (nre.requires_grad) {
                          auto& g = nre.EnsureGrad();
                          for (std::size_t k = 0; k < n; ++k) {
                            g[r * n + k] += buf[k].real() * inv_n;
                          }
                        }
                        if (nim.requires_grad) {
                          auto& g = nim.EnsureGrad();
                          for (std::size_t k = 0; k < n; ++k) {
                            g[r * n + k] += buf[k].imag() * inv_n;
                          }
                        }
                      }
                    });
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const Tensor& p : params_) {
    if (!p.requires_grad()) {
      throw StructuralError("Adam parameters must track gradients");
    }
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void Adam::Step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& g = params_[k].grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        std::ostringstream msg;
        msg << "non-finite gradient " << g[i] << " in parameter " << k
            << " (shape " << ShapeString(params_[k].shape()) << ") at entry "
            << i << ", step " << step_ + 1;
        throw NumericalError(msg.str());
      }
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& w = params_[k].mutable_value();
    const auto& g = params_[k].grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * gi;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * gi * gi;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
    }
  }
}

void Adam::ZeroGrad() {
  for (Tensor& p : params_) p.ZeroGrad();
}

GradCheckReport CheckGradients(
    const std::function<Tensor(const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& inputs, double h) {
  std::vector<Tensor> params = inputs;
  for (Tensor& p : params) {
    if (!p.requires_grad()) {
      throw StructuralError("gradient check inputs must be parameters");
    }
    p.ZeroGrad();
  }
  Backward(f(params));
  std::vector<std::vector<double>> analytic;
  for (const Tensor& p : params) analytic.push_back(p.grad());

  std::vector<std::vector<double>> numeric;
  double scale = 0.0;
  {
    NoGradGuard no_grad;
    for (Tensor& p : params) {
      auto& x = p.mutable_value();
      std::vector<double> d(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double fp = f(params).item();
        x[i] = saved - h;
        const double fm = f(params).item();
        x[i] = saved;
        d[i] = (fp - fm) / (2.0 * h);
        scale = std::max(scale, std::abs(d[i]));
      }
      numeric.push_back(std::move(d));
    }
  }

  GradCheckReport report;
  const double floor = std::max(1e-3 * scale, 1e-300);
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < numeric[k].size(); ++i) {
      const double a = analytic[k].empty() ? 0.0 : analytic[k][i];
      const double n = numeric[k][i];
      const double err =
          std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
      ++report.checked;
      if (err > report.max_rel_error || !std::isfinite(err)) {
        report.max_rel_error = std::isfinite(err) ? err : HUGE_VAL;
        report.worst_input = k;
        report.worst_index = i;
      }
    }
  }
  for (Tensor& p : params) p.ZeroGrad();
  return report;
}

}  // namespace psz::ad
