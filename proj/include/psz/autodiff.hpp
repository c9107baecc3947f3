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

// Define-by-run reverse-mode automatic differentiation over dense f64
// tensors.
//
// Every op evaluates eagerly and, when any input tracks gradients, records a
// pullback on the output node. Backward() sorts the recorded graph
// topologically from the loss and runs each pullback once, accumulating into
// input gradients. Complex quantities are carried as separate real and
// imaginary tensors.
//
// Broadcasting is deliberately narrow: in binary elementwise ops the
// smaller operand's shape must equal a trailing suffix of the larger one's
// (a scalar has the empty shape and broadcasts everywhere).

#ifndef PSZ_AUTODIFF_HPP_
#define PSZ_AUTODIFF_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace psz::ad {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

struct Node;

class Tensor {
 public:
  Tensor() = default;

  static Tensor Constant(Shape shape, std::vector<double> values);
  static Tensor Constant(Shape shape, double fill);
  static Tensor Scalar(double v) { return Constant({}, v); }
  // Leaf that tracks gradients. Its grad buffer persists across graphs and
  // accumulates until ZeroGrad().
  static Tensor Parameter(Shape shape, std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t dim(std::size_t axis) const { return shape().at(axis); }
  const std::vector<double>& value() const;
  std::vector<double>& mutable_value();
  double item() const;

  bool requires_grad() const;
  // Empty unless the tensor tracks gradients and a backward pass reached it.
  const std::vector<double>& grad() const;
  std::vector<double>& mutable_grad();
  void ZeroGrad();

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  friend Tensor MakeResult(Shape, std::vector<double>,
                           std::vector<Tensor>,
                           std::function<void(Node&)>);
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  std::shared_ptr<Node> node_;
};

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  bool consumed = false;  // set on a loss once Backward() has run
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> pullback;

  // Allocates (zero-filled) on first use.
  std::vector<double>& EnsureGrad();
};

// Builds an op result. The pullback is recorded only when some input tracks
// gradients and gradient recording is enabled on this thread.
Tensor MakeResult(Shape shape, std::vector<double> value,
                  std::vector<Tensor> inputs,
                  std::function<void(Node&)> pullback);

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool GradEnabled();

// Populates grads of every tracked tensor reachable from `loss`. The loss
// must be a scalar; the graph is released afterwards and a second call on
// the same loss throws StructuralError.
void Backward(const Tensor& loss);

// Elementwise, with suffix broadcasting.
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);

Tensor Scale(const Tensor& a, double s);
Tensor AddConstant(const Tensor& a, double c);
Tensor Relu(const Tensor& a);  // subgradient 0 at 0
Tensor Sin(const Tensor& a);
Tensor Cos(const Tensor& a);
Tensor Square(const Tensor& a);
Tensor Sqrt(const Tensor& a);
// max(a, c); gradient passes where a > c.
Tensor MaxWithConstant(const Tensor& a, double c);

// [n x k] . [k x m] -> [n x m]
Tensor MatMul(const Tensor& a, const Tensor& b);

Tensor Sum(const Tensor& a);   // -> scalar
Tensor Mean(const Tensor& a);  // -> scalar
Tensor SumAxis(const Tensor& a, std::size_t axis);

Tensor Reshape(const Tensor& a, Shape shape);
// Selects `indices` along `axis`; repeats allowed. Pullback scatter-adds.
Tensor Gather(const Tensor& a, std::size_t axis,
              std::span<const std::size_t> indices);
Tensor GatherRows(const Tensor& a, std::span<const std::size_t> rows);
Tensor Concat(const std::vector<Tensor>& parts, std::size_t axis);

// Real part of the inverse DFT over the last axis (length must be a power
// of two): x[t] = 1/N sum_k (re[k] cos(2 pi k t / N) - im[k] sin(...)).
// For a Hermitian spectrum this is the full real inverse transform.
Tensor LinearIdft(const Tensor& re, const Tensor& im);

// c[i*m + j] = sum_p a[i*k + p] * b[p*m + j]; shared with inference paths.
void MatMulKernel(const double* a, const double* b, double* c, std::size_t n,
                  std::size_t k, std::size_t m);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options = {});

  // Applies one update from the parameters' current grads. Throws
  // NumericalError naming the parameter and entry on a non-finite gradient;
  // parameters are left untouched in that case.
  void Step();
  void ZeroGrad();

  long step_count() const { return step_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  std::vector<Tensor> params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long step_ = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
};

// Compares Backward() against central differences for every entry of every
// input. f must rebuild its graph from the given inputs on each call and
// return a scalar. Per-entry error is |a - n| / max(|a|, |n|, floor) with
// floor = 1e-3 * max |n| over all entries.
GradCheckReport CheckGradients(
    const std::function<Tensor(const std::vector<Tensor>&)>& f,
    const std::vector<Tensor>& inputs, double h = 1e-6);

}  // namespace psz::ad

#endif  // PSZ_AUTODIFF_HPP_
