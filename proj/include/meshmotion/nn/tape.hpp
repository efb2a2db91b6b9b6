#pragma once

#include <Eigen/Core>
#include <functional>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace meshmotion::nn {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
};

/// Owns parameters with stable addresses, kept in creation order.
template <class T>
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  Parameter<T>& add(std::string name, Matrix<T> init) {
    for (const auto& p : params_)
      if (p->name == name) throw std::logic_error("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter<T>>();
    p->name = std::move(name);
    p->grad = Matrix<T>::Zero(init.rows(), init.cols());
    p->value = std::move(init);
    params_.push_back(std::move(p));
    return *params_.back();
  }

  Parameter<T>* find(std::string_view name) {
    for (auto& p : params_)
      if (p->name == name) return p.get();
    return nullptr;
  }

  const std::vector<std::unique_ptr<Parameter<T>>>& params() const { return params_; }

  void zero_grad() {
    for (auto& p : params_) p->grad.setZero();
  }

  Eigen::Index scalar_count() const {
    Eigen::Index n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
  }

  std::vector<Matrix<T>> snapshot() const {
    std::vector<Matrix<T>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p->value);
    return out;
  }

  void restore(const std::vector<Matrix<T>>& values) {
    if (values.size() != params_.size()) throw std::invalid_argument("restore: parameter count mismatch");
    for (size_t i = 0; i < values.size(); ++i) params_[i]->value = values[i];
  }

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
};

template <class T>
class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  const Matrix<T>& value() const { return tape->value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode recording of matrix operations. A tape built with
/// `record = false` stores values only and rejects backward().
template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix<T>& grad_out)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var<T> constant(Matrix<T> value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
  }

  Var<T> parameter(Parameter<T>& p) {
    Node n;
    n.value = p.value;
    n.param = &p;
    n.requires_grad = record_;
    return push(std::move(n));
  }

  const Matrix<T>& value(Var<T> v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  bool requires_grad(Var<T> v) const { return nodes_[static_cast<size_t>(v.id)].requires_grad; }

  /// Records an op result. `fn` is dropped when no input requires a gradient.
  Var<T> emit(Matrix<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
    return emit(std::move(value), std::vector<Var<T>>(inputs), std::move(fn));
  }

  Var<T> emit(Matrix<T> value, const std::vector<Var<T>>& inputs, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    if (record_) {
      for (const auto& in : inputs) n.requires_grad = n.requires_grad || requires_grad(in);
      if (n.requires_grad) n.backward = std::move(fn);
    }
    return push(std::move(n));
  }

  template <class Derived>
  void accumulate(Var<T> v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[static_cast<size_t>(v.id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  /// Gradient buffer for `v`, allocated as zeros on first use.
  Matrix<T>& grad_buffer(Var<T> v) {
    Node& n = nodes_[static_cast<size_t>(v.id)];
    if (n.grad.size() == 0) n.grad = Matrix<T>::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void backward(Var<T> out, const Matrix<T>& seed) {
    if (!record_) throw std::logic_error("backward on a non-recording tape");
    if (seed.rows() != value(out).rows() || seed.cols() != value(out).cols())
      throw std::invalid_argument("backward: seed shape mismatch");
    accumulate(out, seed);
    for (int i = out.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.grad.size() == 0) continue;
      if (n.backward) {
        // Copy: the closure may grow other nodes' grads but never this one.
        n.backward(*this, n.grad);
      } else if (n.param) {
        n.param->grad += n.grad;
      }
    }
  }

  void backward(Var<T> scalar_loss) {
    if (value(scalar_loss).size() != 1) throw std::invalid_argument("backward: loss must be 1x1");
    backward(scalar_loss, Matrix<T>::Ones(1, 1));
  }

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    BackwardFn backward;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
  };

  Var<T> push(Node n) {
    nodes_.push_back(std::move(n));
    return Var<T>{this, static_cast<int>(nodes_.size()) - 1};
  }

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace meshmotion::nn
