#pragma once

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssid/tensor.hpp"

namespace ssid {

// Named trainable tensors. Insertion order is the canonical order used by
// checkpoints and the optimizer.
template <class T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    TensorT<T> value;
  };

  int add(const std::string& name, TensorT<T> value);
  int index(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.count(name) != 0; }

  int size() const { return static_cast<int>(entries_.size()); }
  const Entry& entry(int i) const { return entries_.at(static_cast<std::size_t>(i)); }
  TensorT<T>& value(int i) { return entries_.at(static_cast<std::size_t>(i)).value; }
  const TensorT<T>& value(int i) const { return entries_.at(static_cast<std::size_t>(i)).value; }
  TensorT<T>& value(const std::string& name) { return value(index(name)); }
  const TensorT<T>& value(const std::string& name) const { return value(index(name)); }

  std::size_t parameter_count() const;

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, int> by_name_;
};

// One gradient slot per parameter, shaped like it.
template <class T>
class GradBuffer {
 public:
  GradBuffer() = default;
  explicit GradBuffer(const ParamStore<T>& params);

  int size() const { return static_cast<int>(grads_.size()); }
  TensorT<T>& operator[](int i) { return grads_.at(static_cast<std::size_t>(i)); }
  const TensorT<T>& operator[](int i) const { return grads_.at(static_cast<std::size_t>(i)); }
  void zero();
  void add(const GradBuffer& other);
  void scale(T factor);

 private:
  std::vector<TensorT<T>> grads_;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
class Graph;

template <class T>
struct Var {
  Graph<T>* graph = nullptr;
  int id = -1;

  const TensorT<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return graph != nullptr && id >= 0; }
};

// Tape of operations recorded in execution order, which is a topological
// order, so backward walks it in reverse.
template <class T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int self)>;

  explicit Graph(const ParamStore<T>* params = nullptr, GradBuffer<T>* grads = nullptr)
      : params_(params), param_grads_(grads) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> input(TensorT<T> value, bool requires_grad = false, std::string name = "input");
  Var<T> param(int index);
  Var<T> param(const std::string& name) { return param(params_->index(name)); }

  Var<T> record(std::string name, TensorT<T> value, std::vector<int> inputs, BackwardFn backward);

  const TensorT<T>& value(int id) const;
  const TensorT<T>& value(Var<T> v) const { return value(v.id); }
  bool needs_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).needs_grad; }
  const std::vector<int>& inputs(int id) const { return nodes_[static_cast<std::size_t>(id)].inputs; }

  // Gradient slot of a node; allocated zeroed on first access.
  TensorT<T>& grad(int id);
  const TensorT<T>* grad_if_any(int id) const;
  const TensorT<T>* grad_if_any(Var<T> v) const { return grad_if_any(v.id); }

  // Seeds d(loss)/d(loss) = 1 and propagates. Parameter gradients are added
  // into the GradBuffer given at construction. Throws NonFiniteError naming
  // the first node whose gradient is NaN/Inf.
  void backward(Var<T> loss);

  int size() const { return static_cast<int>(nodes_.size()); }
  const ParamStore<T>* params() const { return params_; }

 private:
  struct Node {
    std::string name;
    TensorT<T> value;
    int param = -1;
    std::vector<int> inputs;
    BackwardFn backward;
    bool needs_grad = false;
    std::unique_ptr<TensorT<T>> grad;
  };

  const ParamStore<T>* params_;
  GradBuffer<T>* param_grads_;
  std::vector<Node> nodes_;
};

template <class T>
const TensorT<T>& Var<T>::value() const {
  return graph->value(id);
}

extern template class ParamStore<float>;
extern template class ParamStore<double>;
extern template class GradBuffer<float>;
extern template class GradBuffer<double>;
extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace ssid
