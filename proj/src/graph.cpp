#include "ssid/graph.hpp"

#include <sstream>

namespace ssid {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (int e : shape) n *= static_cast<std::size_t>(e);
  return n;
}

template <class T>
int ParamStore<T>::add(const std::string& name, TensorT<T> value) {
  if (by_name_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  const int i = static_cast<int>(entries_.size());
  entries_.push_back({name, std::move(value)});
  by_name_.emplace(name, i);
  return i;
}

template <class T>
int ParamStore<T>::index(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

template <class T>
std::size_t ParamStore<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

template <class T>
GradBuffer<T>::GradBuffer(const ParamStore<T>& params) {
  grads_.reserve(static_cast<std::size_t>(params.size()));
  for (int i = 0; i < params.size(); ++i) grads_.emplace_back(params.value(i).shape());
}

template <class T>
void GradBuffer<T>::zero() {
  for (auto& g : grads_) g.fill(T(0));
}

template <class T>
void GradBuffer<T>::add(const GradBuffer& other) {
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    T* dst = grads_[i].data();
    const T* src = other.grads_[i].data();
    for (std::size_t j = 0; j < grads_[i].size(); ++j) dst[j] += src[j];
  }
}

template <class T>
void GradBuffer<T>::scale(T factor) {
  for (auto& g : grads_) {
    for (T& v : g.values()) v *= factor;
  }
}

template <class T>
Var<T> Graph<T>::input(TensorT<T> value, bool requires_grad, std::string name) {
  Node n;
  n.name = std::move(name);
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

template <class T>
Var<T> Graph<T>::param(int index) {
  if (!params_) throw std::logic_error("graph has no parameter store");
  Node n;
  n.name = params_->entry(index).name;
  n.param = index;
  n.needs_grad = param_grads_ != nullptr;
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

template <class T>
Var<T> Graph<T>::record(std::string name, TensorT<T> value, std::vector<int> inputs,
                        BackwardFn backward) {
  Node n;
  n.name = std::move(name);
  n.value = std::move(value);
  for (int i : inputs) n.needs_grad = n.needs_grad || nodes_.at(static_cast<std::size_t>(i)).needs_grad;
  n.inputs = std::move(inputs);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size()) - 1};
}

template <class T>
const TensorT<T>& Graph<T>::value(int id) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(id));
  return n.param >= 0 ? params_->value(n.param) : n.value;
}

template <class T>
TensorT<T>& Graph<T>::grad(int id) {
  Node& n = nodes_.at(static_cast<std::size_t>(id));
  if (!n.grad) n.grad = std::make_unique<TensorT<T>>(value(id).shape());
  return *n.grad;
}

template <class T>
const TensorT<T>* Graph<T>::grad_if_any(int id) const {
  return nodes_.at(static_cast<std::size_t>(id)).grad.get();
}

template <class T>
void Graph<T>::backward(Var<T> loss) {
  if (value(loss.id).size() != 1) {
    throw std::invalid_argument("backward expects a scalar loss, got shape " +
                                shape_string(value(loss.id).shape()));
  }
  grad(loss.id).fill(T(1));
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.grad || !n.needs_grad) continue;
    if (!n.grad->all_finite()) {
      throw NonFiniteError("non-finite gradient at node " + std::to_string(id) + " '" + n.name + "'");
    }
    if (n.backward) n.backward(*this, id);
    if (n.param >= 0 && param_grads_) {
      TensorT<T>& dst = (*param_grads_)[n.param];
      const TensorT<T>& src = *n.grad;
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
}

template class ParamStore<float>;
template class ParamStore<double>;
template class GradBuffer<float>;
template class GradBuffer<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace ssid
