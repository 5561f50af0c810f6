#include "ssid/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace ssid {

template <class T>
Adam<T>::Adam(const ParamStore<T>& params, AdamConfig config) : config_(config) {
  for (int i = 0; i < params.size(); ++i) {
    first_.emplace_back(params.value(i).shape());
    second_.emplace_back(params.value(i).shape());
  }
}

template <class T>
void Adam<T>::step(ParamStore<T>& params, const GradBuffer<T>& grads) {
  if (grads.size() != params.size() || static_cast<int>(first_.size()) != params.size()) {
    throw std::invalid_argument("Adam::step: parameter/gradient count mismatch");
  }
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
  const T lr = static_cast<T>(config_.learning_rate);
  const T eps = static_cast<T>(config_.epsilon);
  for (int p = 0; p < params.size(); ++p) {
    TensorT<T>& w = params.value(p);
    const TensorT<T>& g = grads[p];
    if (g.shape() != w.shape()) throw ShapeError("Adam::step: gradient shape mismatch for " + params.entry(p).name);
    TensorT<T>& m = first_[static_cast<std::size_t>(p)];
    TensorT<T>& v = second_[static_cast<std::size_t>(p)];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T m_hat = m[i] / static_cast<T>(c1);
      const T v_hat = v[i] / static_cast<T>(c2);
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace ssid
