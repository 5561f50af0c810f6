#pragma once

#include <cstdint>
#include <vector>

#include "ssid/graph.hpp"

namespace ssid {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam. Moment accumulators mirror the parameter shapes.
template <class T>
class Adam {
 public:
  Adam(const ParamStore<T>& params, AdamConfig config);

  void step(ParamStore<T>& params, const GradBuffer<T>& grads);

  std::int64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

 private:
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<TensorT<T>> first_;
  std::vector<TensorT<T>> second_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace ssid
