#pragma once

#include <random>
#include <string>
#include <variant>
#include <vector>

#include "ssid/graph.hpp"
#include "ssid/ops.hpp"

namespace ssid {

struct ConvStage {
  int kernel_h = 3, kernel_w = 3;
  int stride_h = 1, stride_w = 1;
  int channels = 16;
  Activation activation = Activation::relu6;
  bool operator==(const ConvStage&) const = default;
};

struct PoolStage {
  PoolKind kind = PoolKind::max;
  int window_h = 2, window_w = 2;
  int stride_h = 2, stride_w = 2;
  bool operator==(const PoolStage&) const = default;
};

// Four branches concatenated on channels: 1x1 d1 | 1x1 d1 -> 3x3 d2 |
// 1x1 d1 -> 5x5 d2 | 3x3 avg-pool -> 1x1 d1. relu6, stride 1, SAME.
struct InceptionStage {
  int d1 = 16, d2 = 32;
  int out_channels() const { return 2 * d1 + 2 * d2; }
  bool operator==(const InceptionStage&) const = default;
};

using EncoderStage = std::variant<ConvStage, PoolStage, InceptionStage>;

// Stages run in order on a (height, w, 1) image; the remaining rows of each
// column are then flattened and projected to `feature_dim` (the height
// collapse), giving one feature frame per column.
struct EncoderConfig {
  int input_height = 40;
  std::vector<EncoderStage> stages;
  int feature_dim = 64;
  Activation feature_activation = Activation::tanh;

  // Conv 5x5/2x2 x16 -> MaxPool 2x2/2x2 -> Inception(16,32) x2 ->
  // MaxPool 2x1/2x1 -> collapse 5 rows -> FC 64 tanh.
  static EncoderConfig default_config();

  // Compact text form, e.g. "conv:5x5/2x2:16:relu6 maxpool:2x2/2x2 inception:16,32".
  static std::vector<EncoderStage> parse_stages(const std::string& text);
  static std::string format_stages(const std::vector<EncoderStage>& stages);

  void validate() const;

  int width_stride() const;
  int final_height() const;
  int final_channels() const;
  int collapse_inputs() const { return final_height() * final_channels(); }

  // Input columns seen by one output frame.
  int receptive_field() const;

  bool operator==(const EncoderConfig&) const = default;
};

// Composed ceil-division of the width through every stage.
int output_length(int width, const EncoderConfig& config);

template <class T>
void init_encoder_params(const EncoderConfig& config, ParamStore<T>& params, std::mt19937_64& rng,
                         const std::string& prefix = "enc");

template <class T>
Var<T> inception_module(Var<T> input, const InceptionStage& spec, const std::string& prefix);

// Image (input_height, w, 1) -> features (output_length(valid_width), feature_dim).
// Columns at and beyond `valid_width` are treated as padding: the image is
// cropped to the stride-aligned width before any stage, so the result does
// not depend on how much padding a batch added.
template <class T>
Var<T> encode(const EncoderConfig& config, Graph<T>& graph, const TensorT<T>& image,
              int valid_width = -1, const std::string& prefix = "enc");

// Glorot-uniform weight initialisation for linear, tanh and gate layers.
template <class T>
TensorT<T> glorot_uniform(Shape shape, int fan_in, int fan_out, std::mt19937_64& rng);

// He-uniform initialisation for relu6 convolutions.
template <class T>
TensorT<T> he_uniform(Shape shape, int fan_in, std::mt19937_64& rng);

}  // namespace ssid
