#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "ssid/ini.hpp"
#include "ssid/model.hpp"
#include "ssid/optimizer.hpp"
#include "ssid/synthdata.hpp"

namespace ssid {

struct DatasetLine {
  std::string image_path;
  Tensor image;  // (40, w, 1)
  int script = 0;
  Orientation orientation = Orientation::horizontal;
  std::vector<int> transcript;
  std::vector<std::string> codes;
};

struct Dataset {
  ScriptCatalog catalog;
  std::vector<DatasetLine> lines;
};

// Catalog plus one split's manifest and images.
Dataset load_dataset(const std::filesystem::path& root, const std::string& split);

struct TrainConfig {
  int epochs = 4;
  int batch_size = 16;
  int max_steps = -1;  // -1: run all epochs; 0 returns the initialisation
  double learning_rate = 2e-3;
  double final_lr_fraction = 0.1;  // linear decay to lr * this
  std::uint64_t seed = 1;
  int log_every = 100;
  AdamConfig adam;
  EncoderConfig encoder = EncoderConfig::default_config();
  HeadConfig head;
  OcrSettings ocr;

  void validate() const;
  // [train], [encoder], [head] and [ocr] sections; unknown keys rejected.
  static TrainConfig from_ini(const IniConfig& ini);
};

struct TrainStats {
  std::int64_t steps = 0;
  std::int64_t samples = 0;
  std::int64_t skipped_infeasible = 0;
  std::vector<double> epoch_loss;  // mean per-sample loss
};

// Mini-batch training. Lines are bucketed by width so each batch pads
// little; padded columns are excluded from every computation. Samples in a
// batch run concurrently, gradients are reduced in sample order, so results
// do not depend on the thread count.
Model train_model(const TrainConfig& config, const ModelSpec& spec, const Dataset& data, std::ostream* log = nullptr,
                  TrainStats* stats = nullptr);

// Descriptor for `spec` before training (alphabet and LM need the data).
ModelDescriptor make_descriptor(const TrainConfig& config, const ModelSpec& spec, const Dataset& data);

}  // namespace ssid
