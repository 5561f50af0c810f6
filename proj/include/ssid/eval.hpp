#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ssid/inference.hpp"
#include "ssid/train.hpp"

namespace ssid {

std::size_t edit_distance(std::span<const int> a, std::span<const int> b);

// One OCR model per catalog script, keyed by script index.
using OcrModels = std::map<int, std::shared_ptr<const OcrRecognizer>>;

// Loads <dir>/<script>.ckpt for every catalog script.
OcrModels load_ocr_models(const std::filesystem::path& dir, const ScriptCatalog& catalog);

struct Recognition {
  int script = kUndetermined;
  std::vector<int> transcript;
};

// Hard script selection then that script's OCR. With `oracle_script` >= 0
// the given script replaces the classifier's choice.
Recognition recognize(const Tensor& image, const ScriptIdentifier& identifier, const OcrModels& ocr,
                      int oracle_script = -1);

// Memoised OCR output per (line, script), so several systems evaluated on
// one split decode each pair once. Thread-safe.
class OcrCache {
 public:
  const std::vector<int>& get(std::size_t line, int script, const std::function<std::vector<int>()>& compute);

 private:
  std::mutex mu_;
  std::map<std::pair<std::size_t, int>, std::unique_ptr<std::vector<int>>> entries_;
};

struct EvalReport {
  std::vector<std::string> scripts;
  std::int64_t lines = 0;
  std::int64_t errors = 0;
  double error_rate = 0;
  // rows = true script, columns = predicted script then UNDETERMINED.
  std::vector<std::vector<std::int64_t>> confusion;
  // Per script: reference glyphs and summed edit distances.
  std::vector<std::int64_t> ref_chars;
  std::vector<std::int64_t> pipeline_edits;
  std::vector<std::int64_t> oracle_edits;
  double pipeline_cer = 0;
  double oracle_cer = 0;
  double delta_cer = 0;

  double script_cer(int s) const;
  double script_oracle_cer(int s) const;
  void write_tsv(std::ostream& os) const;
};

// Script-id error, confusion, and CER of the selection pipeline against
// oracle-script OCR. With `oracle` set the pipeline itself uses the true
// script. An UNDETERMINED result skips recognition and costs the full
// reference length.
EvalReport evaluate(const Dataset& data, const ScriptIdentifier& identifier, const OcrModels& ocr, bool oracle = false,
                    OcrCache* cache = nullptr);

// Script-id predictions only (no OCR).
std::vector<int> identify_all(const Dataset& data, const ScriptIdentifier& identifier);

struct ActivationFiles {
  std::filesystem::path logits;
  std::filesystem::path gates;  // empty unless the model is a gate model
};

// L(h) as a |S|-row, w'-column PGM, min-max normalised; for gate models also
// g as a 1-row strip with pixel = min(255, floor(256 g)).
ActivationFiles dump_activations(const ScriptIdentifier& identifier, const Tensor& image,
                                 const std::filesystem::path& out_dir, const std::string& stem = "activations");

// Inverse of the gate strip quantisation: the centre of the pixel's bin.
inline double gate_from_pixel(int p) { return (p + 0.5) / 256.0; }

}  // namespace ssid
