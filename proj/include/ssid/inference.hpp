#pragma once

#include <optional>
#include <vector>

#include "ssid/baseline.hpp"
#include "ssid/model.hpp"

namespace ssid {

// Script identification with either a summarizer model or the Base model.
// Immutable after construction; concurrent calls are safe.
class ScriptIdentifier {
 public:
  explicit ScriptIdentifier(Model model);

  const Model& model() const { return model_; }
  const ScriptCatalog& catalog() const { return model_.desc.catalog; }
  bool is_baseline() const { return model_.desc.spec.kind == ModelKind::base; }

  // Script index, or kUndetermined (Base only).
  int identify(const Tensor& image, int valid_width = -1) const;

  // Softmax posterior over scripts; summarizer models only.
  ScriptPosterior posterior(const Tensor& image, int valid_width = -1) const;

  struct Activations {
    Tensor logits;               // L(h): (w', |S|)
    std::optional<Tensor> gates; // G(h): (w'), gate models only
  };
  Activations activations(const Tensor& image) const;

 private:
  Model model_;
  ScriptCodeAlphabet codes_;
};

// One script's OCR model with its LM and grapheme prior.
class OcrRecognizer {
 public:
  explicit OcrRecognizer(Model model);

  const Model& model() const { return model_; }
  const std::string& script() const { return model_.desc.spec.script; }

  Tensor frame_logits(const Tensor& image) const;
  // Glyph ids.
  std::vector<int> recognize(const Tensor& image) const;
  std::vector<int> recognize(const Tensor& image, const DecodeWeights& weights, std::size_t beam) const;

 private:
  Model model_;
  std::vector<int> glyph_of_;  // alphabet index -> glyph id
};

}  // namespace ssid
