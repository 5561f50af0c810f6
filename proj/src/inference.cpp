#include "ssid/inference.hpp"

#include <stdexcept>

namespace ssid {

ScriptIdentifier::ScriptIdentifier(Model model) : model_(std::move(model)) {
  const ModelKind k = model_.desc.spec.kind;
  if (k == ModelKind::ocr) throw std::invalid_argument("ScriptIdentifier needs a base or summarizer model");
  if (k == ModelKind::base) codes_ = ScriptCodeAlphabet(model_.desc.catalog);
}

int ScriptIdentifier::identify(const Tensor& image, int valid_width) const {
  if (!is_baseline()) return posterior(image, valid_width).best();
  Graph<float> g(&model_.params);
  const Var<float> logits = code_logits(encode(model_.desc.encoder, g, image, valid_width), model_.desc.head);
  return dominant_script(ctc_greedy_decode(logits.value()), codes_);
}

ScriptPosterior ScriptIdentifier::posterior(const Tensor& image, int valid_width) const {
  if (is_baseline()) throw std::logic_error("the Base model has no script posterior");
  Graph<float> g(&model_.params);
  const Var<float> features = encode(model_.desc.encoder, g, image, valid_width);
  const Var<float> scores = summarize(features, model_.desc.spec.summarizer(), model_.desc.head);
  const std::vector<double> s(scores.value().values().begin(), scores.value().values().end());
  return make_posterior(s);
}

ScriptIdentifier::Activations ScriptIdentifier::activations(const Tensor& image) const {
  const ModelKind k = model_.desc.spec.kind;
  if (k == ModelKind::base || k == ModelKind::lstm) {
    throw std::invalid_argument("activation maps need a max, mean or gate model");
  }
  Graph<float> g(&model_.params);
  const Var<float> features = encode(model_.desc.encoder, g, image);
  Activations a;
  a.logits = frame_logits(features, model_.desc.head).value();
  if (k == ModelKind::gate) {
    const Tensor& gv = gate_weights(features, model_.desc.head).value();
    a.gates = gv.reshaped(Shape{gv.dim(0)});
  }
  return a;
}

OcrRecognizer::OcrRecognizer(Model model) : model_(std::move(model)) {
  if (model_.desc.spec.kind != ModelKind::ocr) throw std::invalid_argument("OcrRecognizer needs an ocr model");
  glyph_of_.push_back(-1);
  for (const auto& s : model_.desc.alphabet.symbols()) glyph_of_.push_back(std::stoi(s));
}

Tensor OcrRecognizer::frame_logits(const Tensor& image) const {
  Graph<float> g(&model_.params);
  return frame_head(encode(model_.desc.encoder, g, image), "ctc", model_.desc.head).value();
}

std::vector<int> OcrRecognizer::recognize(const Tensor& image) const {
  return recognize(image, model_.desc.ocr.weights, static_cast<std::size_t>(model_.desc.ocr.beam));
}

std::vector<int> OcrRecognizer::recognize(const Tensor& image, const DecodeWeights& weights, std::size_t beam) const {
  const std::vector<int> symbols =
      beam_decode(frame_logits(image), &model_.desc.lm, &model_.desc.prior, weights, beam);
  std::vector<int> glyphs;
  glyphs.reserve(symbols.size());
  for (int s : symbols) glyphs.push_back(glyph_of_.at(static_cast<std::size_t>(s)));
  return glyphs;
}

}  // namespace ssid
