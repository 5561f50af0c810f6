#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include "ssid/alphabet.hpp"
#include "ssid/catalog.hpp"
#include "ssid/ctc.hpp"
#include "ssid/encoder.hpp"
#include "ssid/ngram.hpp"
#include "ssid/summarizer.hpp"

namespace ssid {

enum class ModelKind { base, max, mean, gate, lstm, ocr };

struct ModelSpec {
  ModelKind kind = ModelKind::gate;
  std::string script;  // ocr only

  // "base", "max", "mean", "gate", "lstm" or "ocr:<script>".
  static ModelSpec parse(const std::string& text);
  std::string to_string() const;
  bool is_summarizer() const { return kind != ModelKind::base && kind != ModelKind::ocr; }
  SummarizerKind summarizer() const;
};

struct OcrSettings {
  int lm_order = 3;
  double lm_k = 0.1;
  double prior_decay = 0.999;
  double prior_floor = 1e-6;
  DecodeWeights weights;
  int beam = 8;
  bool operator==(const OcrSettings& o) const;
};

// Everything needed to rebuild the parameter layout and run inference.
struct ModelDescriptor {
  ModelSpec spec;
  EncoderConfig encoder = EncoderConfig::default_config();
  HeadConfig head;
  ScriptCatalog catalog;
  // ocr only
  SymbolAlphabet alphabet;  // glyph ids as decimal strings
  OcrSettings ocr;
  NGramLM lm;
  GraphemePrior prior;

  std::string to_json() const;
  static ModelDescriptor from_json(const std::string& text);
};

struct Model {
  ModelDescriptor desc;
  ParamStore<float> params;

  // Fresh Glorot-initialised parameters for the descriptor's layout.
  static Model initialize(ModelDescriptor desc, std::uint64_t seed);

  // "SSID1", u32 version, u32 descriptor length + JSON, u32 tensor count,
  // then per tensor: u16 name length + name, u8 rank, u32 dims, u8 dtype
  // (0 = float32), little-endian payload.
  void save(std::ostream& os) const;
  void save_file(const std::filesystem::path& path) const;
  static Model load(std::istream& is);
  static Model load_file(const std::filesystem::path& path);
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ssid
