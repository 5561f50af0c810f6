#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ssid/catalog.hpp"
#include "ssid/ini.hpp"
#include "ssid/tensor.hpp"

namespace ssid {

inline constexpr int kLineHeight = 40;

struct NoiseParams {
  double sigma = 0.05;       // additive Gaussian
  int blur_radius = 1;       // box blur, 0 disables
  int jitter = 3;            // vertical placement jitter, px
  double contrast_min = 0.6; // ink value range; background is 0
  double contrast_max = 1.0;
  void validate() const;
};

struct CorpusConfig {
  int scripts = 4;
  int private_glyphs = 24;    // per script
  int shared_glyphs = 6;      // bit-identical across the shared group
  int lookalike_glyphs = 6;   // last script's private glyphs that copy script 0 with a small edit
  int train_lines = 2000;     // per script
  int eval_lines = 400;       // per script and eval split
  int min_glyphs = 3;
  int max_glyphs = 8;
  double distractor_fraction = 0.3;       // train split
  double eval_distractor_fraction = 0.4;  // distractor-heavy eval split
  double shared_fraction = 0.2;           // of non-ignorable slots, for shared-group members
  double vertical_fraction = 0.1;
  NoiseParams noise;
  std::uint64_t seed = 1;

  void validate() const;
  // [corpus] and [noise] sections; unknown keys rejected.
  static CorpusConfig from_ini(const IniConfig& ini);
};

enum class GlyphClass { space, digit, shared, script };

struct GlyphBitmap {
  int height = 0, width = 0;
  std::vector<std::uint8_t> ink;  // 0/1, row-major
  bool operator==(const GlyphBitmap&) const = default;
};

struct Glyph {
  int id = 0;
  GlyphClass cls = GlyphClass::script;
  int script = -1;  // owner for GlyphClass::script
  GlyphBitmap bitmap;
};

struct SyntheticScript {
  std::string id;
  std::vector<int> private_glyphs;
  std::vector<int> shared_glyphs;
};

// Glyph ids are global: 0 is the space, 1..10 digits, then shared glyphs,
// then each script's private glyphs.
struct ScriptSet {
  std::vector<Glyph> glyphs;
  std::vector<SyntheticScript> scripts;
  std::vector<int> shared_members;  // script indices of the shared group
  std::vector<int> digit_glyphs;
  int space_glyph = 0;

  static constexpr const char* kSpaceCode = "SPACE";
  static constexpr const char* kDigitCode = "DIGIT";
  static constexpr const char* kSharedCode = "SH0";

  ScriptCatalog catalog() const;
  // Catalog code a glyph is labeled with for Base training.
  std::string code_of(int glyph) const;
  bool drawable(int glyph, int script) const;
};

ScriptSet make_script_set(const CorpusConfig& config, std::uint64_t seed);

enum class Orientation { horizontal, vertical };

struct GlyphSpan {
  int glyph;
  int begin, end;  // image columns [begin, end)
};

struct LineSample {
  Tensor image;  // (40, w, 1) in [0, 1]
  int script = 0;
  std::vector<int> transcript;
  std::vector<std::string> codes;
  Orientation orientation = Orientation::horizontal;
  std::vector<GlyphSpan> spans;
};

// Left-to-right composition with 1-4 px margins and gaps; vertical lines are
// stacked top-to-bottom and rotated 90 degrees counterclockwise.
LineSample render_line(const ScriptSet& set, std::span<const int> text, int script, Orientation orientation,
                       const NoiseParams& noise, std::uint64_t seed);

struct LinePlan {
  std::string split;
  std::string name;  // image file stem
  int script = 0;
  std::vector<int> text;
  Orientation orientation = Orientation::horizontal;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& corpus_splits() {
  static const std::vector<std::string> splits{"train", "eval", "eval_distractor"};
  return splits;
}

// All lines of every split in manifest order. Transcripts are unique across
// the whole corpus.
std::vector<LinePlan> plan_corpus(const CorpusConfig& config, const ScriptSet& set);
LineSample render_plan(const ScriptSet& set, const LinePlan& plan, const NoiseParams& noise);

struct ManifestRow {
  std::string image;  // relative to the dataset directory
  std::string script;
  Orientation orientation = Orientation::horizontal;
  std::vector<int> transcript;
  std::vector<std::string> codes;
  bool operator==(const ManifestRow&) const = default;
};

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows);
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

// Writes catalog.txt, <split>.tsv and images/<split>/*.pgm under `out`.
void generate_dataset(const CorpusConfig& config, const std::filesystem::path& out);

std::filesystem::path manifest_path(const std::filesystem::path& dataset, const std::string& split);
std::filesystem::path catalog_path(const std::filesystem::path& dataset);

}  // namespace ssid
