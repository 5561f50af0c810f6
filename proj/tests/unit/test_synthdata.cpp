#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "ssid/image_io.hpp"
#include "ssid/synthdata.hpp"

using namespace ssid;
namespace fs = std::filesystem;

namespace {

CorpusConfig small_config() {
  CorpusConfig c;
  c.train_lines = 100;
  c.eval_lines = 20;
  return c;
}

NoiseParams clean_noise() {
  NoiseParams n;
  n.sigma = 0;
  n.blur_radius = 0;
  n.jitter = 0;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ssid_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("script set is deterministic and well formed") {
  const CorpusConfig cfg;
  const ScriptSet a = make_script_set(cfg, 5), b = make_script_set(cfg, 5);
  REQUIRE(a.glyphs.size() == b.glyphs.size());
  for (std::size_t i = 0; i < a.glyphs.size(); ++i) CHECK(a.glyphs[i].bitmap == b.glyphs[i].bitmap);
  CHECK(a.scripts.size() == 4);
  for (const auto& s : a.scripts) CHECK(s.private_glyphs.size() >= 20);
  for (std::size_t i = 0; i < a.scripts.size(); ++i) {
    for (std::size_t j = i + 1; j < a.scripts.size(); ++j) {
      std::vector<int> common;
      std::set_intersection(a.scripts[i].private_glyphs.begin(), a.scripts[i].private_glyphs.end(),
                            a.scripts[j].private_glyphs.begin(), a.scripts[j].private_glyphs.end(),
                            std::back_inserter(common));
      CHECK(common.empty());
    }
  }
  CHECK(a.shared_members.size() == 3);
  for (int m : a.shared_members) CHECK(a.scripts[static_cast<std::size_t>(m)].shared_glyphs.size() >= 5);
  // Shared ids are the same objects in every member, hence bit-identical.
  const auto& first = a.scripts[static_cast<std::size_t>(a.shared_members[0])].shared_glyphs;
  for (int m : a.shared_members) CHECK(a.scripts[static_cast<std::size_t>(m)].shared_glyphs == first);
  for (const auto& g : a.glyphs) {
    if (g.cls != GlyphClass::script) continue;
    CHECK(g.bitmap.height <= 32);
    CHECK(g.bitmap.width >= 8);
    CHECK(g.bitmap.width <= 24);
  }
  CHECK(a.glyphs[0].cls == GlyphClass::space);
  for (int d : a.digit_glyphs) CHECK(a.glyphs[static_cast<std::size_t>(d)].cls == GlyphClass::digit);
  const ScriptCatalog cat = a.catalog();
  CHECK(cat.num_scripts() == 4);
  CHECK(cat.code(ScriptSet::kSharedCode).members.size() == 3);
}

TEST_CASE("single glyph line geometry with clean rendering") {
  ScriptSet set = make_script_set(CorpusConfig{}, 2);
  const int g = set.scripts[0].private_glyphs[0];
  GlyphBitmap& b = set.glyphs[static_cast<std::size_t>(g)].bitmap;
  b.width = 10;
  b.height = 16;
  b.ink.assign(160, 0);
  for (int y = 0; y < 16; ++y) b.ink[static_cast<std::size_t>(y) * 10 + (y % 10)] = 1;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::vector<int> text{g};
    const LineSample s = render_line(set, text, 0, Orientation::horizontal, clean_noise(), seed);
    CHECK(s.image.dim(0) == kLineHeight);
    CHECK(s.image.dim(1) >= 12);
    CHECK(s.image.dim(1) <= 18);
    std::set<float> values(s.image.values().begin(), s.image.values().end());
    CHECK(values.size() == 2);
    CHECK(*values.begin() == 0.0f);
    CHECK(*values.rbegin() >= 0.6f);
    CHECK(*values.rbegin() <= 1.0f);
  }
}

TEST_CASE("rendering is deterministic and in range") {
  const CorpusConfig cfg;
  const ScriptSet set = make_script_set(cfg, 3);
  const auto& p = set.scripts[1].private_glyphs;
  const std::vector<int> text{p[0], p[1], 1, p[2]};
  const LineSample a = render_line(set, text, 1, Orientation::horizontal, cfg.noise, 77);
  const LineSample b = render_line(set, text, 1, Orientation::horizontal, cfg.noise, 77);
  CHECK(a.image == b.image);
  for (float v : a.image.values()) {
    CHECK(v >= 0);
    CHECK(v <= 1);
  }
  CHECK_THROWS(render_line(set, std::vector<int>{}, 1, Orientation::horizontal, cfg.noise, 1));
  CHECK_THROWS(render_line(set, std::vector<int>{set.scripts[0].private_glyphs[0]}, 1, Orientation::horizontal,
                           cfg.noise, 1));
}

TEST_CASE("vertical lines stack glyph heights and rotate counterclockwise") {
  const ScriptSet set = make_script_set(CorpusConfig{}, 4);
  const auto& p = set.scripts[2].private_glyphs;
  const std::vector<int> text{p[3], p[4], p[5]};
  int heights = 0, widths = 0;
  for (int g : text) {
    heights += set.glyphs[static_cast<std::size_t>(g)].bitmap.height;
    widths += set.glyphs[static_cast<std::size_t>(g)].bitmap.width;
  }
  const int k = static_cast<int>(text.size());
  const LineSample v = render_line(set, text, 2, Orientation::vertical, clean_noise(), 9);
  const LineSample h = render_line(set, text, 2, Orientation::horizontal, clean_noise(), 9);
  CHECK(v.image.dim(0) == kLineHeight);
  CHECK(v.image.dim(1) - heights >= k + 1);
  CHECK(v.image.dim(1) - heights <= 4 * (k + 1));
  CHECK(h.image.dim(1) - widths >= k + 1);
  CHECK(h.image.dim(1) - widths <= 4 * (k + 1));
  // Same seed gives the same margins, so only the glyph extents differ.
  CHECK(v.image.dim(1) - heights == h.image.dim(1) - widths);

  // Glyph pixel (y, x) lands at row 39 - (offset + x), column begin + y.
  const GlyphBitmap& b = set.glyphs[static_cast<std::size_t>(text[0])].bitmap;
  const int offset = (kLineHeight - b.width) / 2, begin = v.spans[0].begin;
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      const bool ink = b.ink[static_cast<std::size_t>(y) * b.width + x] != 0;
      CHECK((v.image.at(kLineHeight - 1 - (offset + x), begin + y, 0) > 0) == ink);
    }
  }
}

TEST_CASE("corpus plan: balance, label soundness, unique transcripts, private majority") {
  const CorpusConfig cfg = small_config();
  const ScriptSet set = make_script_set(cfg, cfg.seed);
  const auto plans = plan_corpus(cfg, set);
  CHECK(plans.size() == static_cast<std::size_t>(cfg.scripts * (cfg.train_lines + 2 * cfg.eval_lines)));
  std::set<std::vector<int>> seen;
  std::map<std::string, std::vector<int>> per_split;
  for (const auto& p : plans) {
    CHECK(seen.insert(p.text).second);
    per_split[p.split].resize(static_cast<std::size_t>(cfg.scripts));
    ++per_split[p.split][static_cast<std::size_t>(p.script)];
    int priv = 0, shared = 0, ignorable = 0;
    for (int g : p.text) {
      CHECK(set.drawable(g, p.script));
      const auto cls = set.glyphs[static_cast<std::size_t>(g)].cls;
      priv += cls == GlyphClass::script;
      shared += cls == GlyphClass::shared;
      ignorable += cls == GlyphClass::space || cls == GlyphClass::digit;
    }
    CHECK(priv >= 1);
    CHECK(priv >= shared);
    if (p.split == "eval") CHECK(ignorable + shared == 0);
    CHECK(static_cast<int>(p.text.size()) >= cfg.min_glyphs);
    CHECK(static_cast<int>(p.text.size()) <= cfg.max_glyphs);
  }
  CHECK(per_split["train"] == std::vector<int>(4, 100));
  CHECK(per_split["eval"] == std::vector<int>(4, 20));
  CHECK(per_split["eval_distractor"] == std::vector<int>(4, 20));
}

TEST_CASE("distractor frequency over 10k lines") {
  CorpusConfig cfg;
  cfg.train_lines = 2500;
  cfg.eval_lines = 1;
  const ScriptSet set = make_script_set(cfg, cfg.seed);
  long slots = 0, ignorable = 0;
  for (const auto& p : plan_corpus(cfg, set)) {
    if (p.split != "train") continue;
    for (int g : p.text) {
      const auto cls = set.glyphs[static_cast<std::size_t>(g)].cls;
      ++slots;
      ignorable += cls == GlyphClass::space || cls == GlyphClass::digit;
    }
  }
  const double frac = static_cast<double>(ignorable) / static_cast<double>(slots);
  CHECK(frac >= 0.25);
  CHECK(frac <= 0.35);
}

TEST_CASE("generated dataset: manifest, images, byte-identical regeneration") {
  CorpusConfig cfg = small_config();
  cfg.train_lines = 25;
  cfg.eval_lines = 5;
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  generate_dataset(cfg, a);
  generate_dataset(cfg, b);
  const auto rows = read_manifest(manifest_path(a, "train"));
  CHECK(rows.size() == 100);
  std::map<std::string, int> per;
  for (const auto& r : rows) ++per[r.script];
  for (const auto& [s, n] : per) CHECK(n == 25);
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    REQUIRE(fs::exists(b / rel));
    CHECK(slurp(entry.path()) == slurp(b / rel));
  }
  const ScriptCatalog cat = ScriptCatalog::load_file(catalog_path(a));
  CHECK(cat.num_scripts() == 4);
  for (const auto& r : rows) {
    const GrayImage img = read_pgm(a / r.image);
    CHECK(img.height == kLineHeight);
    CHECK(img.width >= 8);
  }
  std::set<std::vector<int>> train_texts;
  for (const auto& r : rows) train_texts.insert(r.transcript);
  for (const auto& split : {"eval", "eval_distractor"}) {
    for (const auto& r : read_manifest(manifest_path(a, split))) CHECK(train_texts.count(r.transcript) == 0);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("manifest round trip and errors") {
  const fs::path dir = scratch("manifest");
  fs::create_directories(dir);
  const std::vector<ManifestRow> rows{{"images/train/S0_00000.pgm", "S0", Orientation::vertical, {11, 0, 3}, {"S0", "SPACE", "DIGIT"}}};
  write_manifest(dir / "m.tsv", rows);
  CHECK(read_manifest(dir / "m.tsv") == rows);
  {
    std::ofstream os(dir / "bad.tsv");
    os << "# comment\nimg\tS0\tx\t1\tS0\n";
  }
  CHECK_THROWS(read_manifest(dir / "bad.tsv"));
  fs::remove_all(dir);
}

TEST_CASE("corpus config validation") {
  CorpusConfig c;
  c.scripts = 1;
  CHECK_THROWS(c.validate());
  c = CorpusConfig{};
  c.distractor_fraction = 1.5;
  CHECK_THROWS(c.validate());
  std::istringstream text("[corpus]\nscripts = 4\nbogus = 1\n");
  const IniConfig ini = IniConfig::parse(text, "t.ini");
  CHECK_THROWS_AS(CorpusConfig::from_ini(ini), ConfigError);
}
