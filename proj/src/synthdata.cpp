#include "ssid/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ssid/image_io.hpp"

namespace ssid {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x51ed270b1a4f3c5dULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void stamp(GlyphBitmap& g, double x, double y, double radius) {
  const int x0 = static_cast<int>(std::floor(x - radius)), x1 = static_cast<int>(std::ceil(x + radius));
  const int y0 = static_cast<int>(std::floor(y - radius)), y1 = static_cast<int>(std::ceil(y + radius));
  for (int yy = std::max(0, y0); yy <= std::min(g.height - 1, y1); ++yy) {
    for (int xx = std::max(0, x0); xx <= std::min(g.width - 1, x1); ++xx) {
      const double dx = xx + 0.5 - x, dy = yy + 0.5 - y;
      if (dx * dx + dy * dy <= radius * radius) g.ink[static_cast<std::size_t>(yy) * g.width + xx] = 1;
    }
  }
}

// Quadratic Bezier stroke from p0 through control c to p1.
void draw_curve(GlyphBitmap& g, double x0, double y0, double cx, double cy, double x1, double y1, double radius) {
  const double len = std::hypot(cx - x0, cy - y0) + std::hypot(x1 - cx, y1 - cy);
  const int steps = std::max(2, static_cast<int>(len * 4));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps, u = 1 - t;
    stamp(g, u * u * x0 + 2 * u * t * cx + t * t * x1, u * u * y0 + 2 * u * t * cy + t * t * y1, radius);
  }
}

int ink_count(const GlyphBitmap& g) { return static_cast<int>(std::count(g.ink.begin(), g.ink.end(), 1)); }

bool too_similar(const GlyphBitmap& a, const GlyphBitmap& b) {
  if (a.height != b.height || a.width != b.width) return false;
  int diff = 0;
  for (std::size_t i = 0; i < a.ink.size(); ++i) diff += a.ink[i] != b.ink[i];
  return diff < static_cast<int>(0.08 * a.ink.size()) + 1;
}

GlyphBitmap random_glyph(std::mt19937_64& rng) {
  for (;;) {
    GlyphBitmap g;
    g.height = uniform_int(rng, 14, 28);
    g.width = uniform_int(rng, 8, 20);
    g.ink.assign(static_cast<std::size_t>(g.height) * g.width, 0);
    const int strokes = uniform_int(rng, 2, 4);
    for (int s = 0; s < strokes; ++s) {
      auto px = [&] { return uniform_real(rng, 1.0, g.width - 1.0); };
      auto py = [&] { return uniform_real(rng, 1.0, g.height - 1.0); };
      const double x0 = px(), y0 = py(), x1 = px(), y1 = py(), cx = px(), cy = py();
      draw_curve(g, x0, y0, cx, cy, x1, y1, 1.1);
    }
    const int ink = ink_count(g);
    if (ink >= static_cast<int>(0.12 * g.ink.size()) && ink <= static_cast<int>(0.6 * g.ink.size())) return g;
  }
}

// Seven-segment digits on a 10x18 box: a fixed, seed-independent class.
GlyphBitmap digit_glyph(int d) {
  static const char* segments[10] = {"abcdef", "bc", "abdeg", "abcdg", "bcfg", "acdfg", "acdefg", "abc", "abcdefg", "abcdfg"};
  GlyphBitmap g;
  g.height = 18;
  g.width = 10;
  g.ink.assign(static_cast<std::size_t>(g.height) * g.width, 0);
  const double l = 2, r = 8, t = 2, m = 9, b = 16;
  for (const char* s = segments[d]; *s; ++s) {
    switch (*s) {
      case 'a': draw_curve(g, l, t, (l + r) / 2, t, r, t, 1.0); break;
      case 'b': draw_curve(g, r, t, r, (t + m) / 2, r, m, 1.0); break;
      case 'c': draw_curve(g, r, m, r, (m + b) / 2, r, b, 1.0); break;
      case 'd': draw_curve(g, l, b, (l + r) / 2, b, r, b, 1.0); break;
      case 'e': draw_curve(g, l, m, l, (m + b) / 2, l, b, 1.0); break;
      case 'f': draw_curve(g, l, t, l, (t + m) / 2, l, m, 1.0); break;
      case 'g': draw_curve(g, l, m, (l + r) / 2, m, r, m, 1.0); break;
    }
  }
  return g;
}

// A copy of `base` with one small extra mark, so it stays confusable.
GlyphBitmap lookalike_of(const GlyphBitmap& base, std::mt19937_64& rng) {
  GlyphBitmap g = base;
  for (;;) {
    const int x = uniform_int(rng, 0, g.width - 3), y = uniform_int(rng, 0, g.height - 3);
    bool clear = true;
    for (int dy = 0; dy < 3; ++dy) {
      for (int dx = 0; dx < 3; ++dx) clear = clear && !g.ink[static_cast<std::size_t>(y + dy) * g.width + x + dx];
    }
    if (!clear) continue;
    for (int dy = 0; dy < 3; ++dy) {
      for (int dx = 0; dx < 3; ++dx) g.ink[static_cast<std::size_t>(y + dy) * g.width + x + dx] = 1;
    }
    return g;
  }
}

std::string script_id(int s) { return "S" + std::to_string(s); }

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("corpus config: " + what);
}

}  // namespace

void NoiseParams::validate() const {
  require(sigma >= 0 && sigma <= 0.5, "noise sigma must be in [0, 0.5]");
  require(blur_radius >= 0 && blur_radius <= 3, "blur_radius must be in 0..3");
  require(jitter >= 0 && jitter <= 5, "jitter must be in 0..5");
  require(contrast_min > 0 && contrast_min <= contrast_max && contrast_max <= 1, "need 0 < contrast_min <= contrast_max <= 1");
}

void CorpusConfig::validate() const {
  require(scripts >= 2 && scripts <= 26, "scripts must be in 2..26");
  require(private_glyphs >= 20 && private_glyphs <= 200, "private_glyphs must be in 20..200");
  require(shared_glyphs >= 0 && shared_glyphs <= 50, "shared_glyphs must be in 0..50");
  require(lookalike_glyphs >= 0 && lookalike_glyphs <= private_glyphs / 2, "lookalike_glyphs must be in 0..private_glyphs/2");
  require(train_lines >= 1 && eval_lines >= 1, "line counts must be positive");
  require(min_glyphs >= 1 && max_glyphs >= min_glyphs && max_glyphs <= 40, "need 1 <= min_glyphs <= max_glyphs <= 40");
  require(distractor_fraction >= 0 && distractor_fraction < 0.9, "distractor_fraction must be in [0, 0.9)");
  require(eval_distractor_fraction >= 0 && eval_distractor_fraction < 0.9, "eval_distractor_fraction must be in [0, 0.9)");
  require(shared_fraction >= 0 && shared_fraction <= 0.5, "shared_fraction must be in [0, 0.5]");
  require(vertical_fraction >= 0 && vertical_fraction <= 1, "vertical_fraction must be in [0, 1]");
  noise.validate();
}

CorpusConfig CorpusConfig::from_ini(const IniConfig& ini) {
  CorpusConfig c;
  c.scripts = ini.get_int("corpus", "scripts", c.scripts);
  c.private_glyphs = ini.get_int("corpus", "private_glyphs", c.private_glyphs);
  c.shared_glyphs = ini.get_int("corpus", "shared_glyphs", c.shared_glyphs);
  c.lookalike_glyphs = ini.get_int("corpus", "lookalike_glyphs", c.lookalike_glyphs);
  c.train_lines = ini.get_int("corpus", "train_lines", c.train_lines);
  c.eval_lines = ini.get_int("corpus", "eval_lines", c.eval_lines);
  c.min_glyphs = ini.get_int("corpus", "min_glyphs", c.min_glyphs);
  c.max_glyphs = ini.get_int("corpus", "max_glyphs", c.max_glyphs);
  c.distractor_fraction = ini.get_double("corpus", "distractor_fraction", c.distractor_fraction);
  c.eval_distractor_fraction = ini.get_double("corpus", "eval_distractor_fraction", c.eval_distractor_fraction);
  c.shared_fraction = ini.get_double("corpus", "shared_fraction", c.shared_fraction);
  c.vertical_fraction = ini.get_double("corpus", "vertical_fraction", c.vertical_fraction);
  c.seed = ini.get_u64("corpus", "seed", c.seed);
  c.noise.sigma = ini.get_double("noise", "sigma", c.noise.sigma);
  c.noise.blur_radius = ini.get_int("noise", "blur_radius", c.noise.blur_radius);
  c.noise.jitter = ini.get_int("noise", "jitter", c.noise.jitter);
  c.noise.contrast_min = ini.get_double("noise", "contrast_min", c.noise.contrast_min);
  c.noise.contrast_max = ini.get_double("noise", "contrast_max", c.noise.contrast_max);
  ini.check_all_used();
  c.validate();
  return c;
}

ScriptCatalog ScriptSet::catalog() const {
  std::vector<CatalogCode> codes;
  for (const auto& s : scripts) codes.push_back({s.id, CodeKind::script, {s.id}});
  codes.push_back({kSpaceCode, CodeKind::ignore, {}});
  codes.push_back({kDigitCode, CodeKind::ignore, {}});
  if (!scripts.empty() && !scripts[static_cast<std::size_t>(shared_members.front())].shared_glyphs.empty()) {
    std::vector<std::string> members;
    for (int m : shared_members) members.push_back(scripts[static_cast<std::size_t>(m)].id);
    codes.push_back({kSharedCode, CodeKind::shared, members});
  }
  return ScriptCatalog(std::move(codes));
}

std::string ScriptSet::code_of(int glyph) const {
  const Glyph& g = glyphs.at(static_cast<std::size_t>(glyph));
  switch (g.cls) {
    case GlyphClass::space: return kSpaceCode;
    case GlyphClass::digit: return kDigitCode;
    case GlyphClass::shared: return kSharedCode;
    case GlyphClass::script: return scripts.at(static_cast<std::size_t>(g.script)).id;
  }
  return "?";
}

bool ScriptSet::drawable(int glyph, int script) const {
  if (glyph < 0 || glyph >= static_cast<int>(glyphs.size())) return false;
  const Glyph& g = glyphs[static_cast<std::size_t>(glyph)];
  switch (g.cls) {
    case GlyphClass::space:
    case GlyphClass::digit: return true;
    case GlyphClass::shared: return std::find(shared_members.begin(), shared_members.end(), script) != shared_members.end();
    case GlyphClass::script: return g.script == script;
  }
  return false;
}

ScriptSet make_script_set(const CorpusConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(mix_seed({seed, 0x676c797068ULL}));
  ScriptSet set;
  std::vector<GlyphBitmap> seen;
  auto fresh = [&]() {
    for (;;) {
      GlyphBitmap g = random_glyph(rng);
      if (std::none_of(seen.begin(), seen.end(), [&](const GlyphBitmap& o) { return too_similar(g, o); })) {
        seen.push_back(g);
        return g;
      }
    }
  };
  auto add = [&](GlyphClass cls, int script, GlyphBitmap bmp) {
    const int id = static_cast<int>(set.glyphs.size());
    set.glyphs.push_back({id, cls, script, std::move(bmp)});
    return id;
  };

  GlyphBitmap space;
  space.height = 20;
  space.width = 6;
  space.ink.assign(static_cast<std::size_t>(space.height) * space.width, 0);
  set.space_glyph = add(GlyphClass::space, -1, space);
  for (int d = 0; d < 10; ++d) {
    seen.push_back(digit_glyph(d));
    set.digit_glyphs.push_back(add(GlyphClass::digit, -1, digit_glyph(d)));
  }

  const int n = config.scripts;
  for (int s = std::max(0, n - 3); s < n; ++s) set.shared_members.push_back(s);
  set.scripts.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) set.scripts[static_cast<std::size_t>(s)].id = script_id(s);
  for (int k = 0; k < config.shared_glyphs; ++k) {
    const int id = add(GlyphClass::shared, -1, fresh());
    for (int m : set.shared_members) set.scripts[static_cast<std::size_t>(m)].shared_glyphs.push_back(id);
  }
  for (int s = 0; s < n; ++s) {
    const bool last = s == n - 1;
    const int lookalikes = last ? config.lookalike_glyphs : 0;
    for (int k = 0; k < config.private_glyphs - lookalikes; ++k) {
      set.scripts[static_cast<std::size_t>(s)].private_glyphs.push_back(add(GlyphClass::script, s, fresh()));
    }
    for (int k = 0; k < lookalikes; ++k) {
      const int base = set.scripts[0].private_glyphs[static_cast<std::size_t>(k)];
      GlyphBitmap copy = lookalike_of(set.glyphs[static_cast<std::size_t>(base)].bitmap, rng);
      seen.push_back(copy);
      set.scripts[static_cast<std::size_t>(s)].private_glyphs.push_back(add(GlyphClass::script, s, std::move(copy)));
    }
  }
  return set;
}

LineSample render_line(const ScriptSet& set, std::span<const int> text, int script, Orientation orientation,
                       const NoiseParams& noise, std::uint64_t seed) {
  if (text.empty()) throw std::invalid_argument("render_line: empty text");
  if (script < 0 || script >= static_cast<int>(set.scripts.size())) throw std::out_of_range("render_line: bad script");
  for (int g : text) {
    if (!set.drawable(g, script)) {
      throw std::invalid_argument("render_line: glyph " + std::to_string(g) + " not drawable in " +
                                  set.scripts[static_cast<std::size_t>(script)].id);
    }
  }
  noise.validate();
  std::mt19937_64 rng(mix_seed({seed, 0x72656e646572ULL}));
  const bool vertical = orientation == Orientation::vertical;
  const float ink = static_cast<float>(uniform_real(rng, noise.contrast_min, noise.contrast_max));

  // Layout along the reading direction; `along` is the glyph extent in it.
  const int lead = uniform_int(rng, 1, 4);
  std::vector<int> gaps;
  int length = lead;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const GlyphBitmap& b = set.glyphs[static_cast<std::size_t>(text[i])].bitmap;
    length += vertical ? b.height : b.width;
    gaps.push_back(uniform_int(rng, 1, 4));  // the last one is the trailing margin
    length += gaps.back();
  }

  LineSample out;
  out.script = script;
  out.transcript.assign(text.begin(), text.end());
  out.orientation = orientation;
  for (int g : text) out.codes.push_back(set.code_of(g));
  out.image = Tensor(Shape{kLineHeight, length, 1});

  int pos = lead;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const GlyphBitmap& b = set.glyphs[static_cast<std::size_t>(text[i])].bitmap;
    const int across = vertical ? b.width : b.height;
    const int along = vertical ? b.height : b.width;
    const int offset = std::clamp((kLineHeight - across) / 2 + uniform_int(rng, -noise.jitter, noise.jitter), 0,
                                  kLineHeight - across);
    for (int y = 0; y < b.height; ++y) {
      for (int x = 0; x < b.width; ++x) {
        if (!b.ink[static_cast<std::size_t>(y) * b.width + x]) continue;
        // Vertical text is drawn in a 40-wide column at (pos + y, offset + x),
        // then rotated counterclockwise: (row, col) -> (39 - col, row).
        const int row = vertical ? kLineHeight - 1 - (offset + x) : offset + y;
        const int col = vertical ? pos + y : pos + x;
        out.image.at(row, col, 0) = ink;
      }
    }
    out.spans.push_back({text[i], pos, pos + along});
    pos += along + gaps[i];
  }

  if (noise.blur_radius > 0) {
    const int r = noise.blur_radius, h = kLineHeight, w = length;
    Tensor blurred(out.image.shape());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float s = 0;
        int count = 0;
        for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
          for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
            s += out.image.at(yy, xx, 0);
            ++count;
          }
        }
        blurred.at(y, x, 0) = s / static_cast<float>(count);
      }
    }
    out.image = std::move(blurred);
  }
  if (noise.sigma > 0) {
    std::normal_distribution<double> gauss(0.0, noise.sigma);
    for (std::size_t i = 0; i < out.image.size(); ++i) out.image[i] += static_cast<float>(gauss(rng));
  }
  for (std::size_t i = 0; i < out.image.size(); ++i) out.image[i] = std::clamp(out.image[i], 0.0f, 1.0f);
  return out;
}

namespace {

// One line's glyphs: each slot is ignorable with probability `distractors`
// (a space where allowed, otherwise a digit); other slots are shared with
// probability `shared` for shared-group scripts, else private. Private
// glyphs must be at least half of the non-ignorable ones.
std::vector<int> sample_text(const ScriptSet& set, const CorpusConfig& cfg, int script, double distractors,
                             double shared, std::mt19937_64& rng) {
  const SyntheticScript& s = set.scripts[static_cast<std::size_t>(script)];
  const bool can_share = !s.shared_glyphs.empty();
  for (;;) {
    const int len = uniform_int(rng, cfg.min_glyphs, cfg.max_glyphs);
    std::vector<int> text;
    int privates = 0, shareds = 0;
    for (int i = 0; i < len; ++i) {
      if (uniform_real(rng, 0, 1) < distractors) {
        const bool space_ok = i > 0 && i + 1 < len && text.back() != set.space_glyph;
        if (space_ok && uniform_real(rng, 0, 1) < 0.3) {
          text.push_back(set.space_glyph);
        } else {
          text.push_back(set.digit_glyphs[static_cast<std::size_t>(uniform_int(rng, 0, 9))]);
        }
      } else if (can_share && uniform_real(rng, 0, 1) < shared) {
        text.push_back(s.shared_glyphs[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(s.shared_glyphs.size()) - 1))]);
        ++shareds;
      } else {
        text.push_back(s.private_glyphs[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(s.private_glyphs.size()) - 1))]);
        ++privates;
      }
    }
    if (privates >= 1 && privates >= shareds) return text;
  }
}

std::string text_key(const std::vector<int>& text) {
  std::string k;
  for (int g : text) k += std::to_string(g) + ' ';
  return k;
}

std::string orientation_code(Orientation o) { return o == Orientation::vertical ? "v" : "h"; }

}  // namespace

std::vector<LinePlan> plan_corpus(const CorpusConfig& config, const ScriptSet& set) {
  config.validate();
  std::vector<LinePlan> plans;
  std::set<std::string> used;
  const auto& splits = corpus_splits();
  for (std::size_t sp = 0; sp < splits.size(); ++sp) {
    const bool train = sp == 0, clean = sp == 1;
    const int lines = train ? config.train_lines : config.eval_lines;
    const double distractors = train ? config.distractor_fraction : clean ? 0.0 : config.eval_distractor_fraction;
    const double shared = clean ? 0.0 : config.shared_fraction;
    for (int s = 0; s < config.scripts; ++s) {
      for (int i = 0; i < lines; ++i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
          if (attempt > 10000) throw std::runtime_error("plan_corpus: cannot find enough distinct transcripts");
          const std::uint64_t seed = mix_seed({config.seed, sp, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(i), attempt});
          std::mt19937_64 rng(seed);
          std::vector<int> text = sample_text(set, config, s, distractors, shared, rng);
          if (!used.insert(text_key(text)).second) continue;
          LinePlan p;
          p.split = splits[sp];
          char name[32];
          std::snprintf(name, sizeof(name), "%s_%05d", set.scripts[static_cast<std::size_t>(s)].id.c_str(), i);
          p.name = name;
          p.script = s;
          p.text = std::move(text);
          p.orientation = uniform_real(rng, 0, 1) < config.vertical_fraction ? Orientation::vertical : Orientation::horizontal;
          p.seed = splitmix64(seed);
          plans.push_back(std::move(p));
          break;
        }
      }
    }
  }
  return plans;
}

LineSample render_plan(const ScriptSet& set, const LinePlan& plan, const NoiseParams& noise) {
  return render_line(set, plan.text, plan.script, plan.orientation, noise, plan.seed);
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : rows) {
    os << r.image << '\t' << r.script << '\t' << orientation_code(r.orientation) << '\t';
    for (std::size_t i = 0; i < r.transcript.size(); ++i) os << (i ? " " : "") << r.transcript[i];
    os << '\t';
    for (std::size_t i = 0; i < r.codes.size(); ++i) os << (i ? " " : "") << r.codes[i];
    os << '\n';
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read manifest " + path.string());
  std::vector<ManifestRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 5) throw std::runtime_error(where + ": expected 5 tab-separated columns");
    ManifestRow r;
    r.image = cols[0];
    r.script = cols[1];
    if (cols[2] == "h") {
      r.orientation = Orientation::horizontal;
    } else if (cols[2] == "v") {
      r.orientation = Orientation::vertical;
    } else {
      throw std::runtime_error(where + ": orientation must be h or v");
    }
    std::stringstream ts(cols[3]);
    std::string tok;
    while (ts >> tok) {
      try {
        r.transcript.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw std::runtime_error(where + ": bad glyph id '" + tok + "'");
      }
    }
    std::stringstream cs(cols[4]);
    while (cs >> tok) r.codes.push_back(tok);
    if (r.transcript.empty()) throw std::runtime_error(where + ": empty transcript");
    if (r.codes.size() != r.transcript.size()) throw std::runtime_error(where + ": code and transcript lengths differ");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::filesystem::path manifest_path(const std::filesystem::path& dataset, const std::string& split) {
  return dataset / (split + ".tsv");
}

std::filesystem::path catalog_path(const std::filesystem::path& dataset) { return dataset / "catalog.txt"; }

void generate_dataset(const CorpusConfig& config, const std::filesystem::path& out) {
  const ScriptSet set = make_script_set(config, config.seed);
  const std::vector<LinePlan> plans = plan_corpus(config, set);
  for (const auto& split : corpus_splits()) {
    std::error_code ec;
    std::filesystem::create_directories(out / "images" / split, ec);
    if (ec) throw std::runtime_error("cannot create " + (out / "images" / split).string() + ": " + ec.message());
  }
  set.catalog().save_file(catalog_path(out));

  std::vector<ManifestRow> rows(plans.size());
  std::vector<std::string> errors(plans.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < plans.size(); ++i) {
    try {
      const LinePlan& p = plans[i];
      const LineSample sample = render_plan(set, p, config.noise);
      ManifestRow& r = rows[i];
      r.image = "images/" + p.split + "/" + p.name + ".pgm";
      r.script = set.scripts[static_cast<std::size_t>(p.script)].id;
      r.orientation = p.orientation;
      r.transcript = sample.transcript;
      r.codes = sample.codes;
      write_pgm(out / r.image, to_gray(sample.image));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("generate_dataset: " + e);
  }
  for (const auto& split : corpus_splits()) {
    std::vector<ManifestRow> part;
    for (std::size_t i = 0; i < plans.size(); ++i) {
      if (plans[i].split == split) part.push_back(rows[i]);
    }
    write_manifest(manifest_path(out, split), part);
  }
}

}  // namespace ssid
