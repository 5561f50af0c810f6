#include "ssid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "ssid/image_io.hpp"

namespace ssid {

std::size_t edit_distance(std::span<const int> a, std::span<const int> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

OcrModels load_ocr_models(const std::filesystem::path& dir, const ScriptCatalog& catalog) {
  OcrModels out;
  for (int s = 0; s < catalog.num_scripts(); ++s) {
    const auto path = dir / (catalog.scripts()[static_cast<std::size_t>(s)] + ".ckpt");
    if (!std::filesystem::exists(path)) throw std::runtime_error("missing OCR checkpoint " + path.string());
    auto rec = std::make_shared<OcrRecognizer>(Model::load_file(path));
    if (rec->script() != catalog.scripts()[static_cast<std::size_t>(s)]) {
      throw std::runtime_error(path.string() + " is an OCR model for " + rec->script());
    }
    out[s] = std::move(rec);
  }
  return out;
}

Recognition recognize(const Tensor& image, const ScriptIdentifier& identifier, const OcrModels& ocr,
                      int oracle_script) {
  Recognition r;
  r.script = oracle_script >= 0 ? oracle_script : identifier.identify(image);
  if (r.script == kUndetermined) return r;
  auto it = ocr.find(r.script);
  if (it == ocr.end()) throw std::runtime_error("no OCR model for script index " + std::to_string(r.script));
  r.transcript = it->second->recognize(image);
  return r;
}

const std::vector<int>& OcrCache::get(std::size_t line, int script, const std::function<std::vector<int>()>& compute) {
  const auto key = std::make_pair(line, script);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) return *it->second;
  }
  auto value = std::make_unique<std::vector<int>>(compute());
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, inserted] = entries_.emplace(key, std::move(value));
  return *it->second;
}

std::vector<int> identify_all(const Dataset& data, const ScriptIdentifier& identifier) {
  std::vector<int> out(data.lines.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < data.lines.size(); ++i) out[i] = identifier.identify(data.lines[i].image);
  return out;
}

EvalReport evaluate(const Dataset& data, const ScriptIdentifier& identifier, const OcrModels& ocr, bool oracle,
                    OcrCache* cache) {
  const ScriptCatalog& catalog = data.catalog;
  if (identifier.catalog().scripts() != catalog.scripts()) {
    throw std::invalid_argument("evaluate: script-id model and dataset use different script sets");
  }
  const int ns = catalog.num_scripts();
  for (int s = 0; s < ns; ++s) {
    if (!ocr.count(s)) throw std::invalid_argument("evaluate: no OCR model for " + catalog.scripts()[static_cast<std::size_t>(s)]);
  }
  OcrCache local;
  OcrCache& memo = cache ? *cache : local;
  const std::vector<int> predicted = identify_all(data, identifier);

  const std::size_t n = data.lines.size();
  std::vector<std::size_t> pipe_ed(n), oracle_ed(n);
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      const DatasetLine& l = data.lines[i];
      auto decode = [&](int s) -> const std::vector<int>& {
        return memo.get(i, s, [&] { return ocr.at(s)->recognize(l.image); });
      };
      oracle_ed[i] = edit_distance(decode(l.script), l.transcript);
      const int chosen = oracle ? l.script : predicted[i];
      if (chosen == kUndetermined) {
        pipe_ed[i] = l.transcript.size();
      } else if (chosen == l.script) {
        pipe_ed[i] = oracle_ed[i];
      } else {
        pipe_ed[i] = edit_distance(decode(chosen), l.transcript);
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("evaluate: " + e);
  }

  EvalReport r;
  r.scripts = catalog.scripts();
  r.confusion.assign(static_cast<std::size_t>(ns), std::vector<std::int64_t>(static_cast<std::size_t>(ns) + 1, 0));
  r.ref_chars.assign(static_cast<std::size_t>(ns), 0);
  r.pipeline_edits.assign(static_cast<std::size_t>(ns), 0);
  r.oracle_edits.assign(static_cast<std::size_t>(ns), 0);
  std::int64_t trace = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const DatasetLine& l = data.lines[i];
    const auto s = static_cast<std::size_t>(l.script);
    const int p = predicted[i];
    ++r.confusion[s][p == kUndetermined ? static_cast<std::size_t>(ns) : static_cast<std::size_t>(p)];
    trace += p == l.script;
    r.ref_chars[s] += static_cast<std::int64_t>(l.transcript.size());
    r.pipeline_edits[s] += static_cast<std::int64_t>(pipe_ed[i]);
    r.oracle_edits[s] += static_cast<std::int64_t>(oracle_ed[i]);
  }
  r.lines = static_cast<std::int64_t>(n);
  r.errors = r.lines - trace;
  r.error_rate = n ? 1.0 - static_cast<double>(trace) / static_cast<double>(n) : 0.0;
  std::int64_t ref = 0, pe = 0, oe = 0;
  for (int s = 0; s < ns; ++s) {
    ref += r.ref_chars[static_cast<std::size_t>(s)];
    pe += r.pipeline_edits[static_cast<std::size_t>(s)];
    oe += r.oracle_edits[static_cast<std::size_t>(s)];
  }
  r.pipeline_cer = ref ? static_cast<double>(pe) / static_cast<double>(ref) : 0.0;
  r.oracle_cer = ref ? static_cast<double>(oe) / static_cast<double>(ref) : 0.0;
  r.delta_cer = r.pipeline_cer - r.oracle_cer;
  return r;
}

double EvalReport::script_cer(int s) const {
  const auto i = static_cast<std::size_t>(s);
  return ref_chars[i] ? static_cast<double>(pipeline_edits[i]) / static_cast<double>(ref_chars[i]) : 0.0;
}

double EvalReport::script_oracle_cer(int s) const {
  const auto i = static_cast<std::size_t>(s);
  return ref_chars[i] ? static_cast<double>(oracle_edits[i]) / static_cast<double>(ref_chars[i]) : 0.0;
}

void EvalReport::write_tsv(std::ostream& os) const {
  os << std::setprecision(17);
  os << "#error-rate\n";
  os << "lines\t" << lines << "\nerrors\t" << errors << "\nerror_rate\t" << error_rate << '\n';
  os << "#confusion\n";
  os << "true\\predicted";
  for (const auto& s : scripts) os << '\t' << s;
  os << "\tUNDETERMINED\n";
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    os << scripts[i];
    for (std::int64_t c : confusion[i]) os << '\t' << c;
    os << '\n';
  }
  os << "#cer\n";
  os << "script\tref_chars\tpipeline_cer\toracle_cer\tdelta_cer\n";
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    const double p = script_cer(static_cast<int>(i)), o = script_oracle_cer(static_cast<int>(i));
    os << scripts[i] << '\t' << ref_chars[i] << '\t' << p << '\t' << o << '\t' << p - o << '\n';
  }
  std::int64_t ref = 0;
  for (std::int64_t c : ref_chars) ref += c;
  os << "ALL\t" << ref << '\t' << pipeline_cer << '\t' << oracle_cer << '\t' << delta_cer << '\n';
}

ActivationFiles dump_activations(const ScriptIdentifier& identifier, const Tensor& image,
                                 const std::filesystem::path& out_dir, const std::string& stem) {
  const auto act = identifier.activations(image);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  const Tensor& l = act.logits;
  const int frames = l.dim(0), classes = l.dim(1);
  const auto [lo, hi] = std::minmax_element(l.values().begin(), l.values().end());
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  GrayImage map;
  map.height = classes;
  map.width = frames;
  map.pixels.resize(static_cast<std::size_t>(frames) * classes);
  for (int s = 0; s < classes; ++s) {
    for (int i = 0; i < frames; ++i) {
      const double v = range > 0 ? (l.at(i, s) - *lo) / range : 0.0;
      map.pixels[static_cast<std::size_t>(s) * frames + i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
    }
  }
  ActivationFiles files;
  files.logits = out_dir / (stem + "_logits.pgm");
  write_pgm(files.logits, map);

  if (act.gates) {
    GrayImage strip;
    strip.height = 1;
    strip.width = frames;
    for (int i = 0; i < frames; ++i) {
      const double g = (*act.gates)[static_cast<std::size_t>(i)];
      strip.pixels.push_back(static_cast<std::uint8_t>(std::min(255.0, std::floor(256.0 * g))));
    }
    files.gates = out_dir / (stem + "_gates.pgm");
    write_pgm(files.gates, strip);
  }
  return files;
}

}  // namespace ssid
