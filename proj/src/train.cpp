#include "ssid/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ssid/baseline.hpp"
#include "ssid/image_io.hpp"

namespace ssid {

Dataset load_dataset(const std::filesystem::path& root, const std::string& split) {
  Dataset d;
  d.catalog = ScriptCatalog::load_file(catalog_path(root));
  const auto rows = read_manifest(manifest_path(root, split));
  d.lines.resize(rows.size());
  std::vector<std::string> errors(rows.size());
#pragma omp parallel for schedule(dynamic, 32)
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      DatasetLine& l = d.lines[i];
      l.image_path = rows[i].image;
      l.image = from_gray(read_pgm(root / rows[i].image));
      if (l.image.dim(0) != kLineHeight) throw std::runtime_error(rows[i].image + ": line images must be 40 px high");
      l.script = d.catalog.script_index(rows[i].script);
      l.orientation = rows[i].orientation;
      l.transcript = rows[i].transcript;
      l.codes = rows[i].codes;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("load_dataset: " + e);
  }
  return d;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("train config: " + what);
  };
  require(epochs >= 0, "epochs must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(max_steps >= -1, "max_steps must be >= -1");
  require(learning_rate > 0, "learning_rate must be > 0");
  require(final_lr_fraction > 0 && final_lr_fraction <= 1, "final_lr_fraction must be in (0, 1]");
  require(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1 && adam.epsilon > 0, "bad Adam constants");
  require(head.kernel_width >= 1 && head.channels >= 1 && head.lstm_units >= 1 && head.fc_units >= 1 && head.gate_eps > 0,
          "head sizes must be positive");
  require(ocr.lm_order >= 1 && ocr.lm_k > 0, "lm_order >= 1 and lm_k > 0 required");
  require(ocr.prior_decay >= 0 && ocr.prior_decay <= 1 && ocr.prior_floor >= 0 && ocr.prior_floor < 1, "bad prior constants");
  require(ocr.beam >= 0, "beam must be >= 0 (0 = unbounded)");
  require(std::isfinite(ocr.weights.optical) && std::isfinite(ocr.weights.prior) && std::isfinite(ocr.weights.lm),
          "decode weights must be finite");
  encoder.validate();
}

TrainConfig TrainConfig::from_ini(const IniConfig& ini) {
  TrainConfig c;
  c.epochs = ini.get_int("train", "epochs", c.epochs);
  c.batch_size = ini.get_int("train", "batch_size", c.batch_size);
  c.max_steps = ini.get_int("train", "max_steps", c.max_steps);
  c.learning_rate = ini.get_double("train", "learning_rate", c.learning_rate);
  c.final_lr_fraction = ini.get_double("train", "final_lr_fraction", c.final_lr_fraction);
  c.seed = ini.get_u64("train", "seed", c.seed);
  c.log_every = ini.get_int("train", "log_every", c.log_every);
  c.adam.beta1 = ini.get_double("train", "beta1", c.adam.beta1);
  c.adam.beta2 = ini.get_double("train", "beta2", c.adam.beta2);
  c.adam.epsilon = ini.get_double("train", "epsilon", c.adam.epsilon);
  if (ini.has("encoder", "stages")) c.encoder.stages = EncoderConfig::parse_stages(ini.get_string("encoder", "stages", ""));
  c.encoder.feature_dim = ini.get_int("encoder", "feature_dim", c.encoder.feature_dim);
  c.encoder.feature_activation =
      parse_activation(ini.get_string("encoder", "feature_activation", to_string(c.encoder.feature_activation)));
  c.head.kernel_width = ini.get_int("head", "kernel_width", c.head.kernel_width);
  c.head.channels = ini.get_int("head", "channels", c.head.channels);
  c.head.lstm_units = ini.get_int("head", "lstm_units", c.head.lstm_units);
  c.head.fc_units = ini.get_int("head", "fc_units", c.head.fc_units);
  c.head.gate_eps = ini.get_double("head", "gate_eps", c.head.gate_eps);
  c.ocr.lm_order = ini.get_int("ocr", "lm_order", c.ocr.lm_order);
  c.ocr.lm_k = ini.get_double("ocr", "lm_k", c.ocr.lm_k);
  c.ocr.prior_decay = ini.get_double("ocr", "prior_decay", c.ocr.prior_decay);
  c.ocr.prior_floor = ini.get_double("ocr", "prior_floor", c.ocr.prior_floor);
  c.ocr.weights.optical = ini.get_double("ocr", "lambda_optical", c.ocr.weights.optical);
  c.ocr.weights.prior = ini.get_double("ocr", "lambda_prior", c.ocr.weights.prior);
  c.ocr.weights.lm = ini.get_double("ocr", "lambda_lm", c.ocr.weights.lm);
  c.ocr.beam = ini.get_int("ocr", "beam", c.ocr.beam);
  ini.check_all_used();
  c.validate();
  return c;
}

namespace {

std::vector<std::size_t> lines_for(const ModelSpec& spec, const Dataset& data) {
  std::vector<std::size_t> idx;
  const int script = spec.kind == ModelKind::ocr ? data.catalog.script_index(spec.script) : -1;
  for (std::size_t i = 0; i < data.lines.size(); ++i) {
    if (script < 0 || data.lines[i].script == script) idx.push_back(i);
  }
  return idx;
}

}  // namespace

ModelDescriptor make_descriptor(const TrainConfig& config, const ModelSpec& spec, const Dataset& data) {
  ModelDescriptor d;
  d.spec = spec;
  d.encoder = config.encoder;
  d.head = config.head;
  d.catalog = data.catalog;
  if (spec.kind != ModelKind::ocr) return d;

  const auto idx = lines_for(spec, data);
  if (idx.empty()) throw std::invalid_argument("no training lines for script " + spec.script);
  std::set<int> glyphs;
  for (std::size_t i : idx) glyphs.insert(data.lines[i].transcript.begin(), data.lines[i].transcript.end());
  std::vector<std::string> symbols;
  for (int g : glyphs) symbols.push_back(std::to_string(g));
  d.alphabet = SymbolAlphabet(symbols);
  std::vector<std::vector<int>> corpus;
  for (std::size_t i : idx) {
    std::vector<int> seq;
    for (int g : data.lines[i].transcript) seq.push_back(d.alphabet.index(std::to_string(g)));
    corpus.push_back(std::move(seq));
  }
  d.ocr = config.ocr;
  d.lm = NGramLM::fit(corpus, config.ocr.lm_order, config.ocr.lm_k, d.alphabet.size());
  d.prior = GraphemePrior::uniform(d.alphabet.size(), config.ocr.prior_decay, config.ocr.prior_floor);
  return d;
}

Model train_model(const TrainConfig& config, const ModelSpec& spec, const Dataset& data, std::ostream* log,
                  TrainStats* stats) {
  config.validate();
  Model model = Model::initialize(make_descriptor(config, spec, data), config.seed);
  TrainStats local;
  TrainStats& st = stats ? *stats : local;
  st = TrainStats{};

  const auto idx = lines_for(spec, data);
  if (idx.empty()) throw std::invalid_argument("train: empty training set");
  const ModelDescriptor& desc = model.desc;
  const ScriptCodeAlphabet codes = spec.kind == ModelKind::base ? ScriptCodeAlphabet(desc.catalog) : ScriptCodeAlphabet();

  // Targets per line: class index, or a CTC label.
  std::vector<std::vector<int>> labels(data.lines.size());
  for (std::size_t i : idx) {
    const DatasetLine& l = data.lines[i];
    if (spec.kind == ModelKind::base) {
      for (const auto& c : l.codes) labels[i].push_back(codes.symbols().index(c));
    } else if (spec.kind == ModelKind::ocr) {
      for (int g : l.transcript) labels[i].push_back(desc.alphabet.index(std::to_string(g)));
    }
  }

  const std::int64_t batches_per_epoch = (static_cast<std::int64_t>(idx.size()) + config.batch_size - 1) / config.batch_size;
  std::int64_t total_steps = batches_per_epoch * config.epochs;
  if (config.max_steps >= 0) total_steps = std::min<std::int64_t>(total_steps, config.max_steps);
  if (total_steps == 0) return model;

  Adam<float> adam(model.params, config.adam);
  std::vector<GradBuffer<float>> grads(static_cast<std::size_t>(config.batch_size), GradBuffer<float>(model.params));
  GradBuffer<float> total(model.params);
  std::mt19937_64 rng(config.seed ^ 0x7472616964ULL);

  for (int epoch = 0; epoch < config.epochs && st.steps < total_steps; ++epoch) {
    // Shuffle, then a stable sort by width: equal widths stay in random order.
    std::vector<std::size_t> order = idx;
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return data.lines[a].image.dim(1) < data.lines[b].image.dim(1);
    });
    std::vector<std::int64_t> batch_order(static_cast<std::size_t>(batches_per_epoch));
    std::iota(batch_order.begin(), batch_order.end(), 0);
    std::shuffle(batch_order.begin(), batch_order.end(), rng);

    double epoch_loss = 0;
    std::int64_t epoch_samples = 0;
    for (std::int64_t bi : batch_order) {
      if (st.steps >= total_steps) break;
      const std::size_t begin = static_cast<std::size_t>(bi) * config.batch_size;
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const int n = static_cast<int>(end - begin);
      int batch_width = 0;
      for (std::size_t k = begin; k < end; ++k) batch_width = std::max(batch_width, data.lines[order[k]].image.dim(1));

      std::vector<double> losses(static_cast<std::size_t>(n), 0.0);
      std::vector<char> used(static_cast<std::size_t>(n), 0);
      std::vector<std::vector<double>> frame_means(static_cast<std::size_t>(n));
      std::vector<std::string> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
      for (int b = 0; b < n; ++b) {
        try {
          const std::size_t li = order[begin + static_cast<std::size_t>(b)];
          const DatasetLine& line = data.lines[li];
          const int width = line.image.dim(1);
          // Pad to the batch width with background; encode() ignores the padding.
          Tensor padded(Shape{kLineHeight, batch_width, 1});
          for (int y = 0; y < kLineHeight; ++y) {
            std::copy_n(line.image.data() + static_cast<std::size_t>(y) * width, width,
                        padded.data() + static_cast<std::size_t>(y) * batch_width);
          }
          GradBuffer<float>& gb = grads[static_cast<std::size_t>(b)];
          gb.zero();
          if (!spec.is_summarizer() && !ctc_feasible(output_length(width, desc.encoder), labels[li])) continue;
          Graph<float> g(&model.params, &gb);
          const Var<float> features = encode(desc.encoder, g, padded, width);
          Var<float> loss;
          if (spec.is_summarizer()) {
            loss = cross_entropy(summarize(features, spec.summarizer(), desc.head), line.script);
          } else {
            const Var<float> logits = frame_head(features, "ctc", desc.head);
            if (spec.kind == ModelKind::ocr) frame_means[static_cast<std::size_t>(b)] = GraphemePrior::frame_mean(logits.value());
            loss = ctc_loss(logits, labels[li]);
          }
          const float lv = loss.value()[0];
          if (!std::isfinite(lv)) throw NonFiniteError("non-finite training loss on " + line.image_path);
          g.backward(loss);
          losses[static_cast<std::size_t>(b)] = lv;
          used[static_cast<std::size_t>(b)] = 1;
        } catch (const std::exception& e) {
          errors[static_cast<std::size_t>(b)] = e.what();
        }
      }
      for (const auto& e : errors) {
        if (!e.empty()) throw NonFiniteError("training aborted at step " + std::to_string(st.steps) + ": " + e);
      }

      total.zero();
      int count = 0;
      std::vector<double> prior_mean;
      for (int b = 0; b < n; ++b) {
        if (!used[static_cast<std::size_t>(b)]) {
          ++st.skipped_infeasible;
          continue;
        }
        total.add(grads[static_cast<std::size_t>(b)]);
        epoch_loss += losses[static_cast<std::size_t>(b)];
        ++count;
        const auto& fm = frame_means[static_cast<std::size_t>(b)];
        if (!fm.empty()) {
          if (prior_mean.empty()) prior_mean.assign(fm.size(), 0.0);
          for (std::size_t k = 0; k < fm.size(); ++k) prior_mean[k] += fm[k];
        }
      }
      ++st.steps;
      if (count == 0) continue;
      total.scale(1.0f / static_cast<float>(count));
      const double progress = static_cast<double>(st.steps - 1) / static_cast<double>(total_steps);
      adam.set_learning_rate(config.learning_rate * (1.0 - (1.0 - config.final_lr_fraction) * progress));
      adam.step(model.params, total);
      if (!prior_mean.empty()) {
        for (double& v : prior_mean) v /= count;
        model.desc.prior.update(prior_mean);
      }
      epoch_samples += count;
      st.samples += count;
      if (log && config.log_every > 0 && st.steps % config.log_every == 0) {
        double batch_loss = 0;
        for (int b = 0; b < n; ++b) batch_loss += losses[static_cast<std::size_t>(b)];
        *log << spec.to_string() << " step " << st.steps << "/" << total_steps << " loss "
             << batch_loss / count << '\n';
      }
    }
    st.epoch_loss.push_back(epoch_samples ? epoch_loss / static_cast<double>(epoch_samples) : 0.0);
    if (log) {
      *log << spec.to_string() << " epoch " << epoch + 1 << " mean loss " << st.epoch_loss.back() << '\n';
    }
  }
  if (log && st.skipped_infeasible > 0) {
    *log << spec.to_string() << " skipped " << st.skipped_infeasible << " samples with infeasible CTC labels\n";
  }
  return model;
}

}  // namespace ssid
