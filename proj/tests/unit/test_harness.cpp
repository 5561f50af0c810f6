#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "ssid/eval.hpp"
#include "ssid/image_io.hpp"
#include "ssid/train.hpp"

using namespace ssid;
namespace fs = std::filesystem;

namespace {

// A small dataset shared by the cases below, generated once.
const fs::path& tiny_dataset() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "ssid_unit_harness";
    fs::remove_all(d);
    CorpusConfig c;
    c.train_lines = 12;
    c.eval_lines = 4;
    generate_dataset(c, d);
    return d;
  }();
  return dir;
}

const Dataset& train_split() {
  static const Dataset d = load_dataset(tiny_dataset(), "train");
  return d;
}

const Dataset& eval_split() {
  static const Dataset d = load_dataset(tiny_dataset(), "eval");
  return d;
}

TrainConfig tiny_train(int steps) {
  TrainConfig c;
  c.epochs = 1;
  c.batch_size = 4;
  c.max_steps = steps;
  c.encoder.stages = EncoderConfig::parse_stages("conv:5x5/2x2:8:relu6 maxpool:2x2/2x2 inception:4,8 maxpool:2x1/2x1");
  c.encoder.feature_dim = 16;
  c.head.channels = 8;
  c.head.lstm_units = 8;
  c.head.fc_units = 8;
  return c;
}

std::string bytes(const Model& m) {
  std::ostringstream os;
  m.save(os);
  return os.str();
}

const OcrModels& tiny_ocr() {
  static const OcrModels models = [] {
    OcrModels out;
    for (int s = 0; s < train_split().catalog.num_scripts(); ++s) {
      const ModelSpec spec = ModelSpec::parse("ocr:" + train_split().catalog.scripts()[static_cast<std::size_t>(s)]);
      out[s] = std::make_shared<OcrRecognizer>(train_model(tiny_train(3), spec, train_split()));
    }
    return out;
  }();
  return models;
}

}  // namespace

TEST_CASE("model spec parsing") {
  CHECK(ModelSpec::parse("gate").kind == ModelKind::gate);
  CHECK(ModelSpec::parse("ocr:S2").script == "S2");
  CHECK(ModelSpec::parse("ocr:S2").to_string() == "ocr:S2");
  CHECK_THROWS(ModelSpec::parse("ocr:"));
  CHECK_THROWS(ModelSpec::parse("transformer"));
}

TEST_CASE("checkpoint round trip is byte identical for every model kind") {
  for (const char* kind : {"base", "max", "mean", "gate", "lstm", "ocr:S1"}) {
    const Model m = Model::initialize(make_descriptor(tiny_train(0), ModelSpec::parse(kind), train_split()), 3);
    const std::string a = bytes(m);
    CHECK(a.rfind("SSID1", 0) == 0);
    std::istringstream is(a);
    CHECK(bytes(Model::load(is)) == a);
  }
}

TEST_CASE("checkpoint loading rejects corruption") {
  const Model m = Model::initialize(make_descriptor(tiny_train(0), ModelSpec::parse("gate"), train_split()), 3);
  const std::string good = bytes(m);
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  std::istringstream a(bad_magic);
  CHECK_THROWS_AS(Model::load(a), CheckpointError);
  std::istringstream b(good.substr(0, good.size() - 3));
  CHECK_THROWS_AS(Model::load(b), CheckpointError);
  std::istringstream c(good + "x");
  CHECK_THROWS_AS(Model::load(c), CheckpointError);
}

TEST_CASE("zero steps returns the initialization and training is deterministic") {
  const ModelSpec spec = ModelSpec::parse("mean");
  TrainConfig cfg = tiny_train(0);
  const Model init = Model::initialize(make_descriptor(cfg, spec, train_split()), cfg.seed);
  CHECK(bytes(train_model(cfg, spec, train_split())) == bytes(init));
  cfg.max_steps = 3;
  TrainStats st;
  const std::string a = bytes(train_model(cfg, spec, train_split(), nullptr, &st));
  CHECK(st.steps == 3);
  CHECK(a == bytes(train_model(cfg, spec, train_split())));
  CHECK(a != bytes(init));
}

TEST_CASE("train config from ini rejects unknown keys") {
  std::istringstream ok("[train]\nepochs = 2\n[encoder]\nfeature_dim = 32\n");
  const TrainConfig c = TrainConfig::from_ini(IniConfig::parse(ok));
  CHECK(c.epochs == 2);
  CHECK(c.encoder.feature_dim == 32);
  std::istringstream bad("[train]\nepochs = 2\nepoch = 3\n");
  CHECK_THROWS_AS(TrainConfig::from_ini(IniConfig::parse(bad)), ConfigError);
  std::istringstream dup("[train]\nepochs = 2\nepochs = 3\n");
  CHECK_THROWS_AS(IniConfig::parse(dup), ConfigError);
}

TEST_CASE("edit distance and CER") {
  CHECK(edit_distance(std::vector<int>{1, 2, 3}, std::vector<int>{1, 2, 4}) == 1);
  CHECK(edit_distance(std::vector<int>{}, std::vector<int>{1, 2}) == 2);
  CHECK(edit_distance(std::vector<int>{1, 2, 3}, std::vector<int>{2, 3}) == 1);
}

TEST_CASE("evaluation report invariants") {
  const ScriptIdentifier id(train_model(tiny_train(2), ModelSpec::parse("gate"), train_split()));
  const Dataset& data = eval_split();
  OcrCache cache;
  const EvalReport r = evaluate(data, id, tiny_ocr(), false, &cache);
  CHECK(r.lines == static_cast<std::int64_t>(data.lines.size()));
  std::int64_t trace = 0;
  for (std::size_t s = 0; s < r.confusion.size(); ++s) {
    std::int64_t row = 0;
    for (auto c : r.confusion[s]) row += c;
    std::int64_t expect = 0;
    for (const auto& l : data.lines) expect += l.script == static_cast<int>(s);
    CHECK(row == expect);
    trace += r.confusion[s][s];
  }
  CHECK(std::abs(r.error_rate - (1.0 - static_cast<double>(trace) / r.lines)) <= 1e-12);
  CHECK(r.delta_cer == r.pipeline_cer - r.oracle_cer);

  const EvalReport o = evaluate(data, id, tiny_ocr(), true, &cache);
  CHECK(o.delta_cer == 0.0);
  CHECK(o.pipeline_cer == r.oracle_cer);

  std::ostringstream tsv;
  r.write_tsv(tsv);
  for (const char* section : {"#error-rate", "#confusion", "#cer", "UNDETERMINED", "ALL\t"})
    CHECK(tsv.str().find(section) != std::string::npos);
}

TEST_CASE("oracle recognition equals the labeled script's OCR") {
  const ScriptIdentifier id(train_model(tiny_train(1), ModelSpec::parse("max"), train_split()));
  for (const auto& l : eval_split().lines) {
    const Recognition r = recognize(l.image, id, tiny_ocr(), l.script);
    CHECK(r.script == l.script);
    CHECK(r.transcript == tiny_ocr().at(l.script)->recognize(l.image));
  }
}

TEST_CASE("activation dump dimensions") {
  const ScriptIdentifier gate(train_model(tiny_train(1), ModelSpec::parse("gate"), train_split()));
  const ScriptIdentifier mean(train_model(tiny_train(0), ModelSpec::parse("mean"), train_split()));
  const Tensor& image = eval_split().lines[0].image;
  const int frames = output_length(image.dim(1), gate.model().desc.encoder);
  const fs::path out = fs::temp_directory_path() / "ssid_unit_dump";
  fs::remove_all(out);
  const ActivationFiles f = dump_activations(gate, image, out, "g");
  const GrayImage logits = read_pgm(f.logits), strip = read_pgm(f.gates);
  CHECK(logits.height == 4);
  CHECK(logits.width == frames);
  CHECK(strip.height == 1);
  CHECK(strip.width == frames);
  const auto act = gate.activations(image);
  for (int i = 0; i < frames; ++i) {
    const double g = (*act.gates)[static_cast<std::size_t>(i)];
    CHECK(std::abs(gate_from_pixel(strip.pixels[static_cast<std::size_t>(i)]) - g) <= 0.5 / 256 + 1e-9);
  }
  const ActivationFiles m = dump_activations(mean, image, out, "m");
  CHECK(m.gates.empty());
  CHECK(fs::exists(m.logits));
  fs::remove_all(out);
}

TEST_CASE("batch padding does not change inference") {
  const ScriptIdentifier id(train_model(tiny_train(2), ModelSpec::parse("gate"), train_split()));
  const Tensor& image = eval_split().lines[1].image;
  const int w = image.dim(1);
  Tensor padded(Shape{kLineHeight, w + 37, 1});
  for (int y = 0; y < kLineHeight; ++y)
    for (int x = 0; x < w; ++x) padded.at(y, x, 0) = image.at(y, x, 0);
  const auto a = id.posterior(image), b = id.posterior(padded, w);
  for (std::size_t s = 0; s < a.probabilities.size(); ++s)
    CHECK(std::abs(a.probabilities[s] - b.probabilities[s]) <= 1e-5);
}
