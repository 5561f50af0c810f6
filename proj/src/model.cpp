#include "ssid/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "ssid/baseline.hpp"

namespace ssid {

namespace {

using json = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <class U>
void put(std::ostream& os, U v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <class U>
U get(std::istream& is, const char* what) {
  U v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(U));
  if (!is) throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
  return v;
}

std::string kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::base: return "base";
    case ModelKind::max: return "max";
    case ModelKind::mean: return "mean";
    case ModelKind::gate: return "gate";
    case ModelKind::lstm: return "lstm";
    case ModelKind::ocr: return "ocr";
  }
  return "?";
}

int output_symbols(const ModelDescriptor& d) {
  switch (d.spec.kind) {
    case ModelKind::base: return ScriptCodeAlphabet(d.catalog).size();
    case ModelKind::ocr: return d.alphabet.size();
    default: return d.catalog.num_scripts();
  }
}

}  // namespace

ModelSpec ModelSpec::parse(const std::string& text) {
  ModelSpec s;
  if (text.rfind("ocr:", 0) == 0) {
    s.kind = ModelKind::ocr;
    s.script = text.substr(4);
    if (s.script.empty()) throw std::invalid_argument("model kind 'ocr:' needs a script id");
    return s;
  }
  if (text == "base") {
    s.kind = ModelKind::base;
  } else if (text == "max") {
    s.kind = ModelKind::max;
  } else if (text == "mean") {
    s.kind = ModelKind::mean;
  } else if (text == "gate") {
    s.kind = ModelKind::gate;
  } else if (text == "lstm") {
    s.kind = ModelKind::lstm;
  } else {
    throw std::invalid_argument("unknown model kind '" + text + "' (base|max|mean|gate|lstm|ocr:<script>)");
  }
  return s;
}

std::string ModelSpec::to_string() const { return kind == ModelKind::ocr ? "ocr:" + script : kind_name(kind); }

SummarizerKind ModelSpec::summarizer() const {
  if (!is_summarizer()) throw std::logic_error("model kind " + to_string() + " has no summarizer");
  return parse_summarizer(kind_name(kind));
}

bool OcrSettings::operator==(const OcrSettings& o) const {
  return lm_order == o.lm_order && lm_k == o.lm_k && prior_decay == o.prior_decay && prior_floor == o.prior_floor &&
         weights.optical == o.weights.optical && weights.prior == o.weights.prior && weights.lm == o.weights.lm &&
         beam == o.beam;
}

std::string ModelDescriptor::to_json() const {
  json j;
  j["kind"] = spec.to_string();
  j["encoder"] = {{"input_height", encoder.input_height},
                  {"stages", EncoderConfig::format_stages(encoder.stages)},
                  {"feature_dim", encoder.feature_dim},
                  {"feature_activation", ssid::to_string(encoder.feature_activation)}};
  j["head"] = {{"kernel_width", head.kernel_width},
               {"channels", head.channels},
               {"lstm_units", head.lstm_units},
               {"fc_units", head.fc_units},
               {"gate_eps", head.gate_eps}};
  json codes = json::array();
  for (const auto& c : catalog.codes()) {
    codes.push_back({{"id", c.id}, {"kind", ssid::to_string(c.kind)}, {"members", c.members}});
  }
  j["catalog"] = codes;
  if (spec.kind == ModelKind::ocr) {
    j["alphabet"] = alphabet.symbols();
    j["decode"] = {{"lambda_optical", ocr.weights.optical},
                   {"lambda_prior", ocr.weights.prior},
                   {"lambda_lm", ocr.weights.lm},
                   {"beam", ocr.beam}};
    j["prior"] = {{"decay", prior.decay}, {"floor", prior.floor}, {"probs", prior.probs}};
    std::ostringstream lm_text;
    lm.save(lm_text, alphabet);
    j["lm"] = lm_text.str();
  }
  return j.dump();
}

ModelDescriptor ModelDescriptor::from_json(const std::string& text) {
  ModelDescriptor d;
  try {
    const json j = json::parse(text);
    d.spec = ModelSpec::parse(j.at("kind").get<std::string>());
    const json& e = j.at("encoder");
    d.encoder.input_height = e.at("input_height").get<int>();
    d.encoder.stages = EncoderConfig::parse_stages(e.at("stages").get<std::string>());
    d.encoder.feature_dim = e.at("feature_dim").get<int>();
    d.encoder.feature_activation = parse_activation(e.at("feature_activation").get<std::string>());
    d.encoder.validate();
    const json& h = j.at("head");
    d.head.kernel_width = h.at("kernel_width").get<int>();
    d.head.channels = h.at("channels").get<int>();
    d.head.lstm_units = h.at("lstm_units").get<int>();
    d.head.fc_units = h.at("fc_units").get<int>();
    d.head.gate_eps = h.at("gate_eps").get<double>();
    std::vector<CatalogCode> codes;
    for (const auto& c : j.at("catalog")) {
      codes.push_back({c.at("id").get<std::string>(), parse_code_kind(c.at("kind").get<std::string>()),
                       c.at("members").get<std::vector<std::string>>()});
    }
    d.catalog = ScriptCatalog(std::move(codes));
    if (d.spec.kind == ModelKind::ocr) {
      d.catalog.script_index(d.spec.script);
      d.alphabet = SymbolAlphabet(j.at("alphabet").get<std::vector<std::string>>());
      const json& dec = j.at("decode");
      d.ocr.weights.optical = dec.at("lambda_optical").get<double>();
      d.ocr.weights.prior = dec.at("lambda_prior").get<double>();
      d.ocr.weights.lm = dec.at("lambda_lm").get<double>();
      d.ocr.beam = dec.at("beam").get<int>();
      const json& p = j.at("prior");
      d.prior.decay = p.at("decay").get<double>();
      d.prior.floor = p.at("floor").get<double>();
      d.prior.probs = p.at("probs").get<std::vector<double>>();
      if (static_cast<int>(d.prior.probs.size()) != d.alphabet.size()) {
        throw CheckpointError("prior length does not match the alphabet");
      }
      std::istringstream lm_text(j.at("lm").get<std::string>());
      d.lm = NGramLM::load(lm_text, d.alphabet);
      d.ocr.lm_order = d.lm.order();
      d.ocr.lm_k = d.lm.k();
      d.ocr.prior_decay = d.prior.decay;
      d.ocr.prior_floor = d.prior.floor;
    }
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& ex) {
    throw CheckpointError(std::string("bad model descriptor: ") + ex.what());
  }
  return d;
}

Model Model::initialize(ModelDescriptor desc, std::uint64_t seed) {
  Model m;
  m.desc = std::move(desc);
  m.desc.encoder.validate();
  std::mt19937_64 rng(seed);
  init_encoder_params(m.desc.encoder, m.params, rng);
  const int d = m.desc.encoder.feature_dim;
  if (m.desc.spec.is_summarizer()) {
    init_summarizer(m.params, rng, m.desc.spec.summarizer(), d, m.desc.catalog.num_scripts(), m.desc.head);
  } else {
    init_frame_head(m.params, rng, "ctc", d, output_symbols(m.desc), m.desc.head);
  }
  if (m.desc.spec.kind == ModelKind::ocr && m.desc.prior.probs.empty()) {
    m.desc.prior = GraphemePrior::uniform(m.desc.alphabet.size(), m.desc.ocr.prior_decay, m.desc.ocr.prior_floor);
  }
  return m;
}

void Model::save(std::ostream& os) const {
  const std::string descriptor = desc.to_json();
  os.write("SSID1", 5);
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(descriptor.size()));
  os.write(descriptor.data(), static_cast<std::streamsize>(descriptor.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (int i = 0; i < params.size(); ++i) {
    const auto& e = params.entry(i);
    put<std::uint16_t>(os, static_cast<std::uint16_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(e.value.rank()));
    for (int dim : e.value.shape()) put<std::uint32_t>(os, static_cast<std::uint32_t>(dim));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(DType::f32));
    os.write(reinterpret_cast<const char*>(e.value.data()), static_cast<std::streamsize>(e.value.size() * sizeof(float)));
  }
}

void Model::save_file(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot write checkpoint " + path.string());
  save(os);
  if (!os) throw CheckpointError("write failed: " + path.string());
}

Model Model::load(std::istream& is) {
  char magic[5];
  is.read(magic, 5);
  if (!is || std::memcmp(magic, "SSID1", 5) != 0) throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto desc_len = get<std::uint32_t>(is, "descriptor length");
  std::string descriptor(desc_len, '\0');
  is.read(descriptor.data(), desc_len);
  if (!is) throw CheckpointError("checkpoint truncated in descriptor");

  // The expected layout comes from the descriptor; every stored tensor must match it.
  Model m = initialize(ModelDescriptor::from_json(descriptor), 0);
  const auto count = get<std::uint32_t>(is, "tensor count");
  if (static_cast<int>(count) != m.params.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(count) + " tensors, descriptor expects " +
                          std::to_string(m.params.size()));
  }
  for (int i = 0; i < m.params.size(); ++i) {
    const auto name_len = get<std::uint16_t>(is, "tensor name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw CheckpointError("checkpoint truncated in tensor name");
    if (name != m.params.entry(i).name) {
      throw CheckpointError("tensor " + std::to_string(i) + " is '" + name + "', expected '" + m.params.entry(i).name + "'");
    }
    const auto rank = get<std::uint8_t>(is, "rank");
    Shape shape;
    for (int r = 0; r < rank; ++r) shape.push_back(static_cast<int>(get<std::uint32_t>(is, "dims")));
    TensorT<float>& value = m.params.value(i);
    if (shape != value.shape()) {
      throw CheckpointError("tensor '" + name + "' has shape " + shape_string(shape) + ", descriptor expects " +
                            shape_string(value.shape()));
    }
    if (get<std::uint8_t>(is, "dtype") != static_cast<std::uint8_t>(DType::f32)) {
      throw CheckpointError("tensor '" + name + "' has unsupported dtype");
    }
    is.read(reinterpret_cast<char*>(value.data()), static_cast<std::streamsize>(value.size() * sizeof(float)));
    if (!is) throw CheckpointError("checkpoint truncated in tensor '" + name + "'");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw CheckpointError("trailing bytes after last tensor");
  return m;
}

Model Model::load_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot read checkpoint " + path.string());
  try {
    return load(is);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace ssid
