#include "ssid/encoder.hpp"

#include <cmath>
#include <sstream>

namespace ssid {

namespace {

void parse_pair(const std::string& s, int& a, int& b) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw std::invalid_argument("expected AxB, got '" + s + "'");
  a = std::stoi(s.substr(0, x));
  b = std::stoi(s.substr(x + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

template <class T>
void add_conv(ParamStore<T>& params, std::mt19937_64& rng, const std::string& name, int kh, int kw,
              int cin, int cout) {
  params.add(name + "/w", he_uniform<T>(Shape{kh, kw, cin, cout}, kh * kw * cin, rng));
  params.add(name + "/b", TensorT<T>(Shape{cout}));
}

template <class T>
Var<T> conv_relu6(Var<T> x, const std::string& name, int sh = 1, int sw = 1) {
  Graph<T>& g = *x.graph;
  return activate(conv2d(x, g.param(name + "/w"), g.param(name + "/b"), sh, sw), Activation::relu6);
}

}  // namespace

template <class T>
TensorT<T> he_uniform(Shape shape, int fan_in, std::mt19937_64& rng) {
  TensorT<T> t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (T& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

template <class T>
TensorT<T> glorot_uniform(Shape shape, int fan_in, int fan_out, std::mt19937_64& rng) {
  TensorT<T> t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (T& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

EncoderConfig EncoderConfig::default_config() {
  EncoderConfig c;
  c.stages = parse_stages("conv:5x5/2x2:16:relu6 maxpool:2x2/2x2 inception:16,32 inception:16,32 maxpool:2x1/2x1");
  return c;
}

std::vector<EncoderStage> EncoderConfig::parse_stages(const std::string& text) {
  std::vector<EncoderStage> stages;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) {
    const auto parts = split(tok, ':');
    const std::string& kind = parts[0];
    if (kind == "conv" && parts.size() == 4) {
      ConvStage c;
      const auto geo = split(parts[1], '/');
      if (geo.size() != 2) throw std::invalid_argument("bad conv stage '" + tok + "'");
      parse_pair(geo[0], c.kernel_h, c.kernel_w);
      parse_pair(geo[1], c.stride_h, c.stride_w);
      c.channels = std::stoi(parts[2]);
      c.activation = parse_activation(parts[3]);
      stages.emplace_back(c);
    } else if ((kind == "maxpool" || kind == "avgpool") && parts.size() == 2) {
      PoolStage p;
      p.kind = kind == "maxpool" ? PoolKind::max : PoolKind::avg;
      const auto geo = split(parts[1], '/');
      if (geo.size() != 2) throw std::invalid_argument("bad pool stage '" + tok + "'");
      parse_pair(geo[0], p.window_h, p.window_w);
      parse_pair(geo[1], p.stride_h, p.stride_w);
      stages.emplace_back(p);
    } else if (kind == "inception" && parts.size() == 2) {
      const auto ds = split(parts[1], ',');
      if (ds.size() != 2) throw std::invalid_argument("bad inception stage '" + tok + "'");
      stages.emplace_back(InceptionStage{std::stoi(ds[0]), std::stoi(ds[1])});
    } else {
      throw std::invalid_argument("unknown encoder stage '" + tok + "'");
    }
  }
  return stages;
}

std::string EncoderConfig::format_stages(const std::vector<EncoderStage>& stages) {
  std::ostringstream os;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i) os << ' ';
    std::visit(
        [&os](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, ConvStage>) {
            os << "conv:" << s.kernel_h << 'x' << s.kernel_w << '/' << s.stride_h << 'x' << s.stride_w
               << ':' << s.channels << ':' << to_string(s.activation);
          } else if constexpr (std::is_same_v<S, PoolStage>) {
            os << (s.kind == PoolKind::max ? "maxpool:" : "avgpool:") << s.window_h << 'x'
               << s.window_w << '/' << s.stride_h << 'x' << s.stride_w;
          } else {
            os << "inception:" << s.d1 << ',' << s.d2;
          }
        },
        stages[i]);
  }
  return os.str();
}

void EncoderConfig::validate() const {
  if (input_height < 1 || feature_dim < 1) throw std::invalid_argument("encoder: non-positive dimensions");
  for (const auto& st : stages) {
    std::visit(
        [](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, ConvStage>) {
            if (s.kernel_h < 1 || s.kernel_w < 1 || s.stride_h < 1 || s.stride_w < 1 || s.channels < 1) {
              throw std::invalid_argument("encoder: invalid conv stage");
            }
          } else if constexpr (std::is_same_v<S, PoolStage>) {
            if (s.window_h < 1 || s.window_w < 1 || s.stride_h < 1 || s.stride_w < 1) {
              throw std::invalid_argument("encoder: invalid pool stage");
            }
          } else {
            if (s.d1 < 1 || s.d2 < 1) throw std::invalid_argument("encoder: invalid inception stage");
          }
        },
        st);
  }
  if (final_height() < 1) throw std::invalid_argument("encoder: height vanishes");
}

int EncoderConfig::width_stride() const {
  int p = 1;
  for (const auto& st : stages) {
    if (const auto* c = std::get_if<ConvStage>(&st)) p *= c->stride_w;
    if (const auto* q = std::get_if<PoolStage>(&st)) p *= q->stride_w;
  }
  return p;
}

int EncoderConfig::final_height() const {
  int h = input_height;
  for (const auto& st : stages) {
    if (const auto* c = std::get_if<ConvStage>(&st)) h = ceil_div(h, c->stride_h);
    if (const auto* q = std::get_if<PoolStage>(&st)) h = ceil_div(h, q->stride_h);
  }
  return h;
}

int EncoderConfig::final_channels() const {
  int c = 1;
  for (const auto& st : stages) {
    if (const auto* cs = std::get_if<ConvStage>(&st)) c = cs->channels;
    if (const auto* in = std::get_if<InceptionStage>(&st)) c = in->out_channels();
  }
  return c;
}

int EncoderConfig::receptive_field() const {
  int rf = 1, jump = 1;
  for (const auto& st : stages) {
    int k = 1, s = 1;
    if (const auto* c = std::get_if<ConvStage>(&st)) {
      k = c->kernel_w;
      s = c->stride_w;
    } else if (const auto* q = std::get_if<PoolStage>(&st)) {
      k = q->window_w;
      s = q->stride_w;
    } else {
      k = 5;  // widest branch
    }
    rf += (k - 1) * jump;
    jump *= s;
  }
  return rf;
}

int output_length(int width, const EncoderConfig& config) {
  int w = width;
  for (const auto& st : config.stages) {
    if (const auto* c = std::get_if<ConvStage>(&st)) w = ceil_div(w, c->stride_w);
    if (const auto* q = std::get_if<PoolStage>(&st)) w = ceil_div(w, q->stride_w);
  }
  return w;
}

template <class T>
void init_encoder_params(const EncoderConfig& config, ParamStore<T>& params, std::mt19937_64& rng,
                         const std::string& prefix) {
  config.validate();
  int channels = 1;
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const std::string name = prefix + "/" + std::to_string(i);
    const auto& st = config.stages[i];
    if (const auto* c = std::get_if<ConvStage>(&st)) {
      add_conv(params, rng, name + "/conv", c->kernel_h, c->kernel_w, channels, c->channels);
      channels = c->channels;
    } else if (const auto* in = std::get_if<InceptionStage>(&st)) {
      add_conv(params, rng, name + "/a", 1, 1, channels, in->d1);
      add_conv(params, rng, name + "/b1", 1, 1, channels, in->d1);
      add_conv(params, rng, name + "/b3", 3, 3, in->d1, in->d2);
      add_conv(params, rng, name + "/c1", 1, 1, channels, in->d1);
      add_conv(params, rng, name + "/c5", 5, 5, in->d1, in->d2);
      add_conv(params, rng, name + "/d", 1, 1, channels, in->d1);
      channels = in->out_channels();
    }
  }
  const int n_in = config.collapse_inputs();
  params.add(prefix + "/collapse/w", glorot_uniform<T>(Shape{n_in, config.feature_dim}, n_in, config.feature_dim, rng));
  params.add(prefix + "/collapse/b", TensorT<T>(Shape{config.feature_dim}));
}

template <class T>
Var<T> inception_module(Var<T> input, const InceptionStage& spec, const std::string& prefix) {
  (void)spec;
  const Var<T> a = conv_relu6(input, prefix + "/a");
  const Var<T> b = conv_relu6(conv_relu6(input, prefix + "/b1"), prefix + "/b3");
  const Var<T> c = conv_relu6(conv_relu6(input, prefix + "/c1"), prefix + "/c5");
  const Var<T> d = conv_relu6(pool(input, PoolKind::avg, 3, 3, 1, 1), prefix + "/d");
  return concat_last<T>({a, b, c, d});
}

template <class T>
Var<T> encode(const EncoderConfig& config, Graph<T>& graph, const TensorT<T>& image,
              int valid_width, const std::string& prefix) {
  if (image.rank() != 3 || image.dim(0) != config.input_height || image.dim(2) != 1) {
    throw ShapeError("encode: expected image of shape (" + std::to_string(config.input_height) +
                     ", w, 1), got " + shape_string(image.shape()));
  }
  const int width = image.dim(1);
  if (valid_width < 0) valid_width = width;
  if (valid_width < 1 || valid_width > width) {
    throw std::invalid_argument("encode: valid width " + std::to_string(valid_width) +
                                " outside image width " + std::to_string(width));
  }
  const int stride = config.width_stride();
  const int aligned = ceil_div(valid_width, stride) * stride;
  TensorT<T> x(Shape{config.input_height, aligned, 1});
  const int copy_w = std::min(valid_width, width);
  for (int y = 0; y < config.input_height; ++y) {
    for (int c = 0; c < copy_w; ++c) x.at(y, c, 0) = image.at(y, c, 0);
  }

  Var<T> h = graph.input(std::move(x), false, "image");
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const std::string name = prefix + "/" + std::to_string(i);
    const auto& st = config.stages[i];
    if (const auto* c = std::get_if<ConvStage>(&st)) {
      h = activate(conv2d(h, graph.param(name + "/conv/w"), graph.param(name + "/conv/b"), c->stride_h, c->stride_w),
                   c->activation);
    } else if (const auto* p = std::get_if<PoolStage>(&st)) {
      h = pool(h, p->kind, p->window_h, p->window_w, p->stride_h, p->stride_w);
    } else {
      h = inception_module(h, std::get<InceptionStage>(st), name);
    }
  }
  const Var<T> seq = columns_to_sequence(h);
  return fully_connected(seq, graph.param(prefix + "/collapse/w"), graph.param(prefix + "/collapse/b"),
                         config.feature_activation);
}

#define SSID_INSTANTIATE(T)                                                                                 \
  template TensorT<T> glorot_uniform<T>(Shape, int, int, std::mt19937_64&);                                 \
  template TensorT<T> he_uniform<T>(Shape, int, std::mt19937_64&);                                 \
  template void init_encoder_params<T>(const EncoderConfig&, ParamStore<T>&, std::mt19937_64&,              \
                                       const std::string&);                                                 \
  template Var<T> inception_module<T>(Var<T>, const InceptionStage&, const std::string&);                   \
  template Var<T> encode<T>(const EncoderConfig&, Graph<T>&, const TensorT<T>&, int, const std::string&);

SSID_INSTANTIATE(float)
SSID_INSTANTIATE(double)
#undef SSID_INSTANTIATE

}  // namespace ssid
