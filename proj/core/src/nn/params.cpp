#include "mrg/nn/params.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace mrg::nn {

void ModelDims::validate() const {
  if (vocab_size <= 0 || d_model <= 0 || heads <= 0 || ff_dim <= 0 || encoder_layers < 0 || decoder_layers < 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (d_model % heads != 0) throw std::invalid_argument("d_model must be divisible by heads");
  if (decoder && decoder_layers < 1) throw std::invalid_argument("decoder requires at least one layer");
  if (!(dropout >= 0.0f && dropout < 1.0f)) throw std::invalid_argument("dropout must lie in [0, 1)");
}

ModelDims labeller_dims(int vocab_size) {
  ModelDims d;
  d.vocab_size = vocab_size;
  d.classifier = true;
  d.decoder = false;
  d.decoder_layers = 0;
  return d;
}

ModelDims realizer_dims(int vocab_size) {
  ModelDims d;
  d.vocab_size = vocab_size;
  d.classifier = false;
  d.decoder = true;
  return d;
}

namespace {

enum class Init { uniform, zeros, ones };

struct Spec {
  std::string name;
  int rows;
  int cols;
  Init init;
};

void attention_specs(std::vector<Spec>& out, const std::string& prefix, int d) {
  for (const char* p : {"q", "k", "v", "o"}) {
    out.push_back({prefix + "." + p + ".weight", d, d, Init::uniform});
    out.push_back({prefix + "." + p + ".bias", 1, d, Init::zeros});
  }
}

void norm_specs(std::vector<Spec>& out, const std::string& prefix, int d) {
  out.push_back({prefix + ".gamma", 1, d, Init::ones});
  out.push_back({prefix + ".beta", 1, d, Init::zeros});
}

void ffn_specs(std::vector<Spec>& out, const std::string& prefix, int d, int ff) {
  out.push_back({prefix + ".ff1.weight", d, ff, Init::uniform});
  out.push_back({prefix + ".ff1.bias", 1, ff, Init::zeros});
  out.push_back({prefix + ".ff2.weight", ff, d, Init::uniform});
  out.push_back({prefix + ".ff2.bias", 1, d, Init::zeros});
}

std::vector<Spec> parameter_specs(const ModelDims& dims) {
  const int d = dims.d_model;
  std::vector<Spec> specs;
  specs.push_back({"embed.tokens", dims.vocab_size, d, Init::uniform});
  for (int l = 0; l < dims.encoder_layers; ++l) {
    const auto p = "encoder." + std::to_string(l);
    attention_specs(specs, p + ".attn", d);
    norm_specs(specs, p + ".ln1", d);
    ffn_specs(specs, p, d, dims.ff_dim);
    norm_specs(specs, p + ".ln2", d);
  }
  if (dims.classifier) {
    specs.push_back({"classifier.weight", d, 3, Init::uniform});
    specs.push_back({"classifier.bias", 1, 3, Init::zeros});
  }
  if (dims.decoder) {
    for (int l = 0; l < dims.decoder_layers; ++l) {
      const auto p = "decoder." + std::to_string(l);
      attention_specs(specs, p + ".self", d);
      norm_specs(specs, p + ".ln1", d);
      attention_specs(specs, p + ".cross", d);
      norm_specs(specs, p + ".ln2", d);
      ffn_specs(specs, p, d, dims.ff_dim);
      norm_specs(specs, p + ".ln3", d);
    }
    specs.push_back({"output.weight", d, dims.vocab_size, Init::uniform});
    specs.push_back({"output.bias", 1, dims.vocab_size, Init::zeros});
  }
  return specs;
}

}  // namespace

template <class T>
ParameterStore<T> init_parameters(const ModelDims& dims, std::uint64_t seed) {
  dims.validate();
  ParameterStore<T> store(dims);
  Rng rng(seed);
  for (const auto& s : parameter_specs(dims)) {
    Matrix<T> m(s.rows, s.cols);
    switch (s.init) {
      case Init::zeros:
        m.setZero();
        break;
      case Init::ones:
        m.setOnes();
        break;
      case Init::uniform: {
        // Embedding tables are scaled by their width, everything else by
        // its input width (the row count of a d_in x d_out weight).
        const bool embedding = s.name == "embed.tokens";
        const double bound = 1.0 / std::sqrt(static_cast<double>(embedding ? s.cols : s.rows));
        for (Eigen::Index i = 0; i < m.size(); ++i) {
          m.data()[i] = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
        }
        break;
      }
    }
    store.set(s.name, std::move(m));
  }
  return store;
}

template ParameterStore<float> init_parameters<float>(const ModelDims&, std::uint64_t);
template ParameterStore<double> init_parameters<double>(const ModelDims&, std::uint64_t);

}  // namespace mrg::nn
