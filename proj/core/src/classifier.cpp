#include "dnfpipe/classifier.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dnfpipe {

const char* to_string(SocketClass c) {
  switch (c) {
    case SocketClass::USB: return "USB";
    case SocketClass::ETHERNET: return "ETHERNET";
    case SocketClass::HDMI: return "HDMI";
    case SocketClass::POWER: return "POWER";
  }
  return "?";
}

SocketClass socket_class_from_string(const std::string& s) {
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto c = static_cast<SocketClass>(k);
    if (s == to_string(c) || s == std::to_string(k)) return c;
  }
  throw ContractError("unknown socket class '" + s + "'");
}

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::size_t ClassifierArch::neuron_count() const {
  const std::size_t s0 = input_side, s1 = pool1_side(), s2 = pool2_side();
  return conv1_channels * s0 * s0 + conv1_channels * s1 * s1 + conv2_channels * s1 * s1 +
         conv2_channels * s2 * s2 + dense1 + outputs;
}

void ClassifierArch::validate() const {
  if (input_side == 0 || input_side % 4) throw ContractError("classifier input side must be a multiple of 4");
  if (conv1_channels == 0 || conv2_channels == 0 || dense1 == 0)
    throw ContractError("classifier layer widths must be positive");
  if (outputs != kNumClasses) throw ContractError("classifier must have exactly 4 outputs");
}

const Tensor& ClassifierWeights::layer(const std::string& name) const {
  for (const auto& t : layers)
    if (t.name == name) return t;
  throw ContractError("classifier weights missing layer '" + name + "'");
}

Tensor& ClassifierWeights::layer(const std::string& name) {
  for (auto& t : layers)
    if (t.name == name) return t;
  throw ContractError("classifier weights missing layer '" + name + "'");
}

bool ClassifierWeights::has_layer(const std::string& name) const {
  return std::any_of(layers.begin(), layers.end(), [&](const Tensor& t) { return t.name == name; });
}

void ClassifierWeights::validate() const {
  arch.validate();
  if (!loaded()) throw ContractError("classifier weights not loaded");
  const auto& a = arch;
  const std::size_t s2 = a.pool2_side();
  const std::vector<std::pair<std::string, std::vector<std::size_t>>> expect{
      {"conv1", {a.conv1_channels, 1, 5, 5}},
      {"pool1", {1}},
      {"conv2", {a.conv2_channels, a.conv1_channels, 3, 3}},
      {"pool2", {1}},
      {"dense1", {a.dense1, a.conv2_channels * s2 * s2}},
      {"dense2", {a.outputs, a.dense1}},
      {"lateral", {a.outputs, a.outputs}}};
  for (const auto& [name, shape] : expect) {
    const auto& t = layer(name);
    if (t.shape != shape) throw ContractError("classifier layer '" + name + "' has the wrong shape");
    if (t.data.size() != t.numel()) throw ContractError("classifier layer '" + name + "' size mismatch");
  }
  if (has_layer("activity") != has_layer("dense1_bias"))
    throw ContractError("classifier layers 'activity' and 'dense1_bias' must appear together");
  if (has_bias()) {
    if (layer("activity").shape != std::vector<std::size_t>{1} || layer("activity").data.size() != 1)
      throw ContractError("classifier layer 'activity' has the wrong shape");
    const auto& b = layer("dense1_bias");
    if (b.shape != std::vector<std::size_t>{a.dense1} || b.data.size() != a.dense1)
      throw ContractError("classifier layer 'dense1_bias' has the wrong shape");
  }
  for (const auto& t : layers) {
    const bool known = std::find(kLayerOrder.begin(), kLayerOrder.end(), t.name) != kLayerOrder.end() ||
                       std::find(kOptionalLayers.begin(), kOptionalLayers.end(), t.name) != kOptionalLayers.end();
    if (!known) throw ContractError("classifier weights contain unknown layer '" + t.name + "'");
  }
  for (const auto& n : neurons) n.params.validate();
}

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ContractError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void save_weights(const ClassifierWeights& w, const std::filesystem::path& weights,
                  const std::filesystem::path& manifest) {
  w.validate();
  {
    std::ofstream out(weights);
    if (!out) throw std::runtime_error("cannot write '" + weights.string() + "'");
    out << "dnfpipe-weights 1\n";
    std::vector<const char*> names(kLayerOrder.begin(), kLayerOrder.end());
    if (w.has_bias()) names.insert(names.end(), kOptionalLayers.begin(), kOptionalLayers.end());
    for (const char* name : names) {
      const auto& t = w.layer(name);
      out << "layer " << t.name << ' ' << t.shape.size();
      for (auto d : t.shape) out << ' ' << d;
      out << '\n';
      for (std::size_t i = 0; i < t.data.size(); ++i)
        out << format_double(t.data[i]) << ((i + 1) % 16 == 0 || i + 1 == t.data.size() ? '\n' : ' ');
    }
  }
  std::ofstream out(manifest);
  if (!out) throw std::runtime_error("cannot write '" + manifest.string() + "'");
  out << "dnfpipe-manifest 1\n";
  out << "layer_order";
  for (const char* name : kLayerOrder) out << ' ' << name;
  out << '\n';
  out << "arch " << w.arch.input_side << ' ' << w.arch.conv1_channels << ' ' << w.arch.conv2_channels
      << ' ' << w.arch.dense1 << ' ' << w.arch.outputs << '\n';
  out << "input_gain " << format_double(w.input_gain) << '\n';
  for (std::size_t i = 0; i < w.neurons.size(); ++i) {
    const auto& n = w.neurons[i];
    out << "neuron " << kNeuronLayers[i] << ' ' << to_string(n.model) << ' ' << n.params.du << ' '
        << n.params.dv << ' ' << format_double(n.params.vth) << ' ' << n.params.bias_mant << ' '
        << n.params.bias_exp << ' ' << n.params.bias_shift << ' ' << n.params.refractory_delay << '\n';
  }
}

ClassifierWeights load_weights(const std::filesystem::path& weights,
                               const std::filesystem::path& manifest) {
  ClassifierWeights w;
  {
    std::istringstream in(read_file(manifest));
    std::string tag;
    in >> tag;
    if (tag != "dnfpipe-manifest") throw ContractError("bad manifest header in '" + manifest.string() + "'");
    int version = 0;
    in >> version;
    std::string key;
    std::size_t neurons_seen = 0;
    while (in >> key) {
      if (key == "layer_order") {
        for (const char* expected : kLayerOrder) {
          std::string name;
          in >> name;
          if (name != expected) throw ContractError("manifest layer order mismatch at '" + name + "'");
        }
      } else if (key == "arch") {
        in >> w.arch.input_side >> w.arch.conv1_channels >> w.arch.conv2_channels >> w.arch.dense1 >>
            w.arch.outputs;
      } else if (key == "input_gain") {
        in >> w.input_gain;
      } else if (key == "neuron") {
        std::string layer, model;
        in >> layer >> model;
        auto it = std::find_if(kNeuronLayers.begin(), kNeuronLayers.end(),
                               [&](const char* n) { return layer == n; });
        if (it == kNeuronLayers.end()) throw ContractError("manifest names unknown neuron layer '" + layer + "'");
        auto& n = w.neurons[static_cast<std::size_t>(it - kNeuronLayers.begin())];
        n.model = neuron_model_from_string(model);
        in >> n.params.du >> n.params.dv >> n.params.vth >> n.params.bias_mant >> n.params.bias_exp >>
            n.params.bias_shift >> n.params.refractory_delay;
        ++neurons_seen;
      } else {
        throw ContractError("unknown manifest key '" + key + "'");
      }
      if (!in) throw ContractError("malformed manifest near '" + key + "'");
    }
    if (neurons_seen != kNeuronLayers.size()) throw ContractError("manifest must list all 7 neuron layers");
  }
  std::istringstream in(read_file(weights));
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "dnfpipe-weights") throw ContractError("bad weights header in '" + weights.string() + "'");
  std::string key;
  while (in >> key) {
    if (key != "layer") throw ContractError("malformed weights file near '" + key + "'");
    Tensor t;
    std::size_t rank = 0;
    in >> t.name >> rank;
    t.shape.resize(rank);
    for (auto& d : t.shape) in >> d;
    t.data.resize(t.numel());
    for (auto& x : t.data) in >> x;
    if (!in) throw ContractError("truncated weights for layer '" + t.name + "'");
    w.layers.push_back(std::move(t));
  }
  w.validate();
  return w;
}

namespace {

std::vector<Triplet> conv_triplets(const Tensor& k, std::size_t in_ch, std::size_t out_ch,
                                   std::size_t side, int ksize, double gain) {
  std::vector<Triplet> t;
  const int pad = ksize / 2;
  const auto n = static_cast<int>(side);
  for (std::size_t o = 0; o < out_ch; ++o)
    for (std::size_t i = 0; i < in_ch; ++i)
      for (int kr = 0; kr < ksize; ++kr)
        for (int kc = 0; kc < ksize; ++kc) {
          const double w = gain * k.data[((o * in_ch + i) * ksize + kr) * ksize + kc];
          if (w == 0.0) continue;
          for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
              const int rr = r + kr - pad, cc = c + kc - pad;
              if (rr < 0 || rr >= n || cc < 0 || cc >= n) continue;
              t.push_back({static_cast<std::uint32_t>(i * side * side + rr * n + cc),
                           static_cast<std::uint32_t>(o * side * side + r * n + c), w});
            }
        }
  return t;
}

std::vector<Triplet> pool_triplets(std::size_t channels, std::size_t side, double w) {
  std::vector<Triplet> t;
  const std::size_t half = side / 2;
  for (std::size_t ch = 0; ch < channels; ++ch)
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c)
        t.push_back({static_cast<std::uint32_t>(ch * side * side + r * side + c),
                     static_cast<std::uint32_t>(ch * half * half + (r / 2) * half + c / 2), w});
  return t;
}

DenseWeights transpose_dense(const Tensor& t) {
  DenseWeights d;
  d.n_dst = t.shape[0];
  d.n_src = t.shape[1];
  d.w.assign(d.n_src * d.n_dst, 0.0);
  for (std::size_t o = 0; o < d.n_dst; ++o)
    for (std::size_t i = 0; i < d.n_src; ++i) d.w[i * d.n_dst + o] = t.data[o * d.n_src + i];
  return d;
}

}  // namespace

ClassifierNet build_classifier(Network& net, PopId gated, const ClassifierWeights& w) {
  w.validate();
  const auto& a = w.arch;
  const std::size_t s0 = a.input_side, s1 = a.pool1_side(), s2 = a.pool2_side();
  if (net.population(gated).size() != s0 * s0) throw ContractError("classifier input shape mismatch");
  auto pop = [&](const char* name, std::size_t i, Shape shape) {
    return net.add_population(name, Population(shape, w.neurons[i].model, w.neurons[i].params));
  };
  ClassifierNet c;
  c.conv1 = pop("cls.conv1", 0, {a.conv1_channels * s0, s0});
  c.pool1 = pop("cls.pool1", 1, {a.conv1_channels * s1, s1});
  c.conv2 = pop("cls.conv2", 2, {a.conv2_channels * s1, s1});
  c.pool2 = pop("cls.pool2", 3, {a.conv2_channels * s2, s2});
  c.dense1 = pop("cls.dense1", 4, {1, a.dense1});
  c.output = pop("cls.output", 5, {1, a.outputs});

  auto sparse = [&](std::string name, PopId src, PopId dst, std::vector<Triplet> t) {
    c.projections.push_back(net.add_projection(
        {std::move(name), src, dst, 1,
         SparseWeights::from_triplets(net.population(src).size(), net.population(dst).size(), std::move(t))}));
  };
  sparse("rn.gated->cls.conv1", gated, c.conv1,
         conv_triplets(w.layer("conv1"), 1, a.conv1_channels, s0, 5, w.input_gain));
  sparse("cls.conv1->cls.pool1", c.conv1, c.pool1, pool_triplets(a.conv1_channels, s0, w.layer("pool1").data[0]));
  sparse("cls.pool1->cls.conv2", c.pool1, c.conv2,
         conv_triplets(w.layer("conv2"), a.conv1_channels, a.conv2_channels, s1, 3, 1.0));
  sparse("cls.conv2->cls.pool2", c.conv2, c.pool2, pool_triplets(a.conv2_channels, s1, w.layer("pool2").data[0]));
  c.projections.push_back(
      net.add_projection({"cls.pool2->cls.dense1", c.pool2, c.dense1, 1, transpose_dense(w.layer("dense1"))}));
  c.projections.push_back(
      net.add_projection({"cls.dense1->cls.output", c.dense1, c.output, 1, transpose_dense(w.layer("dense2"))}));
  if (w.has_bias()) {
    c.bias = pop("cls.bias", 6, {1, 1});
    std::vector<Triplet> in;
    const double wa = w.layer("activity").data[0];
    for (std::size_t i = 0; i < net.population(c.pool2).size(); ++i) in.push_back({static_cast<std::uint32_t>(i), 0, wa});
    sparse("cls.pool2->cls.bias", c.pool2, *c.bias, std::move(in));
    DenseWeights b;
    b.n_src = 1;
    b.n_dst = a.dense1;
    b.w = w.layer("dense1_bias").data;
    c.projections.push_back(net.add_projection({"cls.bias->cls.dense1", *c.bias, c.dense1, 1, std::move(b)}));
  }
  const auto& lat = w.layer("lateral");
  if (std::any_of(lat.data.begin(), lat.data.end(), [](double x) { return x != 0.0; })) {
    c.projections.push_back(
        net.add_projection({"cls.output.lateral", c.output, c.output, 1, transpose_dense(lat)}));
  }
  return c;
}

std::array<std::uint64_t, kNumClasses> classify_forward(
    const ClassifierWeights& w, const std::vector<std::vector<std::uint8_t>>& gated_stream,
    std::size_t window) {
  if (window < 1) throw ContractError("classify_forward: window must be >= 1");
  w.validate();
  const std::size_t side = w.arch.input_side;
  Network net;
  const PopId in = net.add_population("gated", source_population({side, side}));
  const ClassifierNet c = build_classifier(net, in, w);
  std::array<std::uint64_t, kNumClasses> counts{};
  std::vector<double> cur(side * side);
  for (std::size_t t = 0; t < window; ++t) {
    if (t < gated_stream.size()) {
      const auto& f = gated_stream[t];
      if (f.size() != side * side) throw ContractError("classify_forward: frame shape mismatch");
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] = f[i] ? 1.0 : 0.0;
      net.inject(in, cur);
    }
    net.step();
    const auto s = net.spikes(c.output);
    for (std::size_t k = 0; k < kNumClasses; ++k) counts[k] += s[k];
  }
  return counts;
}

int winner(const std::array<std::uint64_t, kNumClasses>& counts) {
  int best = -1;
  std::uint64_t best_n = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    if (counts[k] > best_n) {
      best_n = counts[k];
      best = static_cast<int>(k);
    }
  }
  return best;
}

MatchCircuits build_match_circuits(Network& net, PopId classifier_out, const MatchParams& p) {
  if (net.population(classifier_out).size() != kNumClasses)
    throw ContractError("match circuits need a 4-neuron classifier output");
  MatchCircuits m;
  m.user_input = net.add_population("user", source_population({1, kNumClasses}));
  m.matching = net.add_population("matching", Population({1, kNumClasses}, NeuronModel::LIF_RESET, p.matching));
  m.non_matching =
      net.add_population("non_matching", Population({1, kNumClasses}, NeuronModel::LIF_RESET, p.non_matching));
  auto one = [&](std::string name, PopId s, PopId d, double w) {
    m.projections.push_back(net.add_projection({std::move(name), s, d, 1, SparseWeights::one_to_one(kNumClasses, w)}));
  };
  one("user->matching", m.user_input, m.matching, p.w_user_to_matching);
  one("user->non_matching", m.user_input, m.non_matching, p.w_user_to_non_matching);
  one("cls.output->matching", classifier_out, m.matching, p.w_classifier_to_circuits);
  one("cls.output->non_matching", classifier_out, m.non_matching, p.w_classifier_to_circuits);
  return m;
}

std::pair<bool, bool> eval_match_circuits(const std::array<bool, kNumClasses>& classifier_spikes,
                                          const std::array<bool, kNumClasses>& user_onehot,
                                          const MatchParams& p) {
  if (std::count(user_onehot.begin(), user_onehot.end(), true) != 1)
    throw ContractError("user input must be one-hot");
  Network net;
  const PopId cls = net.add_population("cls.output", source_population({1, kNumClasses}));
  const MatchCircuits m = build_match_circuits(net, cls, p);
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    if (classifier_spikes[k]) net.inject_at(cls, k, 1.0);
    if (user_onehot[k]) net.inject_at(m.user_input, k, 1.0);
  }
  net.step();
  net.step();
  const auto mat = net.spikes(m.matching);
  const auto non = net.spikes(m.non_matching);
  const bool any_m = std::any_of(mat.begin(), mat.end(), [](auto x) { return x != 0; });
  const bool any_n = std::any_of(non.begin(), non.end(), [](auto x) { return x != 0; });
  return {any_m, any_n};
}

}  // namespace dnfpipe
