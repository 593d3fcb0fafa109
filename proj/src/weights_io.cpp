#include "rltg/nn/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rltg::nn {

namespace {

constexpr char kMagic[6] = {'R', 'L', 'T', 'G', '1', '\0'};

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint64_t read_u64(std::string_view bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  return v;
}

void append_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

float read_f32(std::string_view bytes, std::size_t at) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

LayerKind kind_from_string(const std::string& s) {
  for (auto k : {LayerKind::dense, LayerKind::conv1d, LayerKind::recurrent, LayerKind::attention_pool}) {
    if (to_string(k) == s) return k;
  }
  throw ParseError(0, "unknown layer kind '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
  for (auto a : {Activation::identity, Activation::relu, Activation::tanh, Activation::sigmoid, Activation::softmax}) {
    if (to_string(a) == s) return a;
  }
  throw ParseError(0, "unknown activation '" + s + "'");
}

}  // namespace

const MatrixF& TensorFile::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw DataError("weight file has no tensor '" + name + "'");
  return it->second;
}

std::string encode_tensor_file(const TensorFile& file) {
  nlohmann::json manifest;
  manifest["format"] = "RLTG1";
  manifest["meta"] = file.meta;
  auto& entries = manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : file.tensors) {
    entries.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"dtype", "f32"}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * 4u;
  }
  const std::string header = manifest.dump();
  std::string out(kMagic, sizeof kMagic);
  append_u64(out, header.size());
  out += header;
  out.reserve(out.size() + offset);
  for (const auto& [name, m] : file.tensors) {
    for (Index i = 0; i < m.size(); ++i) append_f32(out, m.data()[i]);
  }
  return out;
}

TensorFile decode_tensor_file(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw ParseError(0, "not an RLTG1 weight file (bad magic)");
  }
  const std::uint64_t header_len = read_u64(bytes, sizeof kMagic);
  const std::size_t header_at = sizeof kMagic + 8;
  if (header_len > bytes.size() - header_at) throw ParseError(0, "RLTG1 manifest length exceeds file size");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(header_at, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("RLTG1 manifest is not valid JSON: ") + e.what());
  }
  const std::size_t payload_at = header_at + header_len;
  const std::size_t payload_len = bytes.size() - payload_at;
  TensorFile file;
  if (manifest.contains("meta")) file.meta = manifest["meta"];
  for (const auto& e : manifest.at("tensors")) {
    if (e.at("dtype") != "f32") throw ParseError(0, "unsupported dtype " + e.at("dtype").dump());
    const auto rows = e.at("shape").at(0).get<Index>();
    const auto cols = e.at("shape").at(1).get<Index>();
    const auto offset = e.at("offset").get<std::uint64_t>();
    const auto count = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols);
    if (rows < 0 || cols < 0 || offset + count * 4u > payload_len) {
      throw ParseError(0, "tensor '" + e.at("name").get<std::string>() + "' overruns the payload");
    }
    MatrixF m(rows, cols);
    for (std::uint64_t i = 0; i < count; ++i) m.data()[i] = read_f32(bytes, payload_at + offset + 4u * i);
    file.tensors.emplace(e.at("name").get<std::string>(), std::move(m));
  }
  return file;
}

void write_tensor_file(const std::string& path, const TensorFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const std::string bytes = encode_tensor_file(file);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

TensorFile read_tensor_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_tensor_file(buf.str());
}

nlohmann::json to_json(const LayerSpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"in", spec.in_dim},
          {"out", spec.out_dim},
          {"activation", to_string(spec.activation)},
          {"kernel_width", spec.kernel_width}};
}

LayerSpec layer_spec_from_json(const nlohmann::json& j) {
  LayerSpec s;
  s.kind = kind_from_string(j.at("kind").get<std::string>());
  s.in_dim = j.at("in").get<Index>();
  s.out_dim = j.at("out").get<Index>();
  s.activation = activation_from_string(j.at("activation").get<std::string>());
  s.kernel_width = j.at("kernel_width").get<Index>();
  s.validate();
  return s;
}

void put_layer(TensorFile& file, const std::string& prefix, const Layer<float>& layer) {
  const auto& names = weight_names(layer.spec.kind);
  for (std::size_t i = 0; i < names.size(); ++i) file.tensors[prefix + names[i]] = layer.weights[i];
  file.meta["layers"][prefix] = to_json(layer.spec);
}

Layer<float> get_layer(const TensorFile& file, const std::string& prefix) {
  if (!file.meta.contains("layers") || !file.meta["layers"].contains(prefix)) {
    throw DataError("weight file has no layer '" + prefix + "'");
  }
  Layer<float> layer{layer_spec_from_json(file.meta["layers"][prefix]), {}};
  for (const auto& n : weight_names(layer.spec.kind)) layer.weights.push_back(file.at(prefix + n));
  check_layer_weights(layer);
  return layer;
}

void put_network(TensorFile& file, const std::string& prefix, const Network<float>& net) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) put_layer(file, prefix + std::to_string(i) + ".", net.layers[i]);
  file.meta["networks"][prefix] = net.layers.size();
}

Network<float> get_network(const TensorFile& file, const std::string& prefix) {
  if (!file.meta.contains("networks") || !file.meta["networks"].contains(prefix)) {
    throw DataError("weight file has no network '" + prefix + "'");
  }
  const auto count = file.meta["networks"][prefix].get<std::size_t>();
  Network<float> net;
  for (std::size_t i = 0; i < count; ++i) net.layers.push_back(get_layer(file, prefix + std::to_string(i) + "."));
  return net;
}

}  // namespace rltg::nn
