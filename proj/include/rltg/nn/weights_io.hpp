#pragma once

#include <map>
#include <string>
#include <string_view>

#include "json.hpp"
#include "rltg/nn/network.hpp"

namespace rltg::nn {

/// In-memory image of an "RLTG1" weight file: named f32 tensors plus a free-form
/// JSON object carried in the manifest (architecture metadata).
struct TensorFile {
  std::map<std::string, MatrixF> tensors;
  nlohmann::json meta = nlohmann::json::object();

  const MatrixF& at(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors.count(name) != 0; }
};

/// Layout: magic "RLTG1\0" | u64 LE manifest length | manifest JSON | raw LE f32 payload.
/// The manifest lists {name, shape, dtype:"f32", offset} with offsets relative to the payload.
std::string encode_tensor_file(const TensorFile& file);
TensorFile decode_tensor_file(std::string_view bytes);

void write_tensor_file(const std::string& path, const TensorFile& file);
TensorFile read_tensor_file(const std::string& path);

LayerSpec layer_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LayerSpec& spec);

void put_layer(TensorFile& file, const std::string& prefix, const Layer<float>& layer);
Layer<float> get_layer(const TensorFile& file, const std::string& prefix);

void put_network(TensorFile& file, const std::string& prefix, const Network<float>& net);
Network<float> get_network(const TensorFile& file, const std::string& prefix);

}  // namespace rltg::nn
