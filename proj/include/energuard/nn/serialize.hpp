#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "energuard/nn/network.hpp"

namespace energuard::nn {

// Self-describing model container: magic, format version, a JSON header
// (which carries a "kind" tag: cnn / knn / rf), a raw payload blob, and a
// trailing CRC-32 over everything before it.
struct ModelFile {
  nlohmann::json header;
  std::vector<std::uint8_t> blob;
};

inline constexpr std::uint16_t kModelFormatVersion = 1;

void write_model_file(const ModelFile& file, const std::filesystem::path& path);
ModelFile read_model_file(const std::filesystem::path& path);

std::uint32_t crc32(const std::uint8_t* data, std::size_t n, std::uint32_t seed = 0);

// Float payload helpers shared by the model kinds.
void append_f32(std::vector<std::uint8_t>& blob, const std::vector<float>& values);
void append_f64(std::vector<std::uint8_t>& blob, const std::vector<double>& values);
std::vector<float> take_f32(const std::vector<std::uint8_t>& blob, std::size_t& offset,
                            std::size_t count);
std::vector<double> take_f64(const std::vector<std::uint8_t>& blob, std::size_t& offset,
                             std::size_t count);

nlohmann::json layer_spec_to_json(const LayerSpec& spec);
LayerSpec layer_spec_from_json(const nlohmann::json& j);

// A "cnn" container: layer specs + input shape in the header, weights in
// the blob. `extra` is merged into the header (task, classes, standardizer).
ModelFile network_to_model_file(Network<float>& net, const nlohmann::json& extra);
Network<float> network_from_model_file(const ModelFile& file);

}  // namespace energuard::nn
