#include "energuard/nn/serialize.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace energuard::nn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic = {'E', 'N', 'E', 'R', 'G', 'M', 'D', 'L'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const std::vector<std::uint8_t>& in, std::size_t off) {
  return static_cast<std::uint16_t>(in[off] | (in[off + 1] << 8));
}

std::uint64_t get_u64(const std::vector<std::uint8_t>& in, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[off + i]) << (8 * i);
  return v;
}

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t n, std::uint32_t seed) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t c = seed ^ 0xffffffffu;
  for (std::size_t i = 0; i < n; ++i) c = table[(c ^ data[i]) & 0xffu] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

void write_model_file(const ModelFile& file, const fs::path& path) {
  const std::string header = file.header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(header.size() + file.blob.size() + 64);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u16(out, kModelFormatVersion);
  put_u64(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  put_u64(out, file.blob.size());
  out.insert(out.end(), file.blob.begin(), file.blob.end());

  std::uint32_t crc = crc32(out.data(), out.size());
  put_u64(out, crc);  // stored widened; only the low 32 bits are meaningful

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f.flush()) throw IoError("failed writing " + path.string());
}

ModelFile read_model_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());

  const std::size_t min_size = kMagic.size() + 2 + 8 + 8 + 8;
  if (bytes.size() < min_size) throw CorruptModel(path.string() + ": file too short");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw CorruptModel(path.string() + ": bad magic");
  }
  const std::uint16_t version = get_u16(bytes, kMagic.size());
  if (version > kModelFormatVersion) {
    throw VersionMismatch(path.string() + ": format version " + std::to_string(version) +
                          " is newer than supported version " +
                          std::to_string(kModelFormatVersion));
  }

  std::size_t off = kMagic.size() + 2;
  const std::uint64_t header_len = get_u64(bytes, off);
  off += 8;
  if (off + header_len + 8 + 8 > bytes.size()) {
    throw CorruptModel(path.string() + ": truncated header");
  }
  const std::string header_str(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                               bytes.begin() + static_cast<std::ptrdiff_t>(off + header_len));
  off += header_len;
  const std::uint64_t blob_len = get_u64(bytes, off);
  off += 8;
  if (off + blob_len + 8 != bytes.size()) {
    throw CorruptModel(path.string() + ": truncated payload");
  }

  const std::uint32_t stored = static_cast<std::uint32_t>(get_u64(bytes, off + blob_len));
  const std::uint32_t actual = crc32(bytes.data(), off + blob_len);
  if (stored != actual) throw CorruptModel(path.string() + ": checksum mismatch");

  ModelFile file;
  file.header = json::parse(header_str, nullptr, /*allow_exceptions=*/false);
  if (file.header.is_discarded()) throw CorruptModel(path.string() + ": invalid header");
  file.blob.assign(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                   bytes.begin() + static_cast<std::ptrdiff_t>(off + blob_len));
  return file;
}

void append_f32(std::vector<std::uint8_t>& blob, const std::vector<float>& values) {
  const std::size_t start = blob.size();
  blob.resize(start + values.size() * sizeof(float));
  std::memcpy(blob.data() + start, values.data(), values.size() * sizeof(float));
}

void append_f64(std::vector<std::uint8_t>& blob, const std::vector<double>& values) {
  const std::size_t start = blob.size();
  blob.resize(start + values.size() * sizeof(double));
  std::memcpy(blob.data() + start, values.data(), values.size() * sizeof(double));
}

std::vector<float> take_f32(const std::vector<std::uint8_t>& blob, std::size_t& offset,
                            std::size_t count) {
  if (offset + count * sizeof(float) > blob.size()) {
    throw CorruptModel("model payload shorter than declared shapes");
  }
  std::vector<float> out(count);
  std::memcpy(out.data(), blob.data() + offset, count * sizeof(float));
  offset += count * sizeof(float);
  return out;
}

std::vector<double> take_f64(const std::vector<std::uint8_t>& blob, std::size_t& offset,
                             std::size_t count) {
  if (offset + count * sizeof(double) > blob.size()) {
    throw CorruptModel("model payload shorter than declared shapes");
  }
  std::vector<double> out(count);
  std::memcpy(out.data(), blob.data() + offset, count * sizeof(double));
  offset += count * sizeof(double);
  return out;
}

json layer_spec_to_json(const LayerSpec& spec) {
  json j;
  switch (spec.kind) {
    case LayerKind::Conv1D:
      j["kind"] = "conv1d";
      j["filters"] = spec.filters;
      j["kernel_size"] = spec.kernel_size;
      break;
    case LayerKind::MaxPool1D:
      j["kind"] = "maxpool1d";
      j["pool_size"] = spec.pool_size;
      break;
    case LayerKind::Dense:
      j["kind"] = "dense";
      j["units"] = spec.units;
      break;
    case LayerKind::Dropout:
      j["kind"] = "dropout";
      j["rate"] = spec.rate;
      break;
    case LayerKind::Relu:
      j["kind"] = "relu";
      break;
    case LayerKind::Softmax:
      j["kind"] = "softmax";
      break;
    case LayerKind::Flatten:
      j["kind"] = "flatten";
      break;
  }
  return j;
}

LayerSpec layer_spec_from_json(const json& j) {
  const std::string kind = j.value("kind", "");
  if (kind == "conv1d") {
    return LayerSpec::conv1d(j.value("filters", std::size_t{1}),
                             j.value("kernel_size", std::size_t{3}));
  }
  if (kind == "maxpool1d") return LayerSpec::maxpool1d(j.value("pool_size", std::size_t{10}));
  if (kind == "dense") return LayerSpec::dense(j.value("units", std::size_t{1}));
  if (kind == "dropout") return LayerSpec::dropout(j.value("rate", 0.0));
  if (kind == "relu") return LayerSpec::relu();
  if (kind == "softmax") return LayerSpec::softmax();
  if (kind == "flatten") return LayerSpec::flatten();
  throw CorruptModel("unknown layer kind '" + kind + "' in model header");
}

ModelFile network_to_model_file(Network<float>& net, const json& extra) {
  ModelFile file;
  file.header = extra;
  file.header["kind"] = "cnn";
  file.header["input_length"] = net.input_length();
  file.header["in_channels"] = net.in_channels();
  file.header["seed"] = net.seed();

  json layers = json::array();
  for (const LayerSpec& spec : net.specs()) layers.push_back(layer_spec_to_json(spec));
  file.header["layers"] = layers;

  json shapes = json::array();
  for (Tensor<float>* p : net.parameters()) {
    shapes.push_back(p->shape);
    append_f32(file.blob, p->data);
  }
  file.header["param_shapes"] = shapes;
  return file;
}

Network<float> network_from_model_file(const ModelFile& file) {
  if (file.header.value("kind", "") != "cnn") {
    throw CorruptModel("model container is not a cnn model");
  }
  std::vector<LayerSpec> specs;
  for (const json& j : file.header.at("layers")) specs.push_back(layer_spec_from_json(j));

  Network<float> net(specs, file.header.at("input_length").get<std::size_t>(),
                     file.header.at("in_channels").get<std::size_t>(),
                     file.header.value("seed", std::uint64_t{0}));

  auto params = net.parameters();
  const json& shapes = file.header.at("param_shapes");
  if (shapes.size() != params.size()) throw CorruptModel("parameter count mismatch");
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto shape = shapes[i].get<std::vector<std::size_t>>();
    if (shape != params[i]->shape) throw CorruptModel("parameter shape mismatch");
    params[i]->data = take_f32(file.blob, offset, params[i]->size());
  }
  if (offset != file.blob.size()) throw CorruptModel("trailing bytes in model payload");
  return net;
}

}  // namespace energuard::nn
