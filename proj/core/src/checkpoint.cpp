#include "bort/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace bort {

namespace {

constexpr char kMagic[8] = {'B', 'O', 'R', 'T', 'C', 'K', 'P', 'T'};

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t get_u32(const char* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

uint64_t get_u64(const char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

void put_f32_block(std::string& out, const Tensor& t) {
  const float* src = t.data();
  for (int64_t i = 0; i < t.size(); ++i) {
    uint32_t bits;
    std::memcpy(&bits, &src[i], 4);
    put_u32(out, bits);
  }
}

void get_f32_block(const char* p, Tensor& t) {
  float* dst = t.data();
  for (int64_t i = 0; i < t.size(); ++i) {
    const uint32_t bits = get_u32(p + 4 * i);
    std::memcpy(&dst[i], &bits, 4);
  }
}

nlohmann::json layer_to_json(const LayerSpec& l) {
  nlohmann::json j;
  j["kind"] = layer_kind_name(l.kind);
  j["name"] = l.name;
  switch (l.kind) {
    case LayerKind::Conv2d:
      j["in_channels"] = l.in_channels;
      j["out_channels"] = l.out_channels;
      j["kernel"] = {l.geom.kh, l.geom.kw};
      j["stride"] = {l.geom.sh, l.geom.sw};
      j["padding"] = {l.geom.ph, l.geom.pw};
      j["has_bias"] = l.has_bias;
      break;
    case LayerKind::Dense:
      j["in_dim"] = l.in_dim;
      j["out_dim"] = l.out_dim;
      j["has_bias"] = l.has_bias;
      break;
    case LayerKind::MaxPool2d:
      j["pool_k"] = l.pool_k;
      break;
    default:
      break;
  }
  return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  const LayerKind kind = layer_kind_from_name(j.at("kind").get<std::string>());
  const std::string name = j.at("name").get<std::string>();
  switch (kind) {
    case LayerKind::Conv2d: {
      LayerSpec l = LayerSpec::conv2d(name, j.at("in_channels").get<int64_t>(),
                                      j.at("out_channels").get<int64_t>(), 1, 1, 0,
                                      j.at("has_bias").get<bool>());
      const auto k = j.at("kernel");
      const auto s = j.at("stride");
      const auto p = j.at("padding");
      l.geom = ConvGeom{k[0].get<int64_t>(), k[1].get<int64_t>(), s[0].get<int64_t>(),
                        s[1].get<int64_t>(), p[0].get<int64_t>(), p[1].get<int64_t>()};
      return l;
    }
    case LayerKind::Dense:
      return LayerSpec::dense(name, j.at("in_dim").get<int64_t>(), j.at("out_dim").get<int64_t>(),
                              j.at("has_bias").get<bool>());
    case LayerKind::Relu:
      return LayerSpec::relu(name);
    case LayerKind::GlobalMaxPool:
      return LayerSpec::global_max_pool(name);
    case LayerKind::MaxPool2d:
      return LayerSpec::max_pool2d(name, j.at("pool_k").get<int64_t>());
    case LayerKind::Flatten:
      return LayerSpec::flatten(name);
  }
  throw ConfigError("unreachable layer kind");
}

}  // namespace

void atomic_write_file(const std::string& path, const std::string& bytes) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, target);
}

void save_checkpoint(const Network& net, const std::string& path) {
  validate(net);
  nlohmann::json manifest;
  manifest["arch"] = net.arch;
  manifest["input_shape"] = net.input_shape;
  manifest["constrained"] = net.constrained;
  manifest["layers"] = nlohmann::json::array();
  for (const auto& l : net.layers) manifest["layers"].push_back(layer_to_json(l));
  const std::string mstr = manifest.dump();

  std::string out;
  out.append(kMagic, 8);
  put_u32(out, kCheckpointVersion);
  put_u64(out, mstr.size());
  out.append(mstr);
  for (const auto& p : net.params) {
    put_f32_block(out, p.weight);
    put_f32_block(out, p.bias);
  }
  atomic_write_file(path, out);
}

Network load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw IoError("bad checkpoint magic in " + path);
  const uint32_t version = get_u32(bytes.data() + 8);
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  const uint64_t mlen = get_u64(bytes.data() + 12);
  if (20 + mlen > bytes.size()) throw IoError("truncated checkpoint manifest in " + path);

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(20, mlen));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("corrupt checkpoint manifest: ") + e.what());
  }

  Network net;
  net.arch = manifest.at("arch").get<std::string>();
  net.input_shape = manifest.at("input_shape").get<std::vector<int64_t>>();
  net.constrained = manifest.at("constrained").get<std::vector<int>>();
  for (const auto& lj : manifest.at("layers")) net.layers.push_back(layer_from_json(lj));

  net.params.assign(net.layers.size(), LayerParamsT<float>{});
  size_t off = 20 + mlen;
  for (size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    if (!l.has_weight()) continue;
    Tensor w({l.weight_rows(), l.weight_cols()});
    if (off + static_cast<size_t>(w.size()) * 4 > bytes.size())
      throw IoError("truncated parameter block in " + path);
    get_f32_block(bytes.data() + off, w);
    off += static_cast<size_t>(w.size()) * 4;
    net.params[i].weight = std::move(w);
    if (l.has_bias) {
      Tensor b({l.weight_rows()});
      if (off + static_cast<size_t>(b.size()) * 4 > bytes.size())
        throw IoError("truncated bias block in " + path);
      get_f32_block(bytes.data() + off, b);
      off += static_cast<size_t>(b.size()) * 4;
      net.params[i].bias = std::move(b);
    }
  }
  if (off != bytes.size()) throw IoError("trailing bytes in checkpoint " + path);
  validate(net);
  return net;
}

}  // namespace bort
