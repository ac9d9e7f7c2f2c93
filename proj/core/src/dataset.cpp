#include "bort/dataset.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "bort/rng.hpp"

namespace bort {

uint64_t fnv1a64(const void* data, size_t len, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

bool is_gzip(const std::string& bytes) {
  return bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
         static_cast<unsigned char>(bytes[1]) == 0x8b;
}

std::string gunzip(const std::string& bytes, const std::string& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) throw IoError("zlib init failed");
  std::string out;
  out.resize(std::max<size_t>(bytes.size() * 4, 1 << 16));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(bytes.data()));
  zs.avail_in = static_cast<uInt>(bytes.size());
  size_t written = 0;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (written == out.size()) out.resize(out.size() * 2);
    zs.next_out = reinterpret_cast<Bytef*>(out.data() + written);
    zs.avail_out = static_cast<uInt>(out.size() - written);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IoError("corrupt gzip stream in " + path);
    }
    written = out.size() - zs.avail_out;
  }
  inflateEnd(&zs);
  out.resize(written);
  return out;
}

uint32_t read_be32(const std::string& b, size_t off, const std::string& path) {
  if (off + 4 > b.size()) throw IoError("truncated IDX header in " + path);
  return (static_cast<uint32_t>(static_cast<unsigned char>(b[off])) << 24) |
         (static_cast<uint32_t>(static_cast<unsigned char>(b[off + 1])) << 16) |
         (static_cast<uint32_t>(static_cast<unsigned char>(b[off + 2])) << 8) |
         static_cast<uint32_t>(static_cast<unsigned char>(b[off + 3]));
}

std::string load_maybe_gz(const std::string& path) {
  std::string bytes = read_file(path);
  if (is_gzip(bytes)) bytes = gunzip(bytes, path);
  return bytes;
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       const std::string& split) {
  const std::string img = load_maybe_gz(images_path);
  const std::string lbl = load_maybe_gz(labels_path);

  const uint32_t img_magic = read_be32(img, 0, images_path);
  if (img_magic != 0x00000803u)
    throw IoError("bad IDX image magic in " + images_path + " (got " +
                  std::to_string(img_magic) + ", want 2051)");
  const int64_t n = read_be32(img, 4, images_path);
  const int64_t h = read_be32(img, 8, images_path);
  const int64_t w = read_be32(img, 12, images_path);
  if (static_cast<size_t>(16 + n * h * w) != img.size())
    throw IoError("truncated IDX image payload in " + images_path);

  const uint32_t lbl_magic = read_be32(lbl, 0, labels_path);
  if (lbl_magic != 0x00000801u)
    throw IoError("bad IDX label magic in " + labels_path + " (got " +
                  std::to_string(lbl_magic) + ", want 2049)");
  const int64_t ln = read_be32(lbl, 4, labels_path);
  if (static_cast<size_t>(8 + ln) != lbl.size())
    throw IoError("truncated IDX label payload in " + labels_path);
  if (ln != n)
    throw IoError("image/label count mismatch: " + std::to_string(n) + " vs " +
                  std::to_string(ln));

  Dataset ds;
  ds.images = Tensor({n, 1, h, w});
  ds.labels = IndexTensor({n});
  const auto* px = reinterpret_cast<const unsigned char*>(img.data() + 16);
  float* dst = ds.images.data();
  const int64_t total = n * h * w;
  for (int64_t i = 0; i < total; ++i) dst[i] = static_cast<float>(px[i]) / 255.0f;
  const auto* pl = reinterpret_cast<const unsigned char*>(lbl.data() + 8);
  int64_t max_label = 0;
  for (int64_t i = 0; i < n; ++i) {
    ds.labels[i] = pl[i];
    max_label = std::max<int64_t>(max_label, pl[i]);
  }
  ds.num_classes = std::max<int64_t>(10, max_label + 1);
  ds.split = split;
  ds.source = images_path + ";" + labels_path;
  uint64_t cksum = fnv1a64(img.data() + 16, static_cast<size_t>(total));
  ds.checksum = fnv1a64(lbl.data() + 8, static_cast<size_t>(n), cksum);
  return ds;
}

Dataset load_cifar10(const std::vector<std::string>& batch_files, const std::string& split) {
  constexpr int64_t kRecord = 3073;  // label + 3x32x32
  std::vector<std::string> blobs;
  int64_t n = 0;
  for (const auto& path : batch_files) {
    std::string bytes = load_maybe_gz(path);
    if (bytes.empty() || bytes.size() % kRecord != 0)
      throw IoError("CIFAR-10 batch " + path + " is not a multiple of 3073 bytes");
    n += static_cast<int64_t>(bytes.size()) / kRecord;
    blobs.push_back(std::move(bytes));
  }
  if (n == 0) throw IoError("no CIFAR-10 records given");

  Dataset ds;
  ds.images = Tensor({n, 3, 32, 32});
  ds.labels = IndexTensor({n});
  int64_t rec = 0;
  uint64_t cksum = 1469598103934665603ULL;
  for (const auto& bytes : blobs) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const int64_t cnt = static_cast<int64_t>(bytes.size()) / kRecord;
    for (int64_t i = 0; i < cnt; ++i, ++rec) {
      const unsigned char* r = p + i * kRecord;
      if (r[0] > 9) throw IoError("CIFAR-10 label out of range");
      ds.labels[rec] = r[0];
      float* dst = ds.images.data() + rec * 3 * 32 * 32;
      for (int64_t j = 0; j < 3072; ++j) dst[j] = static_cast<float>(r[1 + j]) / 255.0f;
    }
    cksum = fnv1a64(bytes.data(), bytes.size(), cksum);
  }
  ds.num_classes = 10;
  ds.split = split;
  std::string src;
  for (const auto& p : batch_files) src += (src.empty() ? "" : ";") + p;
  ds.source = src;
  ds.checksum = cksum;
  return ds;
}

Dataset synthetic_blobs(int64_t n, int64_t classes, int64_t image_size, uint64_t seed) {
  if (classes < 2) throw ConfigError("synthetic_blobs: classes must be >= 2");
  if (n < 1 || image_size < 2) throw ConfigError("synthetic_blobs: degenerate size");
  Dataset ds;
  ds.images = Tensor({n, 1, image_size, image_size});
  ds.labels = IndexTensor({n});
  ds.num_classes = classes;
  ds.split = "synthetic";
  ds.source = "synthetic(n=" + std::to_string(n) + ",classes=" + std::to_string(classes) +
              ",size=" + std::to_string(image_size) + ",seed=" + std::to_string(seed) + ")";

  // Fixed per-class centers on a ring; per-sample amplitude jitter only.
  const double mid = (static_cast<double>(image_size) - 1.0) / 2.0;
  const double radius = 0.30 * static_cast<double>(image_size);
  const double sigma = static_cast<double>(image_size) / 6.0;
  auto rng = make_rng(mix_seed(seed, 0x5b0b5));
  for (int64_t i = 0; i < n; ++i) {
    const int64_t cls = i % classes;
    ds.labels[i] = cls;
    const double ang = 6.283185307179586 * static_cast<double>(cls) / static_cast<double>(classes);
    const double cy = mid + radius * std::sin(ang);
    const double cx = mid + radius * std::cos(ang);
    const double amp = uniform_range(rng, 0.6, 1.0);
    float* img = ds.images.data() + i * image_size * image_size;
    for (int64_t y = 0; y < image_size; ++y) {
      for (int64_t x = 0; x < image_size; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        double v = amp * std::exp(-d2 / (2.0 * sigma * sigma));
        img[y * image_size + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  ds.checksum = fnv1a64(ds.images.data(), static_cast<size_t>(ds.images.size()) * sizeof(float));
  ds.checksum = fnv1a64(ds.labels.data(), static_cast<size_t>(ds.labels.size()) * sizeof(int64_t),
                        ds.checksum);
  return ds;
}

std::vector<std::vector<int64_t>> batch_iter(int64_t n, int64_t batch_size, uint64_t seed,
                                             int64_t epoch) {
  if (batch_size < 1) throw ConfigError("batch_iter: batch_size must be >= 1");
  auto rng = std::mt19937_64(mix_seed(seed, static_cast<uint64_t>(epoch)));
  const std::vector<int64_t> perm = fisher_yates_perm(n, rng);
  std::vector<std::vector<int64_t>> batches;
  for (int64_t at = 0; at < n; at += batch_size) {
    const int64_t sz = std::min(batch_size, n - at);
    batches.emplace_back(perm.begin() + at, perm.begin() + at + sz);
  }
  return batches;
}

std::pair<Tensor, IndexTensor> gather_batch(const Dataset& ds, const std::vector<int64_t>& idx) {
  const auto& shape = ds.images.shape();
  const int64_t per = ds.images.size() / std::max<int64_t>(shape[0], 1);
  std::vector<int64_t> out_shape = shape;
  out_shape[0] = static_cast<int64_t>(idx.size());
  Tensor x(out_shape);
  IndexTensor y({static_cast<int64_t>(idx.size())});
  for (size_t i = 0; i < idx.size(); ++i) {
    const int64_t s = idx[i];
    if (s < 0 || s >= shape[0]) throw ShapeError("gather_batch: index out of range");
    std::memcpy(x.data() + static_cast<int64_t>(i) * per, ds.images.data() + s * per,
                static_cast<size_t>(per) * sizeof(float));
    y[static_cast<int64_t>(i)] = ds.labels[s];
  }
  return {std::move(x), std::move(y)};
}

}  // namespace bort
