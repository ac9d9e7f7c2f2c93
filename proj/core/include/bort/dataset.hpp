#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bort/tensor.hpp"

namespace bort {

struct Dataset {
  Tensor images;       // [N,C,H,W], values in [0,1]
  IndexTensor labels;  // [N], in [0, num_classes)
  int64_t num_classes = 0;
  std::string split;
  std::string source;
  uint64_t checksum = 0;  // FNV-1a 64 over the parsed payload

  int64_t size() const { return labels.size(); }
};

uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 1469598103934665603ULL);

/// IDX reader (big-endian header, u8 payload, pixels scaled by 1/255).
/// Gzip-compressed files are auto-detected by the 0x1f 0x8b magic.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                       const std::string& split = "train");

/// CIFAR-10 binary batches (3073-byte records).
Dataset load_cifar10(const std::vector<std::string>& batch_files,
                     const std::string& split = "train");

/// Class-conditioned Gaussian bumps at fixed per-class positions, linearly
/// separable by construction; labels round-robin (sample i -> i % classes).
Dataset synthetic_blobs(int64_t n, int64_t classes, int64_t image_size, uint64_t seed);

/// Seeded Fisher-Yates permutation keyed by (seed, epoch), split into
/// batches; the last partial batch is kept.
std::vector<std::vector<int64_t>> batch_iter(int64_t n, int64_t batch_size, uint64_t seed,
                                             int64_t epoch);

std::pair<Tensor, IndexTensor> gather_batch(const Dataset& ds, const std::vector<int64_t>& idx);

}  // namespace bort
