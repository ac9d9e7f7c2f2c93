#pragma once

#include <string>

#include "bort/tensor.hpp"

namespace bort {

/// Min-max normalizes to 0..255 (round half up; constant images map to 0)
/// and writes binary PGM (P5) for [H,W] or PPM (P6) for [3,H,W].
void write_image_pgm(const Tensor& t, const std::string& path);

}  // namespace bort
