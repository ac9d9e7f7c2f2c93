#include "bort/image_io.hpp"

#include <cmath>

#include "bort/checkpoint.hpp"

namespace bort {

void write_image_pgm(const Tensor& t, const std::string& path) {
  if (!t.all_finite()) throw NumericError("write_image_pgm: non-finite pixel values");
  int64_t channels, h, w;
  if (t.ndim() == 2) {
    channels = 1;
    h = t.dim(0);
    w = t.dim(1);
  } else if (t.ndim() == 3 && t.dim(0) == 3) {
    channels = 3;
    h = t.dim(1);
    w = t.dim(2);
  } else {
    throw ShapeError("write_image_pgm expects [H,W] or [3,H,W], got " + shape_str(t.shape()));
  }

  float mn = t[0], mx = t[0];
  for (int64_t i = 1; i < t.size(); ++i) {
    mn = std::min(mn, t[i]);
    mx = std::max(mx, t[i]);
  }
  const float range = mx - mn;

  std::string out = channels == 1 ? "P5\n" : "P6\n";
  out += std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + static_cast<size_t>(h * w * channels));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < channels; ++c) {
        const float v = channels == 1 ? t[y * w + x] : t[(c * h + y) * w + x];
        const float norm = range > 0.0f ? (v - mn) / range : 0.0f;
        out.push_back(static_cast<char>(
            static_cast<unsigned char>(std::floor(norm * 255.0f + 0.5f))));
      }
    }
  }
  atomic_write_file(path, out);
}

}  // namespace bort
