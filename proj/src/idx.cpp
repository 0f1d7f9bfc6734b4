#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <vector>

#include "symfs/dataset.hpp"
#include "symfs/error.hpp"

namespace symfs {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open IDX file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset, const std::filesystem::path& path) {
  if (buf.size() < offset + 4) throw FormatError("IDX header truncated in " + path.string());
  return static_cast<std::uint32_t>(buf[offset]) << 24 | static_cast<std::uint32_t>(buf[offset + 1]) << 16 |
         static_cast<std::uint32_t>(buf[offset + 2]) << 8 | static_cast<std::uint32_t>(buf[offset + 3]);
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, Split split) {
  const auto img = read_file(images);
  const auto lbl = read_file(labels);

  if (read_be32(img, 0, images) != kImageMagic) throw FormatError("bad IDX image magic in " + images.string());
  if (read_be32(lbl, 0, labels) != kLabelMagic) throw FormatError("bad IDX label magic in " + labels.string());

  const std::size_t count = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t label_count = read_be32(lbl, 4, labels);
  if (count != label_count)
    throw CountMismatch("IDX image count " + std::to_string(count) + " differs from label count " +
                        std::to_string(label_count));

  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + count * pixels) throw FormatError("IDX image data truncated in " + images.string());
  if (lbl.size() < 8 + count) throw FormatError("IDX label data truncated in " + labels.string());

  Dataset out{Matrix(count, pixels), std::vector<int>(count), 0, split};
  for (std::size_t k = 0; k < count * pixels; ++k) out.features.data[k] = static_cast<double>(img[16 + k]) / 255.0;
  int max_label = 0;
  for (std::size_t k = 0; k < count; ++k) {
    out.labels[k] = lbl[8 + k];
    max_label = std::max(max_label, out.labels[k]);
  }
  out.classes = count == 0 ? 0 : static_cast<std::size_t>(max_label) + 1;
  return out;
}

}  // namespace symfs
