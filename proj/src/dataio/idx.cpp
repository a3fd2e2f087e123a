#include "puq/dataio/idx.hpp"

#include <algorithm>

#include "puq/dataio/binary_io.hpp"
#include "puq/error.hpp"

namespace puq {

Dataset decode_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
  ByteReader img(images, "idx images");
  if (img.u32_be() != kIdxImagesMagic) {
    throw FormatError("idx images: bad magic at byte offset 0 (expected 0x00000803)");
  }
  const std::uint32_t count = img.u32_be();
  const std::uint32_t rows = img.u32_be();
  const std::uint32_t cols = img.u32_be();
  if (rows == 0 || cols == 0) img.fail("zero image dimension");
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  if (img.remaining() != static_cast<std::size_t>(count) * pixels) {
    img.fail("expected " + std::to_string(static_cast<std::size_t>(count) * pixels) +
             " pixel bytes, found " + std::to_string(img.remaining()));
  }

  ByteReader lab(labels, "idx labels");
  if (lab.u32_be() != kIdxLabelsMagic) {
    throw FormatError("idx labels: bad magic at byte offset 0 (expected 0x00000801)");
  }
  const std::uint32_t label_count = lab.u32_be();
  if (label_count != count) {
    lab.fail("label count " + std::to_string(label_count) + " does not match image count " +
             std::to_string(count));
  }
  if (lab.remaining() != count) {
    lab.fail("expected " + std::to_string(count) + " label bytes, found " +
             std::to_string(lab.remaining()));
  }

  Dataset out;
  out.inputs = Matrix(count, pixels);
  for (double& v : out.inputs.data()) v = static_cast<double>(img.u8()) / 255.0;
  out.labels.reserve(count);
  std::size_t max_label = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    out.labels.push_back(lab.u8());
    max_label = std::max(max_label, out.labels.back());
  }
  out.num_classes = count == 0 ? 0 : max_label + 1;
  out.image_shape = ImageShape{rows, cols};
  out.name = "idx";
  return out;
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_file_bytes(images);
  const auto lab = read_file_bytes(labels);
  try {
    Dataset out = decode_idx(img, lab);
    out.name = images.filename().string();
    return out;
  } catch (const FormatError& e) {
    throw FormatError(images.string() + " / " + labels.string() + ": " + e.what());
  }
}

}  // namespace puq
