#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "oni/errors.hpp"
#include "oni/nn/dataset.hpp"

namespace oni::nn {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::string& path) {
  if (bytes.size() < offset + 4) {
    throw Error(ErrorCode::TruncatedFile, path + " ends inside its header");
  }
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void put_be32(std::ofstream& out, std::uint32_t value) {
  const char bytes[4] = {char(value >> 24), char(value >> 16), char(value >> 8), char(value)};
  out.write(bytes, 4);
}

void check_magic(std::uint32_t magic, std::uint32_t expected, const std::string& path) {
  if (magic != expected) {
    throw Error(ErrorCode::BadMagic, path + ": magic " + std::to_string(magic) + ", expected " +
                                         std::to_string(expected));
  }
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto images = read_all(images_path);
  const auto labels = read_all(labels_path);

  check_magic(read_be32(images, 0, images_path), kImagesMagic, images_path);
  const std::uint32_t count = read_be32(images, 4, images_path);
  const std::uint32_t rows = read_be32(images, 8, images_path);
  const std::uint32_t cols = read_be32(images, 12, images_path);
  const std::size_t pixels = std::size_t(rows) * cols;
  if (images.size() < 16 + std::size_t(count) * pixels) {
    throw Error(ErrorCode::TruncatedFile, images_path + " holds fewer pixels than its header");
  }

  check_magic(read_be32(labels, 0, labels_path), kLabelsMagic, labels_path);
  const std::uint32_t label_count = read_be32(labels, 4, labels_path);
  if (labels.size() < 8 + std::size_t(label_count)) {
    throw Error(ErrorCode::TruncatedFile, labels_path + " holds fewer labels than its header");
  }
  if (label_count != count) {
    throw Error(ErrorCode::CountMismatch, std::to_string(count) + " images but " +
                                              std::to_string(label_count) + " labels");
  }

  Dataset out;
  out.features.resize(count, Eigen::Index(pixels));
  out.labels.resize(count);
  int max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      out.features(Eigen::Index(i), Eigen::Index(p)) = images[16 + i * pixels + p] / 255.0;
    }
    out.labels[i] = labels[8 + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.classes = max_label + 1;
  return out;
}

void write_idx_images(const std::string& path, const std::vector<std::uint8_t>& pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols) {
  if (pixels.size() != std::size_t(count) * rows * cols) {
    throw Error(ErrorCode::CountMismatch, "pixel buffer does not match count*rows*cols");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  put_be32(out, kImagesMagic);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.write(reinterpret_cast<const char*>(pixels.data()), std::streamsize(pixels.size()));
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  put_be32(out, kLabelsMagic);
  put_be32(out, std::uint32_t(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), std::streamsize(labels.size()));
}

}  // namespace oni::nn
