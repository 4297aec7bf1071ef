#include "pnax/dataset.hpp"

#include <fstream>
#include <random>

#include "pnax/errors.hpp"

namespace pnax {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;  // idx3-ubyte
constexpr std::uint32_t kLabelsMagic = 0x00000801;  // idx1-ubyte

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    std::uint8_t b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw schema_error("truncated IDX file: " + path);
    return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
           (static_cast<std::uint32_t>(b[2]) << 8) | b[3];
}

void write_be32(std::ostream& out, std::uint32_t v) {
    std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                         static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path) {
    Dataset ds;

    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw input_error("cannot open image file: " + images_path.string());
    if (read_be32(img, images_path.string()) != kImagesMagic)
        throw schema_error("bad IDX image magic in " + images_path.string());
    ds.count = static_cast<int>(read_be32(img, images_path.string()));
    ds.rows = static_cast<int>(read_be32(img, images_path.string()));
    ds.cols = static_cast<int>(read_be32(img, images_path.string()));
    const std::size_t n = static_cast<std::size_t>(ds.count) * ds.rows * ds.cols;
    ds.images.resize(n);
    if (!img.read(reinterpret_cast<char*>(ds.images.data()), static_cast<std::streamsize>(n)))
        throw schema_error("truncated IDX image data in " + images_path.string());

    std::ifstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw input_error("cannot open label file: " + labels_path.string());
    if (read_be32(lbl, labels_path.string()) != kLabelsMagic)
        throw schema_error("bad IDX label magic in " + labels_path.string());
    const int label_count = static_cast<int>(read_be32(lbl, labels_path.string()));
    if (label_count != ds.count)
        throw schema_error("image/label count mismatch: " + std::to_string(ds.count) + " vs " +
                          std::to_string(label_count));
    ds.labels.resize(ds.count);
    if (!lbl.read(reinterpret_cast<char*>(ds.labels.data()), ds.count))
        throw schema_error("truncated IDX label data in " + labels_path.string());

    if (ds.count == 0) throw schema_error("empty dataset: " + images_path.string());
    return ds;
}

void save_idx_images(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write: " + path.string());
    write_be32(out, kImagesMagic);
    write_be32(out, static_cast<std::uint32_t>(ds.count));
    write_be32(out, static_cast<std::uint32_t>(ds.rows));
    write_be32(out, static_cast<std::uint32_t>(ds.cols));
    out.write(reinterpret_cast<const char*>(ds.images.data()),
              static_cast<std::streamsize>(ds.images.size()));
}

void save_idx_labels(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write: " + path.string());
    write_be32(out, kLabelsMagic);
    write_be32(out, static_cast<std::uint32_t>(ds.count));
    out.write(reinterpret_cast<const char*>(ds.labels.data()), ds.count);
}

std::vector<int> select_subset(int count, int subset_size, std::uint32_t seed) {
    std::vector<int> indices(count);
    for (int i = 0; i < count; ++i) indices[i] = i;
    // Hand-rolled Fisher-Yates: std::shuffle is not pinned across standard
    // library implementations, mt19937 output is.
    std::mt19937 rng(seed);
    for (int i = count - 1; i > 0; --i) {
        const int j = static_cast<int>(rng() % static_cast<std::uint32_t>(i + 1));
        std::swap(indices[i], indices[j]);
    }
    if (subset_size > 0 && subset_size < count) indices.resize(subset_size);
    return indices;
}

}  // namespace pnax
