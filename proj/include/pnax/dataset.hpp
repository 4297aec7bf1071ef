#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace pnax {

// Labeled image set in IDX binary form (big-endian magic + dims, raw bytes).
struct Dataset {
    int count = 0;
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> images;  // count * rows * cols
    std::vector<std::uint8_t> labels;  // count

    const std::uint8_t* image(int i) const {
        return images.data() + static_cast<std::size_t>(i) * rows * cols;
    }
};

Dataset load_dataset(const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path);

void save_idx_images(const Dataset& ds, const std::filesystem::path& path);
void save_idx_labels(const Dataset& ds, const std::filesystem::path& path);

// Deterministic evaluation subset: indices [0, count) after a Fisher-Yates
// shuffle driven by mt19937(seed), truncated to subset_size (0 = all).
std::vector<int> select_subset(int count, int subset_size, std::uint32_t seed);

}  // namespace pnax
