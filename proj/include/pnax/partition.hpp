#pragma once

#include <cstdint>
#include <vector>

namespace pnax {

struct PartitionResult {
    std::vector<std::int64_t> set_a;  // larger-sum side (ascending order)
    std::vector<std::int64_t> set_b;
    std::int64_t difference = 0;  // |sum(set_a) - sum(set_b)|, == sum_a - sum_b here
};

// Index form of the same split: positions into the input sequence.
struct PartitionSplit {
    std::vector<std::size_t> indices_a;
    std::vector<std::size_t> indices_b;
    std::int64_t difference = 0;
};

// Karmarkar-Karp largest differencing: repeatedly replace the two largest
// values with their difference, tracking the implied two-coloring. Ties are
// broken by earliest insertion order (input order; derived nodes are inserted
// after all originals), which makes the partition deterministic. set_a /
// indices_a is always the side with the larger (or equal) sum.
PartitionSplit ldm_partition_indices(const std::vector<std::int64_t>& values);

PartitionResult ldm_partition(const std::vector<std::int64_t>& values);

}  // namespace pnax
