#include "pnax/partition.hpp"

#include <algorithm>
#include <set>

#include "pnax/errors.hpp"

namespace pnax {

namespace {

struct Node {
    std::int64_t value;
    std::uint32_t seq;  // insertion order; derived nodes get fresh numbers
    std::vector<std::size_t> positive;
    std::vector<std::size_t> negative;
};

struct NodeOrder {
    // Largest value first; equal values in insertion order.
    bool operator()(const Node& a, const Node& b) const {
        if (a.value != b.value) return a.value > b.value;
        return a.seq < b.seq;
    }
};

}  // namespace

PartitionSplit ldm_partition_indices(const std::vector<std::int64_t>& values) {
    PartitionSplit split;
    if (values.empty()) return split;

    std::multiset<Node, NodeOrder> queue;
    std::uint32_t seq = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < 0) throw input_error("ldm_partition: negative value");
        queue.insert(Node{values[i], seq++, {i}, {}});
    }

    while (queue.size() > 1) {
        // first = the larger operand (earlier inserted on ties); it keeps its
        // polarity, the smaller one flips.
        Node first = std::move(queue.extract(queue.begin()).value());
        Node second = std::move(queue.extract(queue.begin()).value());
        Node merged;
        merged.value = first.value - second.value;
        merged.seq = seq++;
        merged.positive = std::move(first.positive);
        merged.negative = std::move(first.negative);
        merged.positive.insert(merged.positive.end(), second.negative.begin(),
                               second.negative.end());
        merged.negative.insert(merged.negative.end(), second.positive.begin(),
                               second.positive.end());
        queue.insert(std::move(merged));
    }

    const Node& root = *queue.begin();
    split.indices_a = root.positive;
    split.indices_b = root.negative;
    split.difference = root.value;  // sum(positive) - sum(negative) >= 0
    std::sort(split.indices_a.begin(), split.indices_a.end());
    std::sort(split.indices_b.begin(), split.indices_b.end());
    return split;
}

PartitionResult ldm_partition(const std::vector<std::int64_t>& values) {
    PartitionSplit split = ldm_partition_indices(values);
    PartitionResult result;
    result.difference = split.difference;
    result.set_a.reserve(split.indices_a.size());
    result.set_b.reserve(split.indices_b.size());
    for (std::size_t i : split.indices_a) result.set_a.push_back(values[i]);
    for (std::size_t i : split.indices_b) result.set_b.push_back(values[i]);
    std::sort(result.set_a.begin(), result.set_a.end());
    std::sort(result.set_b.begin(), result.set_b.end());
    return result;
}

}  // namespace pnax
