#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "pnax/model.hpp"
#include "pnax/multiplier.hpp"

namespace pnax {

// Per-weight multiplier modes, keyed by (layer index, filter index, weight
// position). Unmapped positions default to ZE, so the map is sparse in the
// exact direction and order-independent by construction.
class ModeAssignment {
public:
    using Key = std::tuple<int, int, int>;

    ApproxMode get(int layer, int filter, int position) const {
        auto it = entries_.find({layer, filter, position});
        return it == entries_.end() ? ApproxMode::ze() : it->second;
    }

    void set(int layer, int filter, int position, ApproxMode mode) {
        if (mode.is_exact())
            entries_.erase({layer, filter, position});
        else
            entries_[{layer, filter, position}] = mode;
    }

    void clear_layer(int layer);

    std::size_t approx_count() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const std::map<Key, ApproxMode>& entries() const { return entries_; }

    // Canonical text form (sorted by layer, filter, position); equal
    // assignments serialize identically.
    std::string serialize(const std::string& model_name) const;
    static ModeAssignment deserialize(const std::string& text);

    void save(const std::filesystem::path& path, const std::string& model_name) const;
    static ModeAssignment load(const std::filesystem::path& path);

    // FNV-1a over the canonical serialization; stable across platforms.
    std::uint64_t stable_hash() const;

    friend bool operator==(const ModeAssignment& a, const ModeAssignment& b) {
        return a.entries_ == b.entries_;
    }

private:
    std::map<Key, ApproxMode> entries_;
};

// Dense, validated view of an assignment bound to a model: per approximable
// layer, one mode code and precomputed operand masks per (filter, position).
struct CompiledLayerModes {
    int layer_index = -1;
    int filters = 0;
    int positions = 0;
    std::vector<std::uint8_t> codes;     // filters * positions, ApproxMode codes
    std::vector<std::uint8_t> and_mask;  // same indexing
    std::vector<std::uint8_t> or_mask;

    ApproxMode mode_at(int filter, int position) const {
        return ApproxMode::from_code(codes[static_cast<std::size_t>(filter) * positions + position]);
    }
};

struct CompiledAssignment {
    std::vector<CompiledLayerModes> layers;  // aligned with approximable_layers(model)

    const CompiledLayerModes* find(int layer_index) const {
        for (const auto& l : layers)
            if (l.layer_index == layer_index) return &l;
        return nullptr;
    }
};

// Validates all indices against the model (input_error on out-of-range).
CompiledAssignment compile_assignment(const QuantModel& model, const ModeAssignment& assignment);

}  // namespace pnax
