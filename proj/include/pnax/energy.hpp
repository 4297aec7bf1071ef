#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "pnax/assignment.hpp"
#include "pnax/model.hpp"
#include "pnax/multiplier.hpp"
#include "pnax/rational.hpp"

namespace pnax {

// Fraction of multiplier energy saved per mode, held as exact rationals so
// energy comparisons and the canonical solution ordering never depend on
// floating-point rounding.
class EnergyTable {
public:
    // Calibration for the 8-bit positive/negative multiplier (14nm synthesis):
    // PE 8.3 / 20.23 / 36.6 %, NE 5.5 / 16.17 / 31.8 % for z = 1..3, ZE 0.
    static EnergyTable defaults();

    // Override file: JSON with a "gains" object holding all six non-ZE modes
    // ("PE1".."PE3", "NE1".."NE3") as fractions in [0, 1).
    static EnergyTable load(const std::filesystem::path& path);

    Rat gain(ApproxMode mode) const { return gains_[mode.code()]; }
    void set_gain(ApproxMode mode, Rat g);

    // Invariants: ZE saves nothing, every gain in [0,1), and within each of
    // PE/NE the gain is non-decreasing in z. Throws config_error.
    void validate() const;

private:
    std::array<Rat, ApproxMode::kNumCodes> gains_{};
};

// How often each weight of an approximable layer multiplies per inference:
// once per output spatial position for conv, once for fc.
struct LayerMultCount {
    int layer_index = -1;
    int filters = 0;
    int positions = 0;
    std::int64_t per_weight = 0;
};

using MultCountProfile = std::vector<LayerMultCount>;

MultCountProfile mult_count_profile(const QuantModel& model);

// Energy reduction of an assignment relative to the all-exact design:
// sum_w count(w) * gain(mode(w)) / sum_w count(w), over every multiplying
// weight in the model. Unassigned positions are ZE and only add to the
// denominator.
Rat energy_of_assignment(const QuantModel& model, const CompiledAssignment& compiled,
                         const EnergyTable& table, const MultCountProfile& profile);

Rat energy_of_assignment(const QuantModel& model, const ModeAssignment& assignment,
                         const EnergyTable& table);

}  // namespace pnax
