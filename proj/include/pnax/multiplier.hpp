#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "pnax/errors.hpp"
#include "pnax/rational.hpp"

namespace pnax {

enum class ModeKind : std::uint8_t { ZE = 0, PE = 1, NE = 2 };

// One configuration of the three-mode multiplier: exact (ZE), or positive /
// negative error with approximation strength z in {1,2,3}.
class ApproxMode {
public:
    constexpr ApproxMode() = default;  // ZE

    static constexpr ApproxMode ze() { return ApproxMode(); }

    static ApproxMode pe(int z) { return ApproxMode(ModeKind::PE, checked_z(z)); }
    static ApproxMode ne(int z) { return ApproxMode(ModeKind::NE, checked_z(z)); }

    static ApproxMode make(ModeKind kind, int z) {
        if (kind == ModeKind::ZE) return ze();
        return kind == ModeKind::PE ? pe(z) : ne(z);
    }

    constexpr ModeKind kind() const { return kind_; }
    constexpr int z() const { return z_; }

    // Error sign: 0 for ZE, +1 for PE, -1 for NE.
    constexpr int sign() const {
        return kind_ == ModeKind::ZE ? 0 : (kind_ == ModeKind::PE ? +1 : -1);
    }

    constexpr bool is_exact() const { return kind_ == ModeKind::ZE; }

    // Low-bit residue mask 2^z - 1 (0 for ZE).
    constexpr std::uint8_t residue_mask() const {
        return static_cast<std::uint8_t>((1u << z_) - 1u);
    }

    // Operand transform: approximate multiply == w * ((a & and_mask) | or_mask).
    constexpr std::uint8_t and_mask() const {
        return kind_ == ModeKind::PE ? static_cast<std::uint8_t>(~residue_mask()) : 0xFFu;
    }
    constexpr std::uint8_t or_mask() const {
        return kind_ == ModeKind::NE ? residue_mask() : 0x00u;
    }

    // Dense 0..6 code: ZE=0, PE z=1..3 -> 1..3, NE z=1..3 -> 4..6.
    constexpr std::uint8_t code() const {
        if (kind_ == ModeKind::ZE) return 0;
        return static_cast<std::uint8_t>(kind_ == ModeKind::PE ? z_ : 3 + z_);
    }
    static ApproxMode from_code(std::uint8_t code) {
        if (code == 0) return ze();
        if (code <= 3) return pe(code);
        if (code <= 6) return ne(code - 3);
        throw config_error("invalid mode code " + std::to_string(code));
    }
    static constexpr int kNumCodes = 7;

    std::string str() const {
        switch (kind_) {
            case ModeKind::ZE: return "ZE";
            case ModeKind::PE: return "PE" + std::to_string(z_);
            default: return "NE" + std::to_string(z_);
        }
    }

    // Parses "ZE", "PE<z>", "NE<z>" (also accepts separated kind + z via make()).
    static ApproxMode parse(const std::string& s) {
        if (s == "ZE") return ze();
        if (s.size() == 3 && (s[0] == 'P' || s[0] == 'N') && s[1] == 'E' && s[2] >= '1' &&
            s[2] <= '3') {
            int z = s[2] - '0';
            return s[0] == 'P' ? pe(z) : ne(z);
        }
        throw config_error("invalid mode string '" + s + "'");
    }

    friend constexpr bool operator==(ApproxMode a, ApproxMode b) {
        return a.kind_ == b.kind_ && a.z_ == b.z_;
    }
    friend constexpr bool operator!=(ApproxMode a, ApproxMode b) { return !(a == b); }
    friend constexpr bool operator<(ApproxMode a, ApproxMode b) { return a.code() < b.code(); }

private:
    constexpr ApproxMode(ModeKind kind, int z) : kind_(kind), z_(static_cast<std::uint8_t>(z)) {}

    static int checked_z(int z) {
        if (z < 1 || z > 3)
            throw config_error("approximation strength z must be in {1,2,3}, got " +
                               std::to_string(z));
        return z;
    }

    ModeKind kind_ = ModeKind::ZE;
    std::uint8_t z_ = 0;
};

struct MultResult {
    std::uint32_t product;  // approximate product, <= 255*255
    std::int32_t error;     // exact - approximate
};

// Functional model of the partial-product perforation (PE) / forcing (NE)
// multiplier: the approximate product equals w * (a - a mod 2^z) in PE mode
// and w * (a + (2^z - 1 - a mod 2^z)) in NE mode.
inline MultResult approx_multiply(std::uint8_t w, std::uint8_t a, ApproxMode mode) {
    const std::uint32_t exact = static_cast<std::uint32_t>(w) * a;
    if (mode.is_exact()) return {exact, 0};
    const std::uint32_t pow2 = 1u << mode.z();
    const std::uint32_t r = a % pow2;
    std::uint32_t a_eff;
    if (mode.kind() == ModeKind::PE) {
        a_eff = a - r;
    } else {
        a_eff = a + (pow2 - 1 - r);
    }
    const std::uint32_t product = static_cast<std::uint32_t>(w) * a_eff;
    return {product, static_cast<std::int32_t>(exact) - static_cast<std::int32_t>(product)};
}

// Tight per-operation error bounds over all activations a in [0,255].
inline std::pair<std::int32_t, std::int32_t> mult_error_bounds(std::uint8_t w, ApproxMode mode) {
    if (mode.is_exact()) return {0, 0};
    const std::int32_t span = static_cast<std::int32_t>(w) * mode.residue_mask();
    if (mode.kind() == ModeKind::PE) return {0, span};
    return {-span, 0};
}

struct MomentStats {
    Rat mean;
    Rat variance;
};

// Error moments for activations uniform on [0,255] (residue r = a mod 2^z is
// then uniform on [0, 2^z-1]):
//   mean     = s * (2^z - 1)/2 * w
//   variance = (2^{2z} - 1)/12 * w^2
inline MomentStats mode_error_stats(std::uint8_t w, ApproxMode mode) {
    if (mode.is_exact()) return {Rat(0), Rat(0)};
    const std::int64_t wz = w;
    const std::int64_t m = mode.residue_mask();
    Rat mean = Rat(mode.sign() * m * wz, 2);
    Rat variance = Rat(((m + 1) * (m + 1) - 1) * wz * wz, 12);
    return {mean, variance};
}

}  // namespace pnax
