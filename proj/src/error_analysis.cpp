#include "pnax/error_analysis.hpp"

#include "pnax/errors.hpp"

namespace pnax {

Rat conv_error_mean(const WeightedModeList& wml) {
    // Common denominator 2; accumulate numerators in int64.
    std::int64_t num = 0;
    for (const auto& [w, mode] : wml) {
        num += static_cast<std::int64_t>(mode.sign()) * mode.residue_mask() * w;
    }
    return Rat(num, 2);
}

Rat conv_error_variance(const WeightedModeList& wml) {
    // Common denominator 12.
    std::int64_t num = 0;
    for (const auto& [w, mode] : wml) {
        const std::int64_t m = mode.residue_mask();
        num += ((m + 1) * (m + 1) - 1) * w * w;
    }
    return Rat(num, 12);
}

namespace {

Rat reduce128(__int128 num, __int128 den) {
    __int128 a = num < 0 ? -num : num;
    __int128 b = den;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    if (a == 0) return Rat(0);
    num /= a;
    den /= a;
    if (num > INT64_MAX || num < INT64_MIN || den > INT64_MAX)
        throw input_error("empirical moment exceeds 64-bit rational range");
    return Rat(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

}  // namespace

EmpiricalMoments empirical_conv_error(const WeightedModeList& wml,
                                      std::span<const std::vector<std::uint8_t>> activations) {
    if (activations.empty()) throw input_error("empirical_conv_error: no activation vectors");
    // Per-vector totals fit easily in int64 (|eps_i| <= 255*7); sums of
    // squares are carried in 128 bits so N*S2 - S1^2 stays exact.
    std::int64_t s1 = 0;
    __int128 s2 = 0;
    for (const auto& vec : activations) {
        if (vec.size() != wml.size())
            throw input_error("empirical_conv_error: activation vector length " +
                              std::to_string(vec.size()) + " != list size " +
                              std::to_string(wml.size()));
        std::int64_t total = 0;
        for (std::size_t i = 0; i < wml.size(); ++i) {
            total += approx_multiply(wml[i].weight, vec[i], wml[i].mode).error;
        }
        s1 += total;
        s2 += static_cast<__int128>(total) * total;
    }
    const auto n = static_cast<std::int64_t>(activations.size());
    Rat mean = reduce128(s1, n);
    // population variance: S2/N - (S1/N)^2
    __int128 var_num = static_cast<__int128>(n) * s2 - static_cast<__int128>(s1) * s1;
    Rat variance = reduce128(var_num, static_cast<__int128>(n) * n);
    return {mean, variance};
}

}  // namespace pnax
