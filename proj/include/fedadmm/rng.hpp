#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace fedadmm {

// Philox4x64-10 counter-based generator. Streams are keyed by (seed, stream) and
// the counter's second word separates purposes within a stream, so client data
// never depends on how many other clients were drawn first.
class Philox {
public:
    static constexpr const char* name = "philox4x64-10";
    static constexpr int version = 1;

    using Block = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    Philox(std::uint64_t seed, std::uint64_t stream, std::uint64_t purpose = 0)
        : key_{seed, stream}, counter_{0, purpose, 0, 0} {}

    static Block block(Block counter, Key key);

    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    // Box-Muller.
    double normal();
    double student_t(int dof);

private:
    Key key_;
    Block counter_;
    Block buffer_{};
    int used_ = 4;
    std::optional<double> spare_normal_;
};

}  // namespace fedadmm
