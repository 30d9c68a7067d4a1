#pragma once

#include <array>
#include <cstdint>

namespace mlmcjd {

/// What a stream's draws are used for. Each purpose owns an independent
/// sequence, so consuming more draws for one never shifts another.
enum class Purpose : std::uint8_t {
    BrownianIncrement,
    BridgeIntegral,
    MinimumUniform,
    JumpWaiting,
    JumpMark,
    ThinningUniform,
    CumulativeExponential,
};

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t level = 0;
    std::uint64_t path_index = 0;
    Purpose purpose = Purpose::BrownianIncrement;

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream. The k-th draw is a pure function of
/// (key, k), so streams can be rebuilt, copied and replayed anywhere.
class RngStream {
public:
    explicit RngStream(StreamKey key) : key_(key) {}

    const StreamKey& key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double normal();
    double exponential(double rate);
    double lognormal(double mean, double variance);

private:
    StreamKey key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> block_{};
};

/// Inverse of the standard normal CDF (Wichura AS241, about 1e-16 relative).
double inverse_normal_cdf(double p);
double normal_cdf(double x);

// Distribution transforms on explicit inputs; RngStream composes these.
double normal_from_uniform(double u);
double exponential_from_uniform(double u, double rate);
double lognormal_from_normal(double z, double mean, double variance);

inline constexpr double kUniformFloor = 0x1p-64;
inline constexpr double kUniformCeil = 1.0 - 0x1p-53;

}  // namespace mlmcjd
