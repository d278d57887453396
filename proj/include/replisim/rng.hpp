#pragma once

#include <cstdint>
#include <random>

namespace replisim {

enum class Purpose : std::uint32_t {
    Service = 1,
    Overhead = 2,
    Arrival = 3,
    Size = 4,
    Due = 5,
    Group = 6,
    Policy = 7,
    Clock = 8,
    ClockChoice = 9,
    Replica = 10,
};

/// Reproducible uniform stream keyed by (seed, stream id, purpose).
///
/// Draw j of a stream depends only on the key and j, so two runs that
/// consume the same stream in the same order see identical numbers.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint32_t stream_id, Purpose purpose);

    /// Uniform on the open interval (0, 1). Advances the counter by one.
    double uniform();

    std::uint64_t counter() const noexcept { return counter_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint32_t stream_id() const noexcept { return stream_id_; }
    Purpose purpose() const noexcept { return purpose_; }

private:
    std::uint64_t seed_;
    std::uint32_t stream_id_;
    Purpose purpose_;
    std::uint64_t counter_ = 0;
    std::mt19937_64 engine_;
};

}  // namespace replisim
