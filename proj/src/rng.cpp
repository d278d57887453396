#include "replisim/rng.hpp"

namespace replisim {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint32_t stream_id, Purpose purpose)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), stream_id,
                      static_cast<std::uint32_t>(purpose), 0x5eedu};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint32_t stream_id, Purpose purpose)
    : seed_(seed), stream_id_(stream_id), purpose_(purpose),
      engine_(make_engine(seed, stream_id, purpose))
{
}

double RngStream::uniform()
{
    ++counter_;
    // 53 random bits, shifted half a step off zero so both ends stay open.
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace replisim
