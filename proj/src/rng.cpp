#include "rbmlab/rng.hpp"

#include <cmath>

namespace rbm {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

} // namespace

std::array<std::uint32_t, 4> philox4x32_10(const std::array<std::uint32_t, 4>& counter,
                                           const std::array<std::uint32_t, 2>& key) {
    std::array<std::uint32_t, 4> c = counter;
    std::array<std::uint32_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mul_hi_lo(kPhiloxM0, c[0], hi0, lo0);
        mul_hi_lo(kPhiloxM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kPhiloxW0;
        k[1] += kPhiloxW1;
    }
    return c;
}

RngStream::RngStream(std::uint64_t seed, StreamDomain domain, std::uint32_t replica,
                     std::uint32_t entity, std::uint32_t step)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      base_counter_{0, step, entity,
                    (static_cast<std::uint32_t>(domain) << 24) | (replica & 0x00FFFFFFu)} {}

void RngStream::refill() {
    std::array<std::uint32_t, 4> counter = base_counter_;
    counter[0] = block_index_++;
    buffer_ = philox4x32_10(counter, key_);
    buffer_pos_ = 0;
}

RngStream RngStream::split(std::uint32_t lane) const {
    RngStream child = *this;
    child.base_counter_[2] ^= 0x80000000u | (lane << 20);
    child.block_index_ = 0;
    child.buffer_pos_ = 4;
    child.has_spare_normal_ = false;
    return child;
}

std::uint32_t RngStream::next_u32() {
    if (buffer_pos_ >= 4) refill();
    return buffer_[buffer_pos_++];
}

std::uint64_t RngStream::next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint32_t RngStream::bounded(std::uint32_t bound) {
    // Lemire's multiply-shift with rejection; exactly uniform on [0, bound).
    std::uint64_t m = static_cast<std::uint64_t>(next_u32()) * bound;
    auto lo = static_cast<std::uint32_t>(m);
    if (lo < bound) {
        const std::uint32_t threshold = (0u - bound) % bound;
        while (lo < threshold) {
            m = static_cast<std::uint64_t>(next_u32()) * bound;
            lo = static_cast<std::uint32_t>(m);
        }
    }
    return static_cast<std::uint32_t>(m >> 32);
}

double RngStream::normal() {
    if (has_spare_normal_) {
        has_spare_normal_ = false;
        return spare_normal_;
    }
    // Box-Muller; u1 in (0,1] so the log is always finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_normal_ = true;
    return radius * std::cos(angle);
}

void RngStream::fill_normal(std::span<double> out) {
    for (double& value : out) value = normal();
}

std::vector<double> gaussian_increment(RngStream& stream, int dim) {
    std::vector<double> out(static_cast<std::size_t>(dim));
    stream.fill_normal(out);
    return out;
}

RngStream noise_stream(std::uint64_t seed, std::uint32_t replica, std::uint32_t particle,
                       std::uint32_t step, StreamDomain domain) {
    return RngStream(seed, domain, replica, particle, step);
}

RngStream partition_stream(std::uint64_t seed, std::uint32_t replica, std::uint32_t step) {
    return RngStream(seed, StreamDomain::shuffle, replica, 0, step);
}

RngStream init_stream(std::uint64_t seed, std::uint32_t replica, std::uint32_t particle) {
    return RngStream(seed, StreamDomain::init, replica, particle, 0);
}

} // namespace rbm
