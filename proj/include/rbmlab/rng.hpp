#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace rbm {

// Philox4x32-10 block cipher (Salmon et al., SC 2011). Counter-based: the
// output block is a pure function of (counter, key), so streams can be
// addressed randomly and are reproducible under any thread schedule.
std::array<std::uint32_t, 4> philox4x32_10(const std::array<std::uint32_t, 4>& counter,
                                           const std::array<std::uint32_t, 2>& key);

// Key-space partition. Noise streams feed the Wiener increments of both
// integrators (common random numbers); the shuffle stream drives batch
// partitions and is disjoint from every noise stream by construction.
enum class StreamDomain : std::uint32_t {
    noise = 0,       // Brownian increments, shared by full EM and RBM (coupled mode)
    shuffle = 1,     // batch partition sampling
    init = 2,        // initial condition rho_0
    direction = 3,   // sliced-W1 projection directions
    probe = 4,       // assumption-checker sampling
    law_sample = 5,  // draws from reference laws
    noise_full = 6,  // decoupled-mode noise, full EM
    noise_rbm = 7,   // decoupled-mode noise, RBM
};

/// A deterministic random stream addressed by (seed, domain, replica, entity,
/// step). Two streams with the same address yield the same sequence; streams
/// with different addresses are statistically independent. Value semantics,
/// no shared state.
class RngStream {
public:
    RngStream(std::uint64_t seed, StreamDomain domain, std::uint32_t replica,
              std::uint32_t entity, std::uint32_t step);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Derives an independent stream from this one's address. Splits with
    /// distinct lanes are mutually independent and independent of the parent.
    /// Occupies the top bits of the entity word, so lane < 2048 and particle
    /// indices below 2^20 never collide with a split stream.
    RngStream split(std::uint32_t lane) const;

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform();

    /// Unbiased uniform integer in [0, bound). bound >= 1.
    std::uint32_t bounded(std::uint32_t bound);

    /// One standard normal draw (Box-Muller; pairs cached).
    double normal();

    void fill_normal(std::span<double> out);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> base_counter_;
    std::uint32_t block_index_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffer_pos_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_normal_ = false;
};

/// dim i.i.d. N(0,1) samples from the stream.
std::vector<double> gaussian_increment(RngStream& stream, int dim);

RngStream noise_stream(std::uint64_t seed, std::uint32_t replica, std::uint32_t particle,
                       std::uint32_t step, StreamDomain domain = StreamDomain::noise);
RngStream partition_stream(std::uint64_t seed, std::uint32_t replica, std::uint32_t step);
RngStream init_stream(std::uint64_t seed, std::uint32_t replica, std::uint32_t particle);

} // namespace rbm
