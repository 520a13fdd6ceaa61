#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "krds/common.hpp"

namespace krds {

//! Philox4x32-10 counter-based generator.
//
// The key is the 64-bit seed, the upper half of the counter is the 64-bit
// stream id and the lower half counts blocks. Two streams never share a
// counter value, so streams can be created in any order on any thread.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    //! Uniform on [0, 1) with 53 random bits.
    double uniform();
    //! Uniform on (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }
    //! Standard normal via Box-Muller (both variates are used).
    double normal();

    static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key);

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct WienerIncrements {
    double dt = 0.0;
    Mat increments; // r_dims x n_steps, entries ~ N(0, dt)
};

WienerIncrements gaussian_increments(RngStream& stream, int r_dims, int n_steps, double dt);

struct DiscreteDistribution {
    std::vector<double> values;
    std::vector<double> probs;

    void validate() const;
    double mean() const;
    //! Inverse-transform draw from one uniform.
    double sample(double u) const;
};

DiscreteDistribution two_point(double v1, double v2, double p1);

std::vector<double> discrete_iid(RngStream& stream, const DiscreteDistribution& dist, int n);
std::vector<double> uniform_iid(RngStream& stream, double lo, double hi, int n);

struct SwitchingSignal {
    std::vector<double> values;
    double switch_dt = 0.0;
    DiscreteDistribution distribution;

    //! Value on (i*switch_dt, (i+1)*switch_dt]; t = 0 maps to the first interval.
    double value_at(double t) const;
};

SwitchingSignal make_switching_signal(RngStream& stream, const DiscreteDistribution& dist,
                                      double switch_dt, int n_intervals);

} // namespace krds
