#include "krds/noise.hpp"

#include <cmath>
#include <numbers>

namespace krds {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

} // namespace

std::array<std::uint32_t, 4> RngStream::philox(std::array<std::uint32_t, 4> ctr,
                                                std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

void RngStream::refill() {
    std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
        static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
    std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                        static_cast<std::uint32_t>(seed_ >> 32)};
    buf_ = philox(ctr, key);
    ++block_;
    pos_ = 0;
}

std::uint32_t RngStream::next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
}

std::uint64_t RngStream::next_u64() {
    std::uint64_t hi = next_u32();
    std::uint64_t lo = next_u32();
    return (hi << 32) | lo;
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double rad = std::sqrt(-2.0 * std::log(u1));
    double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
}

WienerIncrements gaussian_increments(RngStream& stream, int r_dims, int n_steps, double dt) {
    require(dt > 0.0, "gaussian_increments: dt must be positive");
    require(r_dims >= 1, "gaussian_increments: r_dims must be >= 1");
    require(n_steps >= 1, "gaussian_increments: n_steps must be >= 1");
    WienerIncrements w;
    w.dt = dt;
    w.increments.resize(r_dims, n_steps);
    const double s = std::sqrt(dt);
    for (int k = 0; k < n_steps; ++k)
        for (int r = 0; r < r_dims; ++r) w.increments(r, k) = s * stream.normal();
    return w;
}

void DiscreteDistribution::validate() const {
    require(!values.empty(), "discrete distribution: no values");
    require(values.size() == probs.size(), "discrete distribution: values/probs size mismatch");
    double total = 0.0;
    for (double p : probs) {
        require(p >= 0.0, "discrete distribution: negative probability");
        total += p;
    }
    require(std::abs(total - 1.0) <= 1e-12, "discrete distribution: probabilities must sum to 1");
}

double DiscreteDistribution::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
    return m;
}

double DiscreteDistribution::sample(double u) const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        acc += probs[i];
        if (u < acc) return values[i];
    }
    return values.back();
}

DiscreteDistribution two_point(double v1, double v2, double p1) {
    DiscreteDistribution d{{v1, v2}, {p1, 1.0 - p1}};
    d.validate();
    return d;
}

std::vector<double> discrete_iid(RngStream& stream, const DiscreteDistribution& dist, int n) {
    dist.validate();
    require(n >= 0, "discrete_iid: negative count");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = dist.sample(stream.uniform());
    return out;
}

std::vector<double> uniform_iid(RngStream& stream, double lo, double hi, int n) {
    require(hi >= lo, "uniform_iid: empty interval");
    require(n >= 0, "uniform_iid: negative count");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = lo + (hi - lo) * stream.uniform();
    return out;
}

double SwitchingSignal::value_at(double t) const {
    require(!values.empty() && switch_dt > 0.0, "switching signal: empty");
    require(t >= 0.0, "switching signal: negative time");
    long idx = t <= 0.0 ? 0 : static_cast<long>(std::ceil(t / switch_dt - 1e-12)) - 1;
    if (idx < 0) idx = 0;
    require(idx < static_cast<long>(values.size()), "switching signal: time beyond horizon");
    return values[static_cast<std::size_t>(idx)];
}

SwitchingSignal make_switching_signal(RngStream& stream, const DiscreteDistribution& dist,
                                      double switch_dt, int n_intervals) {
    require(switch_dt > 0.0, "switching signal: switch_dt must be positive");
    SwitchingSignal s;
    s.switch_dt = switch_dt;
    s.distribution = dist;
    s.values = discrete_iid(stream, dist, n_intervals);
    return s;
}

} // namespace krds
