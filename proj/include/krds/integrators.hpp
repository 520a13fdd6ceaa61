#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "krds/models.hpp"
#include "krds/noise.hpp"

namespace krds {

enum class Scheme {
    euler_maruyama,
    //! Heun drift with a derivative-free Milstein correction per noise column
    //! (strong order 1 for diagonal noise, order 2 in the drift).
    srk,
    //! Classical RK4 on the drift; only valid for zero-noise models.
    rk4,
};

std::string scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

//! Recorded spacing dt, with `substeps` internal steps of size dt/substeps.
struct StepConfig {
    double dt = 0.01;
    int substeps = 1;
    Scheme scheme = Scheme::srk;

    double h() const { return dt / substeps; }
    void validate() const;
};

struct Trajectory {
    std::vector<double> times;
    Mat states; // dim x len
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    int dim() const { return static_cast<int>(states.rows()); }
    int size() const { return static_cast<int>(states.cols()); }
    State state(int k) const { return states.col(k); }
};

struct Ensemble {
    std::vector<Trajectory> members;
    std::uint64_t seed = 0;
    std::uint64_t base_stream = 0;
};

//! Per-path integration state; the switching RDE also carries the active
//! parameter value so a path can be advanced in chunks.
struct PathCursor {
    State x;
    long step = 0;
    double omega = 0.0;
};

//! Advances single paths of any catalog model. Discrete maps take one map
//! application per recorded step and ignore dt.
class Propagator {
public:
    Propagator(ModelSpec model, StepConfig cfg);

    const ModelSpec& model() const { return model_; }
    const StepConfig& config() const { return cfg_; }

    //! Advances by n recorded steps; throws IntegrationDiverged with the
    //! global internal step index on NaN/inf or on leaving the domain.
    void advance(PathCursor& c, int n, RngStream& rng) const;

private:
    ModelSpec model_;
    StepConfig cfg_;
    long switch_every_ = 0;
};

Trajectory integrate(const ModelSpec& model, const State& x0, const StepConfig& cfg, int n_steps,
                     RngStream& stream);

Trajectory integrate_em(const ModelSpec& model, const State& x0, double dt, int n_steps,
                        RngStream& stream, int substeps = 1);
Trajectory integrate_srk(const ModelSpec& model, const State& x0, double dt, int n_steps,
                         RngStream& stream, int substeps = 1);
Trajectory integrate_rk4(const ModelSpec& model, const State& x0, double dt, int n_steps,
                         int substeps = 1);

//! Exact stepping with exp(A(w) dt); dt must divide switch_dt.
Trajectory integrate_switching_linear(double a1, double a2, double b, double p1, double switch_dt,
                                      const State& x0, double dt, int n_steps, RngStream& stream);

//! Final state after applying the scheme with the given increments
//! (noise_dim x n_steps, step size h). Used for strong-order studies.
State integrate_with_increments(const ModelSpec& model, const State& x0, double h, const Mat& dW,
                                Scheme scheme);

//! N paths from a common x0; member k uses stream base_stream + k.
Ensemble run_ensemble(const ModelSpec& model, const State& x0, const StepConfig& cfg, int n_steps,
                      int N, std::uint64_t seed, std::uint64_t base_stream);

} // namespace krds
