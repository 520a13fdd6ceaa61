#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "krds/dmd.hpp"
#include "krds/integrators.hpp"
#include "krds/observables.hpp"

namespace krds {

//! How Monte Carlo paths launched from different points relate.
//  common: path n uses the same noise realization for every point.
//  independent: every (point, path) pair has its own stream.
enum class NoiseSharing { common, independent };

enum class HankelMode {
    //! Entry (i, k): mean over averaging_N fresh paths of length k launched
    //! from state i of one pilot path.
    pilot_continuation,
    //! Entry (i, k): mean over averaging_N paths from x0 of f at step i + k.
    //! averaging_N = 1 is the single-realization Hankel matrix.
    averaged_trajectory,
};

std::string sharing_name(NoiseSharing s);
NoiseSharing sharing_from_name(const std::string& s);
std::string hankel_mode_name(HankelMode m);
HankelMode hankel_mode_from_name(const std::string& s);

struct ExpectationEstimate {
    CMat values;
    int n_samples = 0;
    Mat standard_error; // sample std / sqrt(N), per entry
};

struct HankelSpec {
    int n_rows = 0;
    int m_cols = 0;
    ObservableSet observable;
    int averaging_N = 1;
    HankelMode mode = HankelMode::averaged_trajectory;
    NoiseSharing sharing = NoiseSharing::common;

    void validate() const;
    //! False when n_rows < m_cols (allowed, but flagged in reports).
    bool recommended_shape() const { return n_rows >= m_cols; }
};

//! m points on a uniform grid over [lo, hi] (1-d) or an sqrt(m) x sqrt(m) grid over a box (2-d).
std::vector<State> initial_points_grid(const std::vector<double>& lo, const std::vector<double>& hi,
                                       int m);
std::vector<State> initial_points_random(const std::vector<double>& lo,
                                         const std::vector<double>& hi, int m, RngStream& stream);

//! E[f(phi(k dt, w) x0)] for k = 0..n_times-1 over N paths (path n: base_stream + n).
ExpectationEstimate estimate_time_expectation(const ModelSpec& model, const State& x0,
                                              const ObservableSet& obs, int n_times,
                                              const StepConfig& cfg, int N, std::uint64_t seed,
                                              std::uint64_t base_stream);

//! X column j = f(x_j); Y column j = mean over N paths of f(phi(k dt, w) x_j).
SnapshotMatrices assemble_ensemble_pairs(const ModelSpec& model, const std::vector<State>& points,
                                         const ObservableSet& obs, int k, const StepConfig& cfg,
                                         int N, std::uint64_t seed, std::uint64_t base_stream,
                                         NoiseSharing sharing = NoiseSharing::common);

//! Same as assemble_ensemble_pairs for several lags from one set of paths.
std::vector<SnapshotMatrices> assemble_ensemble_pairs_lags(
    const ModelSpec& model, const std::vector<State>& points, const ObservableSet& obs,
    const std::vector<int>& lags, const StepConfig& cfg, int N, std::uint64_t seed,
    std::uint64_t base_stream, NoiseSharing sharing = NoiseSharing::common);

//! Columns 0..m of E[f(phi(k dt, w) x0)]; X = first m, Y = last m.
SnapshotMatrices assemble_time_delayed(const ModelSpec& model, const State& x0,
                                       const ObservableSet& obs, int m, const StepConfig& cfg,
                                       int N, std::uint64_t seed, std::uint64_t base_stream);

//! Snapshot pairs along one path of a linear map with each pair rescaled by
//! the norm of its first state. Equivalent to the column scaling in dmd_rrr,
//! but avoids overflow of the raw states.
SnapshotMatrices assemble_renormalized_pairs(const ModelSpec& model, const State& x0, int m,
                                             const StepConfig& cfg, RngStream& stream);

//! n_rows x (m_cols + 1) Hankel matrix H; X = first m_cols columns, Y = last m_cols.
SnapshotMatrices assemble_stochastic_hankel(const ModelSpec& model, const State& x0,
                                            const HankelSpec& spec, const StepConfig& cfg,
                                            std::uint64_t seed, std::uint64_t base_stream);

//! H(i, k) = series(i + k) for i < n_rows, k < n_cols.
CMat hankel_from_series(const CVec& series, int n_rows, int n_cols);

} // namespace krds
