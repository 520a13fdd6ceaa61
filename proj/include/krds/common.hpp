#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace krds {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// States and diffusion matrices are at most 2x2 in the catalog; the fixed
// upper bound keeps them off the heap inside integration loops.
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;
using DiffMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 2>;

enum class ErrorKind {
    invalid_argument,
    integration_diverged,
    degenerate_data,
    numerical,
    unsupported,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& w) : Error(ErrorKind::invalid_argument, w) {}
};

struct IntegrationDiverged : Error {
    IntegrationDiverged(const std::string& w, long step_index, long path_index = -1)
        : Error(ErrorKind::integration_diverged, w), step(step_index), path(path_index) {}
    long step;
    long path;
};

struct DegenerateData : Error {
    explicit DegenerateData(const std::string& w) : Error(ErrorKind::degenerate_data, w) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& w) : Error(ErrorKind::numerical, w) {}
};

struct Unsupported : Error {
    explicit Unsupported(const std::string& w) : Error(ErrorKind::unsupported, w) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

} // namespace krds
