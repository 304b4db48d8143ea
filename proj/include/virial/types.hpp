#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace virial {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Rank-3 array stored as a vector of matrices. The meaning of the leading
// index is documented at each use site (e.g. for a frame Jacobian, slice i
// is the derivative of the frame matrix along coordinate i).
using Tensor3 = std::vector<Mat>;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularFrame : Error {
    explicit SingularFrame(const std::string& msg) : Error(msg) {}
};
struct OutOfChart : Error {
    explicit OutOfChart(const std::string& msg) : Error(msg) {}
};
struct DegenerateLagrangian : Error {
    explicit DegenerateLagrangian(const std::string& msg) : Error(msg) {}
};
struct DegenerateSymplectic : Error {
    explicit DegenerateSymplectic(const std::string& msg) : Error(msg) {}
};
struct NotMechanicalType : Error {
    explicit NotMechanicalType(const std::string& msg) : Error(msg) {}
};
struct UnknownModel : Error {
    explicit UnknownModel(const std::string& msg) : Error(msg) {}
};
struct InvalidParams : Error {
    explicit InvalidParams(const std::string& msg) : Error(msg) {}
};
struct StepSizeUnderflow : Error {
    explicit StepSizeUnderflow(const std::string& msg) : Error(msg) {}
};
struct PeriodExceedsSpan : Error {
    explicit PeriodExceedsSpan(const std::string& msg) : Error(msg) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};
struct ValidationFailure : Error {
    explicit ValidationFailure(const std::string& msg) : Error(msg) {}
};

}  // namespace virial
