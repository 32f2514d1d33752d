#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stochmat {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Vec-dimension cap for every dense Kronecker-sized reference computation.
inline constexpr Index kSizeGuard = 4096;

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class ReducibleChain : public Error {
public:
    using Error::Error;
};

class SizeGuard : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

/// Induced infinity norm (max absolute row sum). Zero for empty matrices.
template <typename Derived>
double norm_inf(const Eigen::MatrixBase<Derived>& x)
{
    if (x.size() == 0) return 0.0;
    return x.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace stochmat
