#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qsb {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using CountMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

}  // namespace qsb
