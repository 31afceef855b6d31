#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace dtisac {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kI{0.0, 1.0};

}  // namespace dtisac

namespace dtisac::numerics {

/// Unit-modulus phasor exp(i * phase).
inline Complex phasor(double phase) { return std::polar(1.0, phase); }

/// M x M beamspace dictionary. Column r is the grid steering vector
/// (1/sqrt(M)) * exp(i 2 pi (r - M/2) m / M), m = 0..M-1.
/// Throws std::invalid_argument for M == 0.
ComplexMatrix dft_matrix(std::size_t antennas);

/// Moore-Penrose pseudo-inverse. Singular values below tol * sigma_max are
/// treated as zero; the retained count is written to `rank` when given.
ComplexMatrix pseudo_inverse(const ComplexMatrix& a, double tol = 1e-10,
                             std::size_t* rank = nullptr);

/// Computes (I_P kron A) x without materializing the Kronecker product.
ComplexVector kron_identity_apply(const ComplexMatrix& a, std::size_t blocks,
                                  const ComplexVector& x);

/// Least-squares coefficients of y on the columns of a, via pseudo_inverse.
ComplexVector least_squares(const ComplexMatrix& a, const ComplexVector& y,
                            double tol = 1e-10);

/// True when every entry is finite.
bool all_finite(const ComplexMatrix& a);

}  // namespace dtisac::numerics
