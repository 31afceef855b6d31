#include "dtisac/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace dtisac::numerics {

ComplexMatrix dft_matrix(std::size_t antennas)
{
    if (antennas == 0)
        throw std::invalid_argument("dft_matrix: antenna count must be >= 1");

    const auto m_count = static_cast<Eigen::Index>(antennas);
    const double size = static_cast<double>(antennas);
    const double scale = 1.0 / std::sqrt(size);
    ComplexMatrix a(m_count, m_count);
    for (Eigen::Index r = 0; r < m_count; ++r) {
        const double offset = static_cast<double>(r) - size / 2.0;
        for (Eigen::Index m = 0; m < m_count; ++m) {
            // Reduce the phase argument mod 1 before scaling to keep entries
            // accurate for large M.
            const double cycles = std::fmod(offset * static_cast<double>(m), size) / size;
            a(m, r) = scale * phasor(2.0 * kPi * cycles);
        }
    }
    return a;
}

ComplexMatrix pseudo_inverse(const ComplexMatrix& a, double tol, std::size_t* rank)
{
    if (a.size() == 0)
        throw std::invalid_argument("pseudo_inverse: empty matrix");
    if (!(tol > 0.0))
        throw std::invalid_argument("pseudo_inverse: tolerance must be positive");

    Eigen::BDCSVD<ComplexMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& sigma = svd.singularValues();
    const double cutoff = tol * (sigma.size() > 0 ? sigma(0) : 0.0);

    RealVector inv_sigma = RealVector::Zero(sigma.size());
    std::size_t kept = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        if (sigma(i) > cutoff && sigma(i) > 0.0) {
            inv_sigma(i) = 1.0 / sigma(i);
            ++kept;
        }
    }
    if (rank != nullptr)
        *rank = kept;
    return svd.matrixV() * inv_sigma.asDiagonal() * svd.matrixU().adjoint();
}

ComplexVector kron_identity_apply(const ComplexMatrix& a, std::size_t blocks,
                                  const ComplexVector& x)
{
    const auto p_count = static_cast<Eigen::Index>(blocks);
    if (x.size() != p_count * a.cols())
        throw std::invalid_argument("kron_identity_apply: length(x) != P * cols(A)");

    ComplexVector out(p_count * a.rows());
    for (Eigen::Index p = 0; p < p_count; ++p)
        out.segment(p * a.rows(), a.rows()) = a * x.segment(p * a.cols(), a.cols());
    return out;
}

ComplexVector least_squares(const ComplexMatrix& a, const ComplexVector& y, double tol)
{
    if (a.rows() != y.size())
        throw std::invalid_argument("least_squares: row count mismatch");
    return pseudo_inverse(a, tol) * y;
}

bool all_finite(const ComplexMatrix& a)
{
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag()))
                return false;
    return true;
}

}  // namespace dtisac::numerics
