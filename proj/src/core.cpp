#include "sentinel/core.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace sentinel {

bool FeatureVector::is_finite() const noexcept {
    for (const cplx& v : values) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
}

DiagCovariance DiagCovariance::constant(std::size_t k, double value) {
    return DiagCovariance(std::vector<double>(k, value));
}

bool DiagCovariance::is_valid() const noexcept {
    for (double v : variances) {
        if (!std::isfinite(v) || v < 0.0) return false;
    }
    return true;
}

// ==== HermitianMatrix ========================================================

namespace {

using EMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

EMatrix to_eigen(const HermitianMatrix& m) {
    const auto k = static_cast<Eigen::Index>(m.dim());
    EMatrix out(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            out(i, j) = m.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    return out;
}

}  // namespace

HermitianMatrix::HermitianMatrix(std::size_t k) : dim_(k), entries_(k * k, cplx{0.0, 0.0}) {
    if (k == 0 || k > kMaxDim) throw std::invalid_argument("HermitianMatrix: dimension out of range");
}

HermitianMatrix HermitianMatrix::identity(std::size_t k) {
    HermitianMatrix m(k);
    for (std::size_t i = 0; i < k; ++i) m.at(i, i) = cplx{1.0, 0.0};
    return m;
}

cplx& HermitianMatrix::at(std::size_t i, std::size_t j) {
    if (i >= dim_ || j >= dim_) throw std::out_of_range("HermitianMatrix::at");
    return entries_[i * dim_ + j];
}

const cplx& HermitianMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= dim_ || j >= dim_) throw std::out_of_range("HermitianMatrix::at");
    return entries_[i * dim_ + j];
}

bool HermitianMatrix::is_hermitian(double tol) const noexcept {
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = i; j < dim_; ++j) {
            const cplx d = entries_[i * dim_ + j] - std::conj(entries_[j * dim_ + i]);
            if (std::abs(d) > tol) return false;
        }
    }
    return true;
}

bool HermitianMatrix::is_positive_semidefinite(double tol) const {
    if (!is_hermitian()) throw std::invalid_argument("is_positive_semidefinite: matrix not Hermitian");
    Eigen::SelfAdjointEigenSolver<EMatrix> solver(to_eigen(*this), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    double trace_mag = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) trace_mag += std::abs(entries_[i * dim_ + i]);
    const double scale = std::max(1.0, trace_mag);
    return solver.eigenvalues().minCoeff() >= -tol * scale;
}

HermitianMatrix HermitianMatrix::regularized_inverse(double ridge) const {
    if (!is_hermitian()) throw std::invalid_argument("regularized_inverse: matrix not Hermitian");
    if (!(ridge >= 0.0) || !std::isfinite(ridge))
        throw std::invalid_argument("regularized_inverse: ridge must be finite and >= 0");
    EMatrix a = to_eigen(*this);
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, i) += ridge;
    Eigen::LDLT<EMatrix> ldlt(a);
    if (ldlt.info() != Eigen::Success)
        throw std::invalid_argument("regularized_inverse: decomposition failed");
    const EMatrix inv = ldlt.solve(EMatrix::Identity(a.rows(), a.cols()));
    if (!inv.allFinite() || (a * inv - EMatrix::Identity(a.rows(), a.cols())).norm() > 1e-6 * a.rows())
        throw std::invalid_argument("regularized_inverse: matrix singular to working precision");
    HermitianMatrix out(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j)
            out.at(i, j) = inv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

cplx HermitianMatrix::quadratic_form(const std::vector<cplx>& y, const std::vector<cplx>& x) const {
    if (y.size() != dim_ || x.size() != dim_)
        throw std::invalid_argument("quadratic_form: dimension mismatch");
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < dim_; ++i) {
        cplx row{0.0, 0.0};
        for (std::size_t j = 0; j < dim_; ++j) row += entries_[i * dim_ + j] * x[j];
        acc += std::conj(y[i]) * row;
    }
    return acc;
}

// ==== phase alignment ========================================================

cplx hermitian_dot(const std::vector<cplx>& y, const std::vector<cplx>& r) {
    if (y.size() != r.size()) throw std::invalid_argument("hermitian_dot: dimension mismatch");
    cplx acc{0.0, 0.0};
    for (std::size_t k = 0; k < y.size(); ++k) acc += std::conj(y[k]) * r[k];
    return acc;
}

std::vector<cplx> phase_align(const std::vector<cplx>& y, const std::vector<cplx>& r) {
    const cplx ip = hermitian_dot(y, r);
    const double mag = std::abs(ip);
    if (mag < kAlignEpsilon) return y;  // no usable phase reference
    const cplx factor = ip / mag;
    std::vector<cplx> out(y.size());
    for (std::size_t k = 0; k < y.size(); ++k) out[k] = factor * y[k];
    return out;
}

FeatureVector phase_align(const FeatureVector& y, const FeatureVector& r) {
    return FeatureVector{phase_align(y.values, r.values), y.t};
}

}  // namespace sentinel
