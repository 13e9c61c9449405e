#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>

#include "tfa/errors.hpp"

namespace tfa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& m) {
    return m.cwiseMax(0.0);
}

inline void require_shape(const Matrix& m, Index rows, Index cols, const std::string& what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw StructuralError(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
                              ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

inline void require_size(const Vector& v, Index size, const std::string& what) {
    if (v.size() != size) {
        throw StructuralError(what + ": expected length " + std::to_string(size) + ", got " +
                              std::to_string(v.size()));
    }
}

// Copies `src` into the top-left corner of a zero matrix of the requested size.
inline Matrix pad_to(const Matrix& src, Index rows, Index cols) {
    Matrix out = Matrix::Zero(rows, cols);
    out.topLeftCorner(src.rows(), src.cols()) = src;
    return out;
}

inline Vector pad_to(const Vector& src, Index size) {
    Vector out = Vector::Zero(size);
    out.head(src.size()) = src;
    return out;
}

inline Matrix block_diag(const Matrix& a, const Matrix& b) {
    Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

inline Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.size() == 0) return b;
    if (b.size() == 0) return a;
    if (a.cols() != b.cols()) throw StructuralError("vstack: column mismatch");
    Matrix out(a.rows() + b.rows(), a.cols());
    out << a, b;
    return out;
}

inline Vector vstack(const Vector& a, const Vector& b) {
    Vector out(a.size() + b.size());
    out << a, b;
    return out;
}

inline Matrix hstack(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw StructuralError("hstack: row mismatch");
    Matrix out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace tfa
