// Copyright 2026 The permsym Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// @file sparse_operator.hpp
/// @brief Complex sparse operator with an assemble-then-freeze lifecycle.

#pragma once

#include "permsym/common.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace permsym {

using Vector = Eigen::VectorXcd;

/// Square complex matrix on a basis of `dimension()` states.
///
/// While unfrozen, entries are accumulated as triplets (duplicates add up).
/// `freeze()` compresses them into CSR storage and drops exact zeros; after
/// that the operator is read-only.
class SparseOperator {
public:
    using Matrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor, int>;

    SparseOperator() = default;
    explicit SparseOperator(index_t dim) : dim_(dim) {}

    static SparseOperator identity(index_t dim) {
        SparseOperator op(dim);
        for (index_t i = 0; i < dim; ++i) op.add(i, i, 1.0);
        op.freeze();
        return op;
    }

    static SparseOperator from_matrix(Matrix m, index_t dropped = 0) {
        if (m.rows() != m.cols()) throw OperatorError("operator matrix must be square");
        SparseOperator op(static_cast<index_t>(m.rows()));
        m.prune(cplx(0.0, 0.0), 0.0);
        m.makeCompressed();
        op.matrix_ = std::move(m);
        op.frozen_ = true;
        op.dropped_ = dropped;
        return op;
    }

    index_t dimension() const { return dim_; }
    bool frozen() const { return frozen_; }

    void add(index_t row, index_t col, cplx value) {
        require_unfrozen();
        if (row >= dim_ || col >= dim_) {
            throw OperatorError("entry (" + std::to_string(row) + ", " + std::to_string(col) +
                                ") outside operator dimension " + std::to_string(dim_));
        }
        if (value == cplx(0.0, 0.0)) return;
        triplets_.emplace_back(static_cast<int>(row), static_cast<int>(col), value);
    }

    /// Record an arrow contribution that fell outside the truncated basis.
    void note_dropped(index_t n = 1) { dropped_ += n; }
    index_t dropped_arrows() const { return dropped_; }

    void freeze() {
        if (frozen_) return;
        matrix_.resize(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
        matrix_.setFromTriplets(triplets_.begin(), triplets_.end());
        matrix_.prune(cplx(0.0, 0.0), 0.0);
        matrix_.makeCompressed();
        triplets_.clear();
        triplets_.shrink_to_fit();
        frozen_ = true;
    }

    const Matrix& matrix() const {
        require_frozen();
        return matrix_;
    }

    index_t nnz() const {
        return frozen_ ? static_cast<index_t>(matrix_.nonZeros())
                       : static_cast<index_t>(triplets_.size());
    }

    /// Entry lookup on a frozen operator (zero when not stored).
    cplx coeff(index_t row, index_t col) const {
        require_frozen();
        return matrix_.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }

    /// y = A x
    void apply(const Vector& x, Vector& y) const {
        require_frozen();
        if (static_cast<index_t>(x.size()) != dim_) {
            throw OperatorError("vector length " + std::to_string(x.size()) +
                                " does not match operator dimension " + std::to_string(dim_));
        }
        y.noalias() = matrix_ * x;
    }

    Vector operator*(const Vector& x) const {
        Vector y(x.size());
        apply(x, y);
        return y;
    }

    /// Maximum absolute row sum.
    double norm_inf() const {
        require_frozen();
        double best = 0.0;
        for (int r = 0; r < matrix_.outerSize(); ++r) {
            double s = 0.0;
            for (Matrix::InnerIterator it(matrix_, r); it; ++it) s += std::abs(it.value());
            best = std::max(best, s);
        }
        return best;
    }

private:
    void require_unfrozen() const {
        if (frozen_) throw OperatorError("operator is frozen; assembly is closed");
    }
    void require_frozen() const {
        if (!frozen_) throw OperatorError("operator must be frozen before use");
    }

    index_t dim_ = 0;
    bool frozen_ = false;
    index_t dropped_ = 0;
    std::vector<Eigen::Triplet<cplx, int>> triplets_;
    Matrix matrix_;
};

/// Sparse product A * B of two frozen operators (the L/R composition: the
/// right factor acts on the density vector first).
inline SparseOperator product(const SparseOperator& a, const SparseOperator& b) {
    if (a.dimension() != b.dimension()) {
        throw OperatorError("product of operators with dimensions " +
                            std::to_string(a.dimension()) + " and " +
                            std::to_string(b.dimension()));
    }
    SparseOperator::Matrix m = a.matrix() * b.matrix();
    return SparseOperator::from_matrix(std::move(m), a.dropped_arrows() + b.dropped_arrows());
}

/// A += alpha * B, keeping the union of both sparsity patterns. A must be unfrozen.
inline void axpy(SparseOperator& a, cplx alpha, const SparseOperator& b) {
    if (a.dimension() != b.dimension()) {
        throw OperatorError("axpy of operators with dimensions " +
                            std::to_string(a.dimension()) + " and " +
                            std::to_string(b.dimension()));
    }
    if (a.frozen()) throw OperatorError("operator is frozen; assembly is closed");
    const auto& m = b.matrix();
    if (alpha != cplx(0.0, 0.0)) {
        for (int r = 0; r < m.outerSize(); ++r) {
            for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it) {
                a.add(static_cast<index_t>(r), static_cast<index_t>(it.col()), alpha * it.value());
            }
        }
    }
    a.note_dropped(b.dropped_arrows());
}

/// Mode selector for `combine`.
struct Product {};
struct Axpy {
    cplx alpha;
};

inline SparseOperator combine(const SparseOperator& a, const SparseOperator& b, Product) {
    return product(a, b);
}

inline void combine(SparseOperator& a, const SparseOperator& b, Axpy mode) {
    axpy(a, mode.alpha, b);
}

} // namespace permsym
