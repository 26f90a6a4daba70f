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

/// @file steady_state.hpp
/// @brief Null vector of a Liouvillian by a trace-bordered sparse LU solve.
///
/// The trace functional is a left null vector of L, so one density row of L
/// is redundant. Replacing it by the trace row gives a nonsingular system
/// exactly when the kernel is one-dimensional; its solution for the unit
/// right-hand side at that row is the normalized steady state. A few steps
/// of iterative refinement bring the residual down to round-off.

#pragma once

#include "permsym/dynamics.hpp"
#include "permsym/sparse_operator.hpp"

#include <Eigen/SparseLU>

#include <string>
#include <vector>

namespace permsym {

struct SteadyStateOptions {
    double relative_tolerance = 1e-10; ///< on ||L x||_inf / ||L||_inf
    int max_iterations = 20;
};

struct SteadyStateResult {
    DensityVector state;
    double residual = 0.0;          ///< ||L x||_inf
    double relative_residual = 0.0; ///< residual / ||L||_inf
    int iterations = 0;
};

inline SteadyStateResult steady_state(const SparseOperator& L, const DualVector& trace,
                                      const SteadyStateOptions& options = {}) {
    const index_t n = L.dimension();
    if (static_cast<index_t>(trace.size()) != n) {
        throw OperatorError("trace functional does not match operator dimension");
    }
    Eigen::Index border = -1;
    for (Eigen::Index i = 0; i < trace.size(); ++i) {
        if (trace[i] != cplx(0.0, 0.0)) {
            border = i;
            break;
        }
    }
    if (border < 0) throw SolverError("trace functional is identically zero");

    using ColMatrix = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;
    std::vector<Eigen::Triplet<cplx, int>> trips;
    const auto& m = L.matrix();
    trips.reserve(static_cast<std::size_t>(m.nonZeros() + trace.size()));
    for (int r = 0; r < m.outerSize(); ++r) {
        if (r == border) continue;
        for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it) {
            trips.emplace_back(r, static_cast<int>(it.col()), it.value());
        }
    }
    for (Eigen::Index j = 0; j < trace.size(); ++j) {
        if (trace[j] != cplx(0.0, 0.0)) trips.emplace_back(static_cast<int>(border), static_cast<int>(j), trace[j]);
    }
    ColMatrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();

    Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) {
        throw SolverError("steady state: bordered system is singular (degenerate null space): " +
                          lu.lastErrorMessage());
    }
    Vector rhs = Vector::Zero(static_cast<Eigen::Index>(n));
    rhs[border] = 1.0;
    Vector x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) {
        throw SolverError("steady state: solve failed (degenerate null space)");
    }

    const double lnorm = L.norm_inf();
    SteadyStateResult res;
    Vector lx(static_cast<Eigen::Index>(n));
    for (int it = 0;; ++it) {
        x /= evaluate(trace, x);
        L.apply(x, lx);
        res.residual = lx.cwiseAbs().maxCoeff();
        res.relative_residual = lnorm > 0.0 ? res.residual / lnorm : res.residual;
        res.iterations = it;
        if (res.relative_residual <= options.relative_tolerance) break;
        if (it >= options.max_iterations) {
            throw SolverError("steady state: residual " + std::to_string(res.relative_residual) +
                              " above tolerance after " + std::to_string(it) + " refinements");
        }
        Vector r = rhs - a * x;
        Vector dx = lu.solve(r);
        if (!dx.allFinite()) throw SolverError("steady state: refinement diverged");
        x += dx;
    }
    res.state = std::move(x);
    return res;
}

} // namespace permsym
