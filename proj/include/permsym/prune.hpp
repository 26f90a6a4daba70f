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

/// @file prune.hpp
/// @brief Reachability reduction of a frozen Liouvillian.
///
/// A state j feeds state i when L[i, j] != 0. Starting from the support of
/// an initial vector, everything the evolution can ever populate is the
/// closure under "feeds". States outside the closure stay exactly zero, so
/// dropping them leaves every observable unchanged.

#pragma once

#include "permsym/basis.hpp"
#include "permsym/sparse_operator.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

namespace permsym {

enum class PruneGranularity {
    /// Nodes are MLS configurations; a configuration is kept with all its
    /// mode pairs. This is the degree-of-freedom level decoupling.
    configuration,
    /// Nodes are individual basis states (finest exact reduction).
    state,
};

/// Reduced operator plus the translation between reduced and full indices.
struct PrunedSystem {
    std::vector<index_t> kept;            ///< reduced index -> full index, ascending
    std::vector<std::int64_t> full_to_reduced; ///< -1 when removed
    std::vector<index_t> kept_configurations; ///< MLS rows with at least one kept state
    SparseOperator op;

    index_t size() const { return kept.size(); }

    std::optional<index_t> reduced_index(index_t full) const {
        if (full >= full_to_reduced.size() || full_to_reduced[full] < 0) return std::nullopt;
        return static_cast<index_t>(full_to_reduced[full]);
    }

    Vector restrict(const Vector& full) const {
        Vector out(static_cast<Eigen::Index>(kept.size()));
        for (std::size_t i = 0; i < kept.size(); ++i) {
            out[static_cast<Eigen::Index>(i)] = full[static_cast<Eigen::Index>(kept[i])];
        }
        return out;
    }

    Vector expand(const Vector& reduced) const {
        Vector out = Vector::Zero(static_cast<Eigen::Index>(full_to_reduced.size()));
        for (std::size_t i = 0; i < kept.size(); ++i) {
            out[static_cast<Eigen::Index>(kept[i])] = reduced[static_cast<Eigen::Index>(i)];
        }
        return out;
    }
};

/// Keeps the states reachable from `support` (full indices) through L.
inline PrunedSystem prune_reachable(const SymBasis& basis, const SparseOperator& L,
                                    const std::vector<index_t>& support,
                                    PruneGranularity granularity = PruneGranularity::configuration) {
    if (support.empty()) throw SpecError("pruning needs a non-empty support set");
    if (L.dimension() != basis.size()) {
        throw OperatorError("operator dimension does not match basis size");
    }
    const auto& m = L.matrix();
    const index_t n = basis.size();
    const index_t f = basis.mode_block();

    // feeds[j] lists the i with L[i, j] != 0 (column-wise adjacency).
    using Adjacency = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;
    const Adjacency cols = m;

    std::vector<char> mark(n, 0);
    std::deque<index_t> queue;
    if (granularity == PruneGranularity::state) {
        for (auto s : support) {
            if (s >= n) throw SpecError("support index out of range");
            if (!mark[s]) mark[s] = 1, queue.push_back(s);
        }
        while (!queue.empty()) {
            const index_t j = queue.front();
            queue.pop_front();
            for (Adjacency::InnerIterator it(cols, static_cast<int>(j)); it; ++it) {
                const auto i = static_cast<index_t>(it.row());
                if (!mark[i]) mark[i] = 1, queue.push_back(i);
            }
        }
    } else {
        std::vector<char> cfg_mark(basis.mls_size(), 0);
        for (auto s : support) {
            if (s >= n) throw SpecError("support index out of range");
            const index_t r = s / f;
            if (!cfg_mark[r]) cfg_mark[r] = 1, queue.push_back(r);
        }
        while (!queue.empty()) {
            const index_t r = queue.front();
            queue.pop_front();
            for (index_t q = 0; q < f; ++q) {
                for (Adjacency::InnerIterator it(cols, static_cast<int>(r * f + q)); it; ++it) {
                    const auto ri = static_cast<index_t>(it.row()) / f;
                    if (!cfg_mark[ri]) cfg_mark[ri] = 1, queue.push_back(ri);
                }
            }
        }
        for (index_t r = 0; r < basis.mls_size(); ++r) {
            if (!cfg_mark[r]) continue;
            for (index_t q = 0; q < f; ++q) mark[r * f + q] = 1;
        }
    }

    PrunedSystem out;
    out.full_to_reduced.assign(n, -1);
    for (index_t s = 0; s < n; ++s) {
        if (!mark[s]) continue;
        out.full_to_reduced[s] = static_cast<std::int64_t>(out.kept.size());
        out.kept.push_back(s);
        if (out.kept_configurations.empty() || out.kept_configurations.back() != s / f) {
            out.kept_configurations.push_back(s / f);
        }
    }

    SparseOperator reduced(out.kept.size());
    for (std::size_t i = 0; i < out.kept.size(); ++i) {
        for (SparseOperator::Matrix::InnerIterator it(m, static_cast<int>(out.kept[i])); it; ++it) {
            const auto j = out.full_to_reduced[static_cast<index_t>(it.col())];
            if (j >= 0) reduced.add(i, static_cast<index_t>(j), it.value());
        }
    }
    reduced.note_dropped(L.dropped_arrows());
    reduced.freeze();
    out.op = std::move(reduced);
    return out;
}

} // namespace permsym
