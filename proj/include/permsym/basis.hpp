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

/// @file basis.hpp
/// @brief System declaration and the permutation-symmetric Liouville basis.
///
/// A basis state is a configuration {n_kl} of N identical (d+1)-level systems,
/// where n_kl counts how many systems carry the single-system matrix
/// |k><l| in the symmetrized product, plus a (ket, bra) Fock index pair per
/// bosonic mode. The ground density n00 is never stored; it is recovered as
/// N minus the sum of all tracked counts.
///
/// States are ordered lexicographically: tracked MLS dims in declaration order
/// (first dim outermost), then per mode the ket index followed by the bra
/// index. The MLS part and the mode part form a tensor product, so a linear
/// index decomposes as `mls_row * mode_block() + mode_part`.

#pragma once

#include "permsym/common.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace permsym {

/// Identifier of the count n_kl (left level k, right level l).
struct MLSDimId {
    int left = 0;
    int right = 0;

    constexpr bool is_density() const { return left == right; }
    constexpr bool is_ground() const { return left == 0 && right == 0; }
    constexpr MLSDimId transposed() const { return {right, left}; }

    std::string name() const {
        return "n" + std::to_string(left) + std::to_string(right);
    }

    friend constexpr auto operator<=>(const MLSDimId&, const MLSDimId&) = default;
};

inline constexpr MLSDimId kGroundDim{0, 0};

/// A tracked MLS degree of freedom with its cutoff (largest allowed count + 1).
struct TrackedDim {
    MLSDimId id;
    std::size_t cutoff = 0;

    friend bool operator==(const TrackedDim&, const TrackedDim&) = default;
};

struct ModeSpec {
    std::string name;
    std::size_t fock_cutoff = 0;
    double energy = 0.0;

    friend bool operator==(const ModeSpec&, const ModeSpec&) = default;
};

/// Validated declaration of the MLS degrees of freedom and the bosonic modes.
struct SystemSpec {
    std::size_t n_systems = 0;
    int d_levels = 0;
    std::vector<TrackedDim> tracked_dims;
    std::vector<double> level_energies; ///< one per level, level 0 first
    std::vector<ModeSpec> modes;

    /// Position of `dim` among the tracked dims, if tracked.
    std::optional<std::size_t> dim_position(MLSDimId dim) const {
        for (std::size_t i = 0; i < tracked_dims.size(); ++i) {
            if (tracked_dims[i].id == dim) return i;
        }
        return std::nullopt;
    }

    bool has_dim(MLSDimId dim) const {
        return dim.is_ground() || dim_position(dim).has_value();
    }

    std::optional<std::size_t> mode_position(const std::string& name) const {
        for (std::size_t i = 0; i < modes.size(); ++i) {
            if (modes[i].name == name) return i;
        }
        return std::nullopt;
    }

    /// Number of effective dims m: tracked dims plus the implicit n00.
    std::size_t effective_dims() const { return tracked_dims.size() + 1; }

    friend bool operator==(const SystemSpec&, const SystemSpec&) = default;
};

/// Builds and validates a SystemSpec. Modes are numbered in the given order.
inline SystemSpec define_system(std::size_t n_systems, int d_levels,
                                std::vector<TrackedDim> dims,
                                std::vector<double> level_energies = {},
                                std::vector<ModeSpec> modes = {}) {
    if (n_systems == 0) throw SpecError("number of systems must be positive");
    if (n_systems >= std::numeric_limits<std::uint16_t>::max()) {
        throw SpecError("number of systems too large: " + std::to_string(n_systems));
    }
    if (d_levels < 1) throw SpecError("levels per system must be positive");
    if (dims.empty()) throw SpecError("at least one MLS dim must be tracked");
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const auto& d = dims[i];
        if (d.id.left < 0 || d.id.right < 0 || d.id.left >= d_levels ||
            d.id.right >= d_levels) {
            throw SpecError("dim " + d.id.name() + " references a level outside [0, " +
                            std::to_string(d_levels - 1) + "]");
        }
        if (d.id.is_ground()) {
            throw SpecError("n00 is the implicit ground density and cannot be tracked");
        }
        if (d.cutoff == 0) throw SpecError("dim " + d.id.name() + " has zero cutoff");
        if (d.cutoff > n_systems + 1) {
            throw SpecError("dim " + d.id.name() + " cutoff " + std::to_string(d.cutoff) +
                            " exceeds N + 1 = " + std::to_string(n_systems + 1));
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (dims[j].id == d.id) throw SpecError("duplicate dim " + d.id.name());
        }
    }
    if (level_energies.empty()) {
        level_energies.assign(static_cast<std::size_t>(d_levels), 0.0);
    } else if (level_energies.size() != static_cast<std::size_t>(d_levels)) {
        throw SpecError("expected " + std::to_string(d_levels) + " level energies, got " +
                        std::to_string(level_energies.size()));
    }
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (modes[i].fock_cutoff == 0) {
            throw SpecError("mode " + modes[i].name + " has zero Fock cutoff");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (!modes[i].name.empty() && modes[j].name == modes[i].name) {
                throw SpecError("duplicate mode name " + modes[i].name);
            }
        }
    }
    return SystemSpec{n_systems, d_levels, std::move(dims), std::move(level_energies),
                      std::move(modes)};
}

/// Convenience: track `dims` with the untruncated cutoff N + 1.
inline std::vector<TrackedDim> untruncated(std::size_t n_systems,
                                           std::initializer_list<MLSDimId> dims) {
    std::vector<TrackedDim> out;
    for (auto d : dims) out.push_back({d, n_systems + 1});
    return out;
}

/// binomial(N + m - 1, N): the number of configurations of m counts summing to N.
inline index_t dimension_count(std::size_t n_systems, std::size_t m) {
    if (m == 0) throw SpecError("dimension_count requires m >= 1");
    const index_t n = n_systems + m - 1;
    const index_t k = std::min<index_t>(n_systems, m - 1);
    unsigned __int128 acc = 1;
    for (index_t i = 1; i <= k; ++i) {
        acc = acc * (n - k + i) / i;
        if (acc > std::numeric_limits<index_t>::max()) {
            throw OverflowError("binomial(" + std::to_string(n) + ", " +
                                std::to_string(n_systems) + ") exceeds 64 bits");
        }
    }
    return static_cast<index_t>(acc);
}

/// Full quantum numbers of one basis state.
struct MultiIndex {
    std::vector<std::size_t> mls_counts; ///< one per tracked dim
    std::vector<std::size_t> mode_kets;  ///< one per mode
    std::vector<std::size_t> mode_bras;  ///< one per mode

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// True iff every polarization count is zero and every mode has ket == bra.
inline bool is_density_element(const SystemSpec& spec, const MultiIndex& s) {
    for (std::size_t i = 0; i < spec.tracked_dims.size() && i < s.mls_counts.size(); ++i) {
        if (!spec.tracked_dims[i].id.is_density() && s.mls_counts[i] != 0) return false;
    }
    for (std::size_t j = 0; j < s.mode_kets.size(); ++j) {
        if (s.mode_kets[j] != s.mode_bras[j]) return false;
    }
    return true;
}

/// Immutable enumeration of the symmetric basis with a ranking-based index map.
class SymBasis {
public:
    using count_t = std::uint16_t;

    explicit SymBasis(SystemSpec spec) : spec_(std::move(spec)) {
        const std::size_t m = spec_.tracked_dims.size();
        const std::size_t n = spec_.n_systems;
        build_tables(m, n);
        mls_size_ = completions_[0][n];

        mode_block_ = 1;
        mode_strides_.assign(spec_.modes.size(), 1);
        for (std::size_t j = spec_.modes.size(); j-- > 0;) {
            mode_strides_[j] = mode_block_;
            const index_t c = spec_.modes[j].fock_cutoff;
            mode_block_ = detail::checked_mul(mode_block_, detail::checked_mul(c, c));
        }
        size_ = detail::checked_mul(mls_size_, mode_block_);
        if (size_ > static_cast<index_t>(std::numeric_limits<int>::max())) {
            throw OverflowError("basis of " + std::to_string(size_) +
                                " states exceeds the sparse index range");
        }

        transpose_pos_.assign(m, -1);
        for (std::size_t i = 0; i < m; ++i) {
            if (auto p = spec_.dim_position(spec_.tracked_dims[i].id.transposed())) {
                transpose_pos_[i] = static_cast<int>(*p);
            }
        }
        enumerate(m, n);
    }

    const SystemSpec& spec() const { return spec_; }
    index_t size() const { return size_; }
    index_t mls_size() const { return mls_size_; }
    index_t mode_block() const { return mode_block_; }
    std::size_t n_dims() const { return spec_.tracked_dims.size(); }

    /// Counts of MLS configuration `mls_row`, in tracked-dim order.
    std::span<const count_t> config(index_t mls_row) const {
        return {configs_.data() + mls_row * n_dims(), n_dims()};
    }

    std::size_t count(index_t mls_row, std::size_t dim_pos) const {
        return configs_[mls_row * n_dims() + dim_pos];
    }

    /// Implicit n00 = N minus all tracked counts.
    std::size_t ground_count(index_t mls_row) const {
        std::size_t sum = 0;
        for (auto c : config(mls_row)) sum += c;
        return spec_.n_systems - sum;
    }

    /// Count of an arbitrary dim: tracked, implicit n00, or zero when untracked.
    std::size_t dim_count(index_t mls_row, MLSDimId dim) const {
        if (dim.is_ground()) return ground_count(mls_row);
        if (auto p = spec_.dim_position(dim)) return count(mls_row, *p);
        return 0;
    }

    /// Rank of an MLS configuration, or nothing when outside cutoffs or N.
    template <typename Count>
    std::optional<index_t> mls_index(std::span<const Count> counts) const {
        if (counts.size() != n_dims()) return std::nullopt;
        std::size_t rem = spec_.n_systems;
        index_t idx = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const auto v = static_cast<std::size_t>(counts[i]);
            if (v >= spec_.tracked_dims[i].cutoff || v > rem) return std::nullopt;
            // completions for every smaller value of this dim
            if (v > 0) idx += prefix_[i + 1][rem] - prefix_[i + 1][rem - v];
            rem -= v;
        }
        return idx;
    }

    index_t mode_ket(index_t mode_part, std::size_t mode) const {
        const index_t c = spec_.modes[mode].fock_cutoff;
        return (mode_part / mode_strides_[mode]) % (c * c) / c;
    }

    index_t mode_bra(index_t mode_part, std::size_t mode) const {
        const index_t c = spec_.modes[mode].fock_cutoff;
        return (mode_part / mode_strides_[mode]) % (c * c) % c;
    }

    /// Mode part with the (ket, bra) pair of `mode` replaced.
    index_t with_mode(index_t mode_part, std::size_t mode, index_t ket, index_t bra) const {
        const index_t c = spec_.modes[mode].fock_cutoff;
        const index_t stride = mode_strides_[mode];
        const index_t old_pair = (mode_part / stride) % (c * c);
        return mode_part + (ket * c + bra) * stride - old_pair * stride;
    }

    MultiIndex state(index_t index) const {
        if (index >= size_) {
            throw SpecError("basis index " + std::to_string(index) + " out of range [0, " +
                            std::to_string(size_) + ")");
        }
        const index_t row = index / mode_block_;
        const index_t q = index % mode_block_;
        MultiIndex s;
        auto cfg = config(row);
        s.mls_counts.assign(cfg.begin(), cfg.end());
        for (std::size_t j = 0; j < spec_.modes.size(); ++j) {
            s.mode_kets.push_back(mode_ket(q, j));
            s.mode_bras.push_back(mode_bra(q, j));
        }
        return s;
    }

    std::optional<index_t> index_of(const MultiIndex& s) const {
        if (s.mode_kets.size() != spec_.modes.size() ||
            s.mode_bras.size() != spec_.modes.size()) {
            return std::nullopt;
        }
        auto row = mls_index(std::span<const std::size_t>(s.mls_counts));
        if (!row) return std::nullopt;
        index_t q = 0;
        for (std::size_t j = 0; j < spec_.modes.size(); ++j) {
            const index_t c = spec_.modes[j].fock_cutoff;
            if (s.mode_kets[j] >= c || s.mode_bras[j] >= c) return std::nullopt;
            q += (s.mode_kets[j] * c + s.mode_bras[j]) * mode_strides_[j];
        }
        return *row * mode_block_ + q;
    }

    bool is_density_mls(index_t mls_row) const {
        for (std::size_t i = 0; i < n_dims(); ++i) {
            if (!spec_.tracked_dims[i].id.is_density() && count(mls_row, i) != 0) {
                return false;
            }
        }
        return true;
    }

    bool is_density_mode(index_t mode_part) const {
        for (std::size_t j = 0; j < spec_.modes.size(); ++j) {
            if (mode_ket(mode_part, j) != mode_bra(mode_part, j)) return false;
        }
        return true;
    }

    bool is_density(index_t index) const {
        return is_density_mls(index / mode_block_) && is_density_mode(index % mode_block_);
    }

    /// Index of the hermitian-conjugate partner (all n_kl <-> n_lk, ket <-> bra),
    /// or nothing when the partner is not representable in this basis.
    std::optional<index_t> transpose_index(index_t index) const {
        const index_t row = index / mode_block_;
        const index_t q = index % mode_block_;
        std::vector<count_t> t(n_dims(), 0);
        for (std::size_t i = 0; i < n_dims(); ++i) {
            const auto c = count(row, i);
            if (c == 0) continue;
            if (transpose_pos_[i] < 0) return std::nullopt;
            t[static_cast<std::size_t>(transpose_pos_[i])] = static_cast<count_t>(c);
        }
        auto trow = mls_index(std::span<const count_t>(t));
        if (!trow) return std::nullopt;
        index_t tq = q;
        for (std::size_t j = 0; j < spec_.modes.size(); ++j) {
            tq = with_mode(tq, j, mode_bra(q, j), mode_ket(q, j));
        }
        return *trow * mode_block_ + tq;
    }

private:
    // completions_[i][r]: configurations of dims i.. with sum <= r
    // prefix_[i][r]: sum over u <= r of completions_[i][u]
    void build_tables(std::size_t m, std::size_t n) {
        completions_.assign(m + 1, std::vector<index_t>(n + 1, 0));
        prefix_.assign(m + 1, std::vector<index_t>(n + 1, 0));
        for (std::size_t r = 0; r <= n; ++r) completions_[m][r] = 1;
        fill_prefix(m, n);
        for (std::size_t i = m; i-- > 0;) {
            const std::size_t cut = spec_.tracked_dims[i].cutoff;
            for (std::size_t r = 0; r <= n; ++r) {
                const std::size_t vmax = std::min(cut - 1, r);
                // sum_{v=0}^{vmax} completions_[i+1][r-v]
                const index_t hi = prefix_[i + 1][r];
                const index_t lo = (r >= vmax + 1) ? prefix_[i + 1][r - vmax - 1] : 0;
                completions_[i][r] = hi - lo;
            }
            fill_prefix(i, n);
        }
    }

    void fill_prefix(std::size_t i, std::size_t n) {
        index_t acc = 0;
        for (std::size_t r = 0; r <= n; ++r) {
            acc = detail::checked_add(acc, completions_[i][r]);
            prefix_[i][r] = acc;
        }
    }

    void enumerate(std::size_t m, std::size_t n) {
        configs_.resize(mls_size_ * m);
        std::vector<count_t> c(m, 0);
        std::size_t sum = 0;
        for (index_t row = 0; row < mls_size_; ++row) {
            std::copy(c.begin(), c.end(), configs_.begin() + static_cast<std::ptrdiff_t>(row * m));
            std::size_t i = m;
            while (i-- > 0) {
                if (c[i] + 1u < spec_.tracked_dims[i].cutoff && sum + 1 <= n) {
                    ++c[i];
                    ++sum;
                    break;
                }
                sum -= c[i];
                c[i] = 0;
            }
        }
    }

    SystemSpec spec_;
    std::vector<std::vector<index_t>> completions_;
    std::vector<std::vector<index_t>> prefix_;
    std::vector<count_t> configs_;
    std::vector<index_t> mode_strides_;
    std::vector<int> transpose_pos_;
    index_t mls_size_ = 0;
    index_t mode_block_ = 1;
    index_t size_ = 0;
};

inline SymBasis enumerate_basis(const SystemSpec& spec) { return SymBasis(spec); }

} // namespace permsym
