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

/// @file liouville.hpp
/// @brief Row-driven assembly of Liouville-space operators on the symmetric basis.
///
/// Row s of an operator holds the expansion of d/dt tr[P(s) rho]. For a
/// superoperator rho -> A rho B this is tr[B P(s) A rho], so every entry is
/// found by applying B from the left and A from the right to the basis
/// element of row s. Two elementary actions generate everything:
///
///   sum_i |x><x|_i P |y><y|_i = n_xy P                      (nonconnecting)
///   sum_i |x><y|_i P |k><l|_i = (n_xl + 1) P[n_xl+1, n_yk-1]   (connecting)
///
/// The nonconnecting arrow on n_xy is the superoperator sum_i s_yy rho s_xx;
/// the connecting arrow (increment n_xl, decrement n_yk) is
/// sum_i s_kl rho s_xy, with s_ab = |a><b| on system i.
///
/// All coefficients are applied exactly as given; the elementary functions
/// never insert the -i of a commutator. Template Liouvillians do.

#pragma once

#include "permsym/basis.hpp"
#include "permsym/sparse_operator.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace permsym {

enum class Side { left, right };

/// Elementary one- and two-sided mode operators on rho_{m,m'} = <m|rho|m'>.
enum class ModeOpKind {
    bL,     ///< b rho
    bR,     ///< rho b
    bdL,    ///< b^dag rho
    bdR,    ///< rho b^dag
    bdbL,   ///< b^dag b rho
    bdbR,   ///< rho b^dag b
    bbdL,   ///< b b^dag rho (product of truncated ladders)
    bbdR,   ///< rho b b^dag
    bL_bdR, ///< b rho b^dag
    bdL_bR, ///< b^dag rho b
};

inline const char* mode_op_name(ModeOpKind k) {
    switch (k) {
    case ModeOpKind::bL: return "bL";
    case ModeOpKind::bR: return "bR";
    case ModeOpKind::bdL: return "bdL";
    case ModeOpKind::bdR: return "bdR";
    case ModeOpKind::bdbL: return "bdbL";
    case ModeOpKind::bdbR: return "bdbR";
    case ModeOpKind::bbdL: return "bbdL";
    case ModeOpKind::bbdR: return "bbdR";
    case ModeOpKind::bL_bdR: return "bL_bdR";
    case ModeOpKind::bdL_bR: return "bdL_bR";
    }
    return "?";
}

inline std::optional<ModeOpKind> parse_mode_op(const std::string& s) {
    for (auto k : {ModeOpKind::bL, ModeOpKind::bR, ModeOpKind::bdL, ModeOpKind::bdR,
                   ModeOpKind::bdbL, ModeOpKind::bdbR, ModeOpKind::bbdL, ModeOpKind::bbdR,
                   ModeOpKind::bL_bdR, ModeOpKind::bdL_bR}) {
        if (s == mode_op_name(k)) return k;
    }
    return std::nullopt;
}

namespace detail {

inline void require_dim(const SymBasis& basis, MLSDimId dim) {
    const auto& spec = basis.spec();
    if (dim.left < 0 || dim.right < 0 || dim.left >= spec.d_levels ||
        dim.right >= spec.d_levels) {
        throw SpecError("dim " + dim.name() + " references a level outside [0, " +
                        std::to_string(spec.d_levels - 1) + "]");
    }
    if (!spec.has_dim(dim)) {
        throw SpecError("dim " + dim.name() + " is neither tracked nor the implicit n00");
    }
}

inline void require_level(const SymBasis& basis, int level) {
    if (level < 0 || level >= basis.spec().d_levels) {
        throw SpecError("level " + std::to_string(level) + " outside [0, " +
                        std::to_string(basis.spec().d_levels - 1) + "]");
    }
}

inline void require_mode(const SymBasis& basis, std::size_t mode) {
    if (mode >= basis.spec().modes.size()) {
        throw SpecError("mode index " + std::to_string(mode) + " out of range (" +
                        std::to_string(basis.spec().modes.size()) + " modes declared)");
    }
}

inline void require_dimension(const SparseOperator& op, const SymBasis& basis) {
    if (op.dimension() != basis.size()) {
        throw OperatorError("operator dimension " + std::to_string(op.dimension()) +
                            " does not match basis size " + std::to_string(basis.size()));
    }
}

/// Adds value * (mls part) x identity(mode part) at MLS entry (row, col).
inline void add_mls_block(SparseOperator& op, const SymBasis& basis, index_t row, index_t col,
                          cplx value) {
    const index_t f = basis.mode_block();
    for (index_t q = 0; q < f; ++q) op.add(row * f + q, col * f + q, value);
}

/// Connecting-arrow target of MLS row `row`: column and factor (n_inc + 1).
/// Returns nothing when Theta(n_dec) vanishes; sets `dropped` when the shifted
/// configuration exists but lies outside the cutoffs.
inline std::optional<std::pair<index_t, double>>
connecting_target(const SymBasis& basis, index_t row, MLSDimId inc, MLSDimId dec,
                  bool& dropped) {
    dropped = false;
    if (basis.dim_count(row, dec) == 0) return std::nullopt;
    auto cfg = basis.config(row);
    std::vector<SymBasis::count_t> shifted(cfg.begin(), cfg.end());
    const auto& spec = basis.spec();
    if (!inc.is_ground()) ++shifted[*spec.dim_position(inc)];
    if (!dec.is_ground()) --shifted[*spec.dim_position(dec)];
    auto col = basis.mls_index(std::span<const SymBasis::count_t>(shifted));
    if (!col) {
        dropped = true;
        return std::nullopt;
    }
    return std::make_pair(*col, static_cast<double>(basis.dim_count(row, inc) + 1));
}

} // namespace detail

/// op[s, s] += c * n_xy(s).
inline void add_mls_nonconnecting(SparseOperator& op, const SymBasis& basis, MLSDimId dim,
                                  cplx c) {
    detail::require_dimension(op, basis);
    detail::require_dim(basis, dim);
    for (index_t r = 0; r < basis.mls_size(); ++r) {
        const auto n = basis.dim_count(r, dim);
        if (n != 0) detail::add_mls_block(op, basis, r, r, c * static_cast<double>(n));
    }
}

/// op[s, s'] += c * (n_inc(s) + 1) where s' = s with n_inc + 1 and n_dec - 1.
inline void add_mls_connecting(SparseOperator& op, const SymBasis& basis, MLSDimId inc,
                               MLSDimId dec, cplx c) {
    detail::require_dimension(op, basis);
    detail::require_dim(basis, inc);
    detail::require_dim(basis, dec);
    if (inc == dec) {
        throw SpecError("connecting arrow needs distinct dims; " + inc.name() +
                        " on both sides is a nonconnecting arrow");
    }
    for (index_t r = 0; r < basis.mls_size(); ++r) {
        bool dropped = false;
        auto t = detail::connecting_target(basis, r, inc, dec, dropped);
        if (t) {
            detail::add_mls_block(op, basis, r, t->first, c * t->second);
        } else if (dropped) {
            op.note_dropped(basis.mode_block());
        }
    }
}

/// Collective operator J_xy = sum_i |x><y|_i acting on one side of rho.
///
/// The k-sum only includes terms whose dims exist. A term whose decremented
/// dim is untracked vanishes identically and is skipped; a term that would
/// increment an untracked dim from a tracked one is an error.
inline void add_collective(SparseOperator& op, const SymBasis& basis, Side side, int x, int y,
                           cplx c) {
    detail::require_dimension(op, basis);
    detail::require_level(basis, x);
    detail::require_level(basis, y);
    const auto& spec = basis.spec();
    for (int k = 0; k < spec.d_levels; ++k) {
        if (x == y) {
            const MLSDimId dim = side == Side::right ? MLSDimId{x, k} : MLSDimId{k, x};
            if (spec.has_dim(dim)) add_mls_nonconnecting(op, basis, dim, c);
            continue;
        }
        const MLSDimId inc = side == Side::right ? MLSDimId{x, k} : MLSDimId{k, y};
        const MLSDimId dec = side == Side::right ? MLSDimId{y, k} : MLSDimId{k, x};
        if (!spec.has_dim(dec)) continue;
        if (!spec.has_dim(inc)) {
            throw SpecError("J" + std::to_string(x) + std::to_string(y) +
                            (side == Side::left ? " (left)" : " (right)") + " maps " +
                            dec.name() + " into untracked dim " + inc.name() +
                            "; track it or assemble the arrows directly");
        }
        add_mls_connecting(op, basis, inc, dec, c);
    }
}

inline void add_mode_elementary(SparseOperator& op, const SymBasis& basis, std::size_t mode,
                                ModeOpKind kind, cplx c) {
    detail::require_dimension(op, basis);
    detail::require_mode(basis, mode);
    const index_t cut = basis.spec().modes[mode].fock_cutoff;
    const index_t f = basis.mode_block();
    for (index_t q = 0; q < f; ++q) {
        const index_t m = basis.mode_ket(q, mode);
        const index_t mp = basis.mode_bra(q, mode);
        const double dm = static_cast<double>(m);
        const double dmp = static_cast<double>(mp);
        std::optional<index_t> col;
        double v = 0.0;
        bool dropped = false;
        switch (kind) {
        case ModeOpKind::bL:
            if (m + 1 < cut) col = basis.with_mode(q, mode, m + 1, mp), v = std::sqrt(dm + 1);
            else dropped = true;
            break;
        case ModeOpKind::bdL:
            if (m >= 1) col = basis.with_mode(q, mode, m - 1, mp), v = std::sqrt(dm);
            break;
        case ModeOpKind::bR:
            if (mp >= 1) col = basis.with_mode(q, mode, m, mp - 1), v = std::sqrt(dmp);
            break;
        case ModeOpKind::bdR:
            if (mp + 1 < cut) col = basis.with_mode(q, mode, m, mp + 1), v = std::sqrt(dmp + 1);
            else dropped = true;
            break;
        case ModeOpKind::bdbL: col = q, v = dm; break;
        case ModeOpKind::bdbR: col = q, v = dmp; break;
        case ModeOpKind::bbdL:
            col = q, v = (m + 1 < cut) ? dm + 1 : 0.0;
            break;
        case ModeOpKind::bbdR:
            col = q, v = (mp + 1 < cut) ? dmp + 1 : 0.0;
            break;
        case ModeOpKind::bL_bdR:
            if (m + 1 < cut && mp + 1 < cut) {
                col = basis.with_mode(q, mode, m + 1, mp + 1);
                v = std::sqrt((dm + 1) * (dmp + 1));
            } else {
                dropped = true;
            }
            break;
        case ModeOpKind::bdL_bR:
            if (m >= 1 && mp >= 1) {
                col = basis.with_mode(q, mode, m - 1, mp - 1);
                v = std::sqrt(dm * dmp);
            }
            break;
        }
        if (dropped) op.note_dropped(basis.mls_size());
        if (!col || v == 0.0) continue;
        for (index_t r = 0; r < basis.mls_size(); ++r) op.add(r * f + q, r * f + *col, c * v);
    }
}

/// Frozen single-term operators, the building blocks for products.
inline SparseOperator collective_operator(const SymBasis& basis, Side side, int x, int y) {
    SparseOperator op(basis.size());
    add_collective(op, basis, side, x, y, 1.0);
    op.freeze();
    return op;
}

inline SparseOperator mode_operator(const SymBasis& basis, std::size_t mode, ModeOpKind kind) {
    SparseOperator op(basis.size());
    add_mode_elementary(op, basis, mode, kind, 1.0);
    op.freeze();
    return op;
}

inline SparseOperator nonconnecting_operator(const SymBasis& basis, MLSDimId dim) {
    SparseOperator op(basis.size());
    add_mls_nonconnecting(op, basis, dim, 1.0);
    op.freeze();
    return op;
}

inline SparseOperator connecting_operator(const SymBasis& basis, MLSDimId inc, MLSDimId dec) {
    SparseOperator op(basis.size());
    add_mls_connecting(op, basis, inc, dec, 1.0);
    op.freeze();
    return op;
}

// ---------------------------------------------------------------------------
// Template Liouvillians. Hamiltonian parameters are real energies (hbar = 1)
// and enter through -i[H, rho]. Dissipator rates are the half-rates that
// multiply the bracket, e.g. rate = gamma/2 in (gamma/2)(2 A rho A^dag - ...).
// ---------------------------------------------------------------------------

namespace tmpl {

/// H = omega J_xx
struct MlsH0 {
    int level = 1;
    double omega = 0.0;
    friend bool operator==(const MlsH0&, const MlsH0&) = default;
};

/// H = omega b^dag b
struct ModeH0 {
    std::size_t mode = 0;
    double omega = 0.0;
    friend bool operator==(const ModeH0&, const ModeH0&) = default;
};

/// H = g (J_xy b^dag + J_yx b)
struct MlsModeRwa {
    int x = 0;
    int y = 1;
    std::size_t mode = 0;
    double g = 0.0;
    friend bool operator==(const MlsModeRwa&, const MlsModeRwa&) = default;
};

/// H = g (J_xy + J_yx)(b^dag + b)
struct MlsModeNonRwa {
    int x = 0;
    int y = 1;
    std::size_t mode = 0;
    double g = 0.0;
    friend bool operator==(const MlsModeNonRwa&, const MlsModeNonRwa&) = default;
};

/// H = E (J_xy + J_yx), rotating frame
struct MlsCohDrive {
    int x = 1;
    int y = 0;
    double E = 0.0;
    friend bool operator==(const MlsCohDrive&, const MlsCohDrive&) = default;
};

/// H = E (b + b^dag), rotating frame
struct ModeCohDrive {
    std::size_t mode = 0;
    double E = 0.0;
    friend bool operator==(const ModeCohDrive&, const ModeCohDrive&) = default;
};

/// Density part of rate * sum_i (2 s_xy rho s_yx - s_yy rho - rho s_yy) for
/// relaxation from density dim `from` = n_yy into `to` = n_xx: one connecting
/// arrow plus the nonconnecting arrow on n_yy. Coherences involving level y
/// are dephased separately by LindbladDephMls.
struct LindbladRelaxMls {
    MLSDimId from{1, 1};
    MLSDimId to{0, 0};
    double rate = 0.0;
    friend bool operator==(const LindbladRelaxMls&, const LindbladRelaxMls&) = default;
};

/// Nonconnecting arrow -rate * n_xy.
struct LindbladDephMls {
    MLSDimId dim{1, 0};
    double rate = 0.0;
    friend bool operator==(const LindbladDephMls&, const LindbladDephMls&) = default;
};

/// Complete individual decay y -> x: rate * sum_i (2 s_xy rho s_yx - s_yy rho - rho s_yy),
/// i.e. LindbladRelaxMls plus dephasing of every tracked coherence touching level y.
struct MlsDecay {
    int from = 1;
    int to = 0;
    double rate = 0.0;
    friend bool operator==(const MlsDecay&, const MlsDecay&) = default;
};

/// rate (2 b rho b^dag - b^dag b rho - rho b^dag b)
struct LindbladMode {
    std::size_t mode = 0;
    double rate = 0.0;
    friend bool operator==(const LindbladMode&, const LindbladMode&) = default;
};

/// rate ((nbar + 1)(2 b rho b^dag - {b^dag b, rho}) + nbar (2 b^dag rho b - {b b^dag, rho}))
struct LindbladModeThermal {
    std::size_t mode = 0;
    double rate = 0.0;
    double nbar = 0.0;
    friend bool operator==(const LindbladModeThermal&, const LindbladModeThermal&) = default;
};

} // namespace tmpl

using TemplateKind =
    std::variant<tmpl::MlsH0, tmpl::ModeH0, tmpl::MlsModeRwa, tmpl::MlsModeNonRwa,
                 tmpl::MlsCohDrive, tmpl::ModeCohDrive, tmpl::LindbladRelaxMls,
                 tmpl::LindbladDephMls, tmpl::MlsDecay, tmpl::LindbladMode,
                 tmpl::LindbladModeThermal>;

namespace detail {

// -i (H^L - H^R) for H = left_ops product, given as matching L and R operator pairs.
inline void add_commutator_product(SparseOperator& op, const SparseOperator& mls_left,
                                   const SparseOperator& mode_left,
                                   const SparseOperator& mls_right,
                                   const SparseOperator& mode_right, double coupling) {
    axpy(op, -I * coupling, product(mls_left, mode_left));
    axpy(op, I * coupling, product(mls_right, mode_right));
}

struct TemplateAssembler {
    SparseOperator& op;
    const SymBasis& basis;

    void operator()(const tmpl::MlsH0& t) const {
        add_collective(op, basis, Side::left, t.level, t.level, -I * t.omega);
        add_collective(op, basis, Side::right, t.level, t.level, I * t.omega);
    }

    void operator()(const tmpl::ModeH0& t) const {
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bdbL, -I * t.omega);
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bdbR, I * t.omega);
    }

    void operator()(const tmpl::MlsModeRwa& t) const {
        require_mode(basis, t.mode);
        auto jxy_l = collective_operator(basis, Side::left, t.x, t.y);
        auto jyx_l = collective_operator(basis, Side::left, t.y, t.x);
        auto jxy_r = collective_operator(basis, Side::right, t.x, t.y);
        auto jyx_r = collective_operator(basis, Side::right, t.y, t.x);
        add_commutator_product(op, jxy_l, mode_operator(basis, t.mode, ModeOpKind::bdL), jxy_r,
                               mode_operator(basis, t.mode, ModeOpKind::bdR), t.g);
        add_commutator_product(op, jyx_l, mode_operator(basis, t.mode, ModeOpKind::bL), jyx_r,
                               mode_operator(basis, t.mode, ModeOpKind::bR), t.g);
    }

    void operator()(const tmpl::MlsModeNonRwa& t) const {
        require_mode(basis, t.mode);
        SparseOperator jx_l(basis.size()), jx_r(basis.size());
        add_collective(jx_l, basis, Side::left, t.x, t.y, 1.0);
        add_collective(jx_l, basis, Side::left, t.y, t.x, 1.0);
        add_collective(jx_r, basis, Side::right, t.x, t.y, 1.0);
        add_collective(jx_r, basis, Side::right, t.y, t.x, 1.0);
        jx_l.freeze();
        jx_r.freeze();
        SparseOperator q_l(basis.size()), q_r(basis.size());
        add_mode_elementary(q_l, basis, t.mode, ModeOpKind::bL, 1.0);
        add_mode_elementary(q_l, basis, t.mode, ModeOpKind::bdL, 1.0);
        add_mode_elementary(q_r, basis, t.mode, ModeOpKind::bR, 1.0);
        add_mode_elementary(q_r, basis, t.mode, ModeOpKind::bdR, 1.0);
        q_l.freeze();
        q_r.freeze();
        add_commutator_product(op, jx_l, q_l, jx_r, q_r, t.g);
    }

    void operator()(const tmpl::MlsCohDrive& t) const {
        add_collective(op, basis, Side::left, t.x, t.y, -I * t.E);
        add_collective(op, basis, Side::left, t.y, t.x, -I * t.E);
        add_collective(op, basis, Side::right, t.x, t.y, I * t.E);
        add_collective(op, basis, Side::right, t.y, t.x, I * t.E);
    }

    void operator()(const tmpl::ModeCohDrive& t) const {
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bL, -I * t.E);
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bdL, -I * t.E);
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bR, I * t.E);
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bdR, I * t.E);
    }

    void operator()(const tmpl::LindbladRelaxMls& t) const {
        if (!t.from.is_density() || !t.to.is_density() || t.from == t.to) {
            throw SpecError("relaxation needs two distinct density dims, got " + t.from.name() +
                            " -> " + t.to.name());
        }
        add_mls_connecting(op, basis, t.from, t.to, 2.0 * t.rate);
        add_mls_nonconnecting(op, basis, t.from, -2.0 * t.rate);
    }

    void operator()(const tmpl::LindbladDephMls& t) const {
        add_mls_nonconnecting(op, basis, t.dim, -t.rate);
    }

    void operator()(const tmpl::MlsDecay& t) const {
        require_level(basis, t.from);
        require_level(basis, t.to);
        if (t.from == t.to) throw SpecError("decay needs distinct levels");
        add_mls_connecting(op, basis, MLSDimId{t.from, t.from}, MLSDimId{t.to, t.to},
                           2.0 * t.rate);
        add_collective(op, basis, Side::left, t.from, t.from, -t.rate);
        add_collective(op, basis, Side::right, t.from, t.from, -t.rate);
    }

    void operator()(const tmpl::LindbladMode& t) const {
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bL_bdR, 2.0 * t.rate);
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bdbL, -t.rate);
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bdbR, -t.rate);
    }

    void operator()(const tmpl::LindbladModeThermal& t) const {
        const double emit = t.rate * (t.nbar + 1.0);
        const double absorb = t.rate * t.nbar;
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bL_bdR, 2.0 * emit);
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bdbL, -emit);
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bdbR, -emit);
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bdL_bR, 2.0 * absorb);
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bbdL, -absorb);
        add_mode_elementary(op, basis, t.mode, ModeOpKind::bbdR, -absorb);
    }
};

} // namespace detail

/// Adds every arrow of the named Liouvillian. Templates are additive: adding a
/// dephasing arrow that a composite template already contains doubles it.
inline void add_template(SparseOperator& op, const SymBasis& basis, const TemplateKind& kind) {
    detail::require_dimension(op, basis);
    std::visit(detail::TemplateAssembler{op, basis}, kind);
}

} // namespace permsym
