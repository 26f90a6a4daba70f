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

/// @file dynamics.hpp
/// @brief Density vectors, dual vectors, observables and distributions.
///
/// A density vector holds P[s] = tr[P(s) rho] for every basis state s. The
/// basis is unnormalized, so an expectation value is a plain (non-conjugating)
/// sum of dual coefficients times density coefficients.

#pragma once

#include "permsym/basis.hpp"
#include "permsym/sparse_operator.hpp"
#include "permsym/liouville.hpp"

#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace permsym {

using DensityVector = Vector;
using DualVector = Vector;

using WarningSink = std::function<void(const std::string&)>;

inline void default_warning(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

struct PureInit {
    MultiIndex state;
};

/// Product Boltzmann state. `zero_temperature` selects the ground state.
struct ThermalInit {
    double temperature = 0.0;
    bool zero_temperature = false;
};

using InitKind = std::variant<PureInit, ThermalInit>;

namespace detail {

inline double log_factorial(std::size_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline void require_length(const SymBasis& basis, const Vector& v) {
    if (static_cast<index_t>(v.size()) != basis.size()) {
        throw OperatorError("vector length " + std::to_string(v.size()) +
                            " does not match basis size " + std::to_string(basis.size()));
    }
}

} // namespace detail

inline DensityVector init_pure(const SymBasis& basis, const MultiIndex& state,
                               const WarningSink& warn = default_warning) {
    auto idx = basis.index_of(state);
    if (!idx) throw SpecError("initial quantum numbers are not a state of this basis");
    if (!is_density_element(basis.spec(), state) && warn) {
        warn("initial state is a coherence, not a physical population");
    }
    DensityVector v = DensityVector::Zero(static_cast<Eigen::Index>(basis.size()));
    v[static_cast<Eigen::Index>(*idx)] = 1.0;
    return v;
}

inline DensityVector init_thermal(const SymBasis& basis, const ThermalInit& t) {
    const auto& spec = basis.spec();
    if (!t.zero_temperature && !(t.temperature > 0.0)) {
        throw SpecError("thermal state needs a positive temperature or the zero-temperature flag");
    }
    // Boltzmann weights per level relative to the lowest energy.
    const std::size_t d = static_cast<std::size_t>(spec.d_levels);
    std::vector<double> log_p(d, -std::numeric_limits<double>::infinity());
    if (t.zero_temperature) {
        log_p[0] = 0.0;
    } else {
        double emin = spec.level_energies[0];
        for (double e : spec.level_energies) emin = std::min(emin, e);
        double z = 0.0;
        for (std::size_t k = 0; k < d; ++k) z += std::exp(-(spec.level_energies[k] - emin) / t.temperature);
        for (std::size_t k = 0; k < d; ++k) {
            log_p[k] = -(spec.level_energies[k] - emin) / t.temperature - std::log(z);
        }
    }

    const index_t f = basis.mode_block();
    std::vector<double> mode_weight(f, 0.0);
    for (index_t q = 0; q < f; ++q) {
        if (!basis.is_density_mode(q)) continue;
        double w = 1.0;
        for (std::size_t j = 0; j < spec.modes.size(); ++j) {
            const auto m = static_cast<double>(basis.mode_ket(q, j));
            if (t.zero_temperature) {
                w *= (m == 0.0) ? 1.0 : 0.0;
            } else {
                w *= std::exp(-spec.modes[j].energy * m / t.temperature);
            }
        }
        mode_weight[q] = w;
    }

    DensityVector v = DensityVector::Zero(static_cast<Eigen::Index>(basis.size()));
    const std::size_t n = spec.n_systems;
    for (index_t r = 0; r < basis.mls_size(); ++r) {
        if (!basis.is_density_mls(r)) continue;
        // multinomial(N; n_kk) * prod p_k^{n_kk}
        double log_w = detail::log_factorial(n);
        bool zero = false;
        for (std::size_t k = 0; k < d; ++k) {
            const std::size_t c = basis.dim_count(r, MLSDimId{static_cast<int>(k), static_cast<int>(k)});
            if (c == 0) continue;
            if (std::isinf(log_p[k])) {
                zero = true;
                break;
            }
            log_w += static_cast<double>(c) * log_p[k] - detail::log_factorial(c);
        }
        if (zero) continue;
        const double w = std::exp(log_w);
        for (index_t q = 0; q < f; ++q) {
            if (mode_weight[q] != 0.0) v[static_cast<Eigen::Index>(r * f + q)] = w * mode_weight[q];
        }
    }
    // Renormalize over the truncated space.
    cplx tr = 0.0;
    for (index_t s = 0; s < basis.size(); ++s) {
        if (basis.is_density(s)) tr += v[static_cast<Eigen::Index>(s)];
    }
    if (std::abs(tr) == 0.0) throw SpecError("thermal state has no weight inside the truncated basis");
    return v / tr;
}

inline DensityVector init_state(const SymBasis& basis, const InitKind& kind,
                                const WarningSink& warn = default_warning) {
    if (auto p = std::get_if<PureInit>(&kind)) return init_pure(basis, p->state, warn);
    return init_thermal(basis, std::get<ThermalInit>(kind));
}

/// Entry 1 on every density element.
inline DualVector trace_functional(const SymBasis& basis) {
    DualVector t = DualVector::Zero(static_cast<Eigen::Index>(basis.size()));
    for (index_t s = 0; s < basis.size(); ++s) {
        if (basis.is_density(s)) t[static_cast<Eigen::Index>(s)] = 1.0;
    }
    return t;
}

/// Non-conjugating pairing of a dual vector with a density vector.
inline cplx evaluate(const DualVector& dual, const DensityVector& dm) {
    if (dual.size() != dm.size()) throw OperatorError("dual and density vector lengths differ");
    return dual.transpose() * dm;
}

/// Dual of the observable represented by a one-sided (left) operator: Op^T t.
inline DualVector dual_of(const SparseOperator& op, const DualVector& trace) {
    if (op.dimension() != static_cast<index_t>(trace.size())) {
        throw OperatorError("observable operator does not match basis size");
    }
    return op.matrix().transpose() * trace;
}

namespace obs {
struct MlsOccupation {
    MLSDimId dim{1, 1};
};
struct ModeOccupation {
    std::size_t mode = 0;
};
/// Expectation of a left-acting operator; the dual is built immediately.
struct Custom {
    std::reference_wrapper<const SparseOperator> op;
};
/// <b^dag b^dag b b> / <b^dag b>^2
struct G2Zero {
    std::size_t mode = 0;
};
} // namespace obs

using ObservableKind = std::variant<obs::MlsOccupation, obs::ModeOccupation, obs::Custom, obs::G2Zero>;

/// Result of evaluating an observable; `valid` is false for an undefined ratio.
struct ObservableValue {
    double value = 0.0;
    bool valid = true;
};

/// A bound observable: a single dual, or a ratio num / den^2 of two duals.
struct Observable {
    std::string label;
    DualVector numerator;
    DualVector denominator; ///< empty unless ratio
    bool ratio = false;

    ObservableValue evaluate(const DensityVector& dm) const {
        const double num = permsym::evaluate(numerator, dm).real();
        if (!ratio) return {num, true};
        const double den = permsym::evaluate(denominator, dm).real();
        if (den == 0.0) return {std::numeric_limits<double>::quiet_NaN(), false};
        return {num / (den * den), true};
    }
};

inline Observable make_observable(const SymBasis& basis, const ObservableKind& kind,
                                  std::string label = {}) {
    Observable o;
    o.label = std::move(label);
    const index_t f = basis.mode_block();
    if (auto m = std::get_if<obs::MlsOccupation>(&kind)) {
        if (!m->dim.is_density()) {
            throw SpecError("occupation needs a density dim, got polarization " + m->dim.name());
        }
        detail::require_dim(basis, m->dim);
        o.numerator = DualVector::Zero(static_cast<Eigen::Index>(basis.size()));
        for (index_t s = 0; s < basis.size(); ++s) {
            if (basis.is_density(s)) {
                o.numerator[static_cast<Eigen::Index>(s)] =
                    static_cast<double>(basis.dim_count(s / f, m->dim));
            }
        }
    } else if (auto m = std::get_if<obs::ModeOccupation>(&kind)) {
        detail::require_mode(basis, m->mode);
        o.numerator = DualVector::Zero(static_cast<Eigen::Index>(basis.size()));
        for (index_t s = 0; s < basis.size(); ++s) {
            if (basis.is_density(s)) {
                o.numerator[static_cast<Eigen::Index>(s)] =
                    static_cast<double>(basis.mode_ket(s % f, m->mode));
            }
        }
    } else if (auto m = std::get_if<obs::Custom>(&kind)) {
        o.numerator = dual_of(m->op.get(), trace_functional(basis));
    } else {
        const auto mode = std::get<obs::G2Zero>(kind).mode;
        detail::require_mode(basis, mode);
        const auto t = trace_functional(basis);
        auto b = mode_operator(basis, mode, ModeOpKind::bL);
        auto bd = mode_operator(basis, mode, ModeOpKind::bdL);
        auto n = product(bd, b);
        o.numerator = dual_of(product(bd, product(bd, product(b, b))), t);
        o.denominator = dual_of(n, t);
        o.ratio = true;
    }
    return o;
}

namespace dist {
struct ModeNumber {
    std::size_t mode = 0;
};
struct MlsExcitation {
    MLSDimId dim{1, 1};
};
} // namespace dist

using DistributionKind = std::variant<dist::ModeNumber, dist::MlsExcitation>;

/// Real part of the density weight per quantum number; entries sum to the trace.
inline std::vector<double> distribution(const SymBasis& basis, const DensityVector& dm,
                                        const DistributionKind& kind) {
    detail::require_length(basis, dm);
    const index_t f = basis.mode_block();
    std::vector<double> out;
    if (auto m = std::get_if<dist::ModeNumber>(&kind)) {
        detail::require_mode(basis, m->mode);
        out.assign(basis.spec().modes[m->mode].fock_cutoff, 0.0);
        for (index_t s = 0; s < basis.size(); ++s) {
            if (basis.is_density(s)) out[basis.mode_ket(s % f, m->mode)] += dm[static_cast<Eigen::Index>(s)].real();
        }
    } else {
        const auto dim = std::get<dist::MlsExcitation>(kind).dim;
        if (!dim.is_density()) throw SpecError("excitation distribution needs a density dim");
        detail::require_dim(basis, dim);
        out.assign(basis.spec().n_systems + 1, 0.0);
        for (index_t s = 0; s < basis.size(); ++s) {
            if (basis.is_density(s)) out[basis.dim_count(s / f, dim)] += dm[static_cast<Eigen::Index>(s)].real();
        }
    }
    return out;
}

/// max_s |conj(P[s]) - P[transpose(s)]|; a missing partner counts as zero.
inline double hermiticity_defect(const SymBasis& basis, const DensityVector& dm) {
    detail::require_length(basis, dm);
    double worst = 0.0;
    for (index_t s = 0; s < basis.size(); ++s) {
        const cplx a = std::conj(dm[static_cast<Eigen::Index>(s)]);
        const auto t = basis.transpose_index(s);
        const cplx b = t ? dm[static_cast<Eigen::Index>(*t)] : cplx(0.0, 0.0);
        worst = std::max(worst, std::abs(a - b));
    }
    return worst;
}

} // namespace permsym
