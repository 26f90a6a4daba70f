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

/// @file terms.hpp
/// @brief Liouvillian terms: named templates or explicit operator products.

#pragma once

#include "permsym/liouville.hpp"

#include <variant>
#include <vector>

namespace permsym {

namespace factor {

/// J_xy acting on one side of rho.
struct Collective {
    Side side = Side::left;
    int x = 0;
    int y = 0;
    friend bool operator==(const Collective&, const Collective&) = default;
};

struct Mode {
    std::size_t mode = 0;
    ModeOpKind kind = ModeOpKind::bL;
    friend bool operator==(const Mode&, const Mode&) = default;
};

struct NonConnecting {
    MLSDimId dim;
    friend bool operator==(const NonConnecting&, const NonConnecting&) = default;
};

struct Connecting {
    MLSDimId inc;
    MLSDimId dec;
    friend bool operator==(const Connecting&, const Connecting&) = default;
};

} // namespace factor

using Factor = std::variant<factor::Collective, factor::Mode, factor::NonConnecting, factor::Connecting>;

/// coef * F1 * F2 * ... * Fn; the rightmost factor acts on rho first.
struct ProductTerm {
    cplx coef{1.0, 0.0};
    std::vector<Factor> factors;
    friend bool operator==(const ProductTerm&, const ProductTerm&) = default;
};

using Term = std::variant<TemplateKind, ProductTerm>;

inline SparseOperator factor_operator(const SymBasis& basis, const Factor& f) {
    SparseOperator op(basis.size());
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, factor::Collective>) {
                add_collective(op, basis, v.side, v.x, v.y, 1.0);
            } else if constexpr (std::is_same_v<T, factor::Mode>) {
                add_mode_elementary(op, basis, v.mode, v.kind, 1.0);
            } else if constexpr (std::is_same_v<T, factor::NonConnecting>) {
                add_mls_nonconnecting(op, basis, v.dim, 1.0);
            } else {
                add_mls_connecting(op, basis, v.inc, v.dec, 1.0);
            }
        },
        f);
    op.freeze();
    return op;
}

inline void add_product(SparseOperator& op, const SymBasis& basis, const ProductTerm& term) {
    detail::require_dimension(op, basis);
    if (term.factors.empty()) throw SpecError("product term needs at least one factor");
    SparseOperator acc = factor_operator(basis, term.factors.front());
    for (std::size_t i = 1; i < term.factors.size(); ++i) {
        acc = product(acc, factor_operator(basis, term.factors[i]));
    }
    axpy(op, term.coef, acc);
}

inline void add_term(SparseOperator& op, const SymBasis& basis, const Term& term) {
    if (auto t = std::get_if<TemplateKind>(&term)) {
        add_template(op, basis, *t);
    } else {
        add_product(op, basis, std::get<ProductTerm>(term));
    }
}

/// Assembles and freezes the sum of `terms`.
inline SparseOperator assemble(const SymBasis& basis, const std::vector<Term>& terms) {
    SparseOperator op(basis.size());
    for (const auto& t : terms) add_term(op, basis, t);
    op.freeze();
    return op;
}

} // namespace permsym
