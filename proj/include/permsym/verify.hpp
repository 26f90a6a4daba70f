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

/// @file verify.hpp
/// @brief Runs a model document through both the reduced solver and the
/// dense reference at equal RK4 steps and reports the largest deviation.

#pragma once

#include "permsym/model.hpp"
#include "permsym/oracle.hpp"
#include "permsym/run.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace permsym {

struct VerifyOptions {
    std::optional<std::size_t> n_systems; ///< default: keep the document's N
    std::size_t max_fock = 4;
    std::optional<double> dt;
    std::optional<double> t_end;
    std::size_t sample_every = 1;
};

struct VerifyResult {
    SystemSpec system; ///< the system actually compared
    DeviationReport report;
    std::size_t samples = 0;
    double max_trace_defect = 0.0;
    double max_hermiticity_defect = 0.0;
};

/// Shrinks a document to a size the dense reference can hold: N replaced,
/// MLS cutoffs clamped to N + 1, Fock cutoffs clamped to `max_fock` and then
/// lowered (largest first) until the Hilbert dimension fits.
inline ModelDocument shrink_for_oracle(ModelDocument doc, std::optional<std::size_t> n, std::size_t max_fock) {
    if (max_fock == 0) throw SpecError("Fock cutoff for verification must be positive");
    auto s = doc.system;
    if (n) s.n_systems = *n;
    for (auto& d : s.tracked_dims) d.cutoff = std::min<std::size_t>(d.cutoff, s.n_systems + 1);
    for (auto& m : s.modes) m.fock_cutoff = std::min(m.fock_cutoff, max_fock);
    index_t spin = 1;
    for (std::size_t i = 0; i < s.n_systems; ++i) {
        spin = detail::checked_mul(spin, static_cast<index_t>(s.d_levels));
        if (spin > kOracleMaxHilbert) {
            throw SpecError("N = " + std::to_string(s.n_systems) + " is too large for the dense reference");
        }
    }
    auto hilbert = [&] {
        index_t h = spin;
        for (const auto& m : s.modes) h *= m.fock_cutoff;
        return h;
    };
    while (hilbert() > kOracleMaxHilbert) {
        auto it = std::max_element(s.modes.begin(), s.modes.end(),
                                   [](const ModeSpec& a, const ModeSpec& b) { return a.fock_cutoff < b.fock_cutoff; });
        --it->fock_cutoff;
    }
    doc.system = define_system(s.n_systems, s.d_levels, s.tracked_dims, s.level_energies, s.modes);
    if (auto p = std::get_if<PureInit>(&doc.initial)) {
        if (!SymBasis(doc.system).index_of(p->state)) {
            throw SpecError("the pure initial state does not fit the shrunken system (N = " +
                            std::to_string(s.n_systems) + ")");
        }
    }
    return doc;
}

/// Full-space counterpart of a declared observable.
inline DenseObservable dense_observable(const DenseModel& model, const ObservableDecl& decl) {
    DenseObservable o;
    switch (decl.type) {
    case ObservableType::mls_occupation:
        o.numerator = dense_dual(model, model.collective(decl.dim.left, decl.dim.right));
        break;
    case ObservableType::mode_occupation:
        o.numerator = dense_dual(model, model.creation(decl.mode) * model.annihilation(decl.mode));
        break;
    case ObservableType::g2: {
        const auto b = model.annihilation(decl.mode);
        const auto bd = model.creation(decl.mode);
        o.numerator = dense_dual(model, (bd * bd * b * b).eval());
        o.denominator = dense_dual(model, (bd * b).eval());
        o.ratio = true;
        break;
    }
    case ObservableType::product:
        o.numerator = dense_dual(model, model.product_superop(decl.product));
        break;
    }
    return o;
}

/// Declared observables plus the occupation of every tracked density dim
/// and every mode that is not already declared.
inline std::vector<ObservableDecl> verification_observables(const ModelDocument& doc) {
    auto out = doc.output.observables;
    auto has = [&](ObservableType t, MLSDimId d, std::size_t m) {
        for (const auto& o : out) {
            if (o.type != t) continue;
            if (t == ObservableType::mls_occupation && o.dim == d) return true;
            if (t == ObservableType::mode_occupation && o.mode == m) return true;
        }
        return false;
    };
    for (const auto& d : doc.system.tracked_dims) {
        if (d.id.is_density() && !has(ObservableType::mls_occupation, d.id, 0)) {
            ObservableDecl o;
            o.label = "<J_" + d.id.name().substr(1) + ">";
            o.type = ObservableType::mls_occupation;
            o.dim = d.id;
            out.push_back(o);
        }
    }
    for (std::size_t j = 0; j < doc.system.modes.size(); ++j) {
        if (!has(ObservableType::mode_occupation, MLSDimId{0, 0}, j)) {
            ObservableDecl o;
            o.label = "<n_" + doc.system.modes[j].name + ">";
            o.type = ObservableType::mode_occupation;
            o.mode = j;
            out.push_back(o);
        }
    }
    return out;
}

/// Compares reduced and dense RK4 trajectories of a shrunken copy of `doc`.
inline VerifyResult verify_document(const ModelDocument& doc, const VerifyOptions& options = {}) {
    const ModelDocument small = shrink_for_oracle(doc, options.n_systems, options.max_fock);
    SolverConfig config = small.solve.config;
    config.method = Method::rk4_fixed;
    if (options.dt) config.dt = *options.dt;
    if (options.t_end) config.t_end = *options.t_end;
    config.monitor_every = options.sample_every;

    const SymBasis basis(small.system);
    const SparseOperator L = assemble_document(basis, small);
    const DensityVector y0 = init_state(basis, small.initial, [](const std::string&) {});
    const DenseModel model = build_dense_model(small.system, small.term_list());
    const Eigen::MatrixXcd rho0 = reconstruct_full(model, basis, y0);

    VerifyResult res;
    res.system = small.system;
    const auto trace = trace_functional(basis);
    Trajectory reduced;
    evolve(L, y0, config, [&](double t, const Vector& y) {
        reduced.times.push_back(t);
        reduced.states.push_back(y);
        res.max_trace_defect = std::max(res.max_trace_defect, std::abs(evaluate(trace, y) - 1.0));
        res.max_hermiticity_defect = std::max(res.max_hermiticity_defect, hermiticity_defect(basis, y));
    });
    const Trajectory dense = dense_evolve(model, rho0, config.dt, config.t_end, options.sample_every);

    std::vector<ObservablePair> pairs;
    for (const auto& decl : verification_observables(small)) {
        pairs.push_back({decl.label, bind_observable(basis, decl), dense_observable(model, decl)});
    }
    res.report = compare_runs(model, basis, reduced, dense, pairs);
    res.samples = reduced.times.size();
    return res;
}

} // namespace permsym
