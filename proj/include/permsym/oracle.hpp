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

/// @file oracle.hpp
/// @brief Brute-force reference on the full tensor-product Hilbert space.
///
/// Only meant for a handful of systems: the Hilbert dimension is capped at 64.
/// Site 0 is the most significant tensor factor, followed by sites 1..N-1 and
/// then the modes in declaration order. Superoperators act on vec(rho) in
/// column-major order, so vec(A rho B) = (B^T kron A) vec(rho).

#pragma once

#include "permsym/basis.hpp"
#include "permsym/dynamics.hpp"
#include "permsym/terms.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace permsym {

inline constexpr index_t kOracleMaxHilbert = 64;

class DenseModel {
public:
    using Matrix = Eigen::MatrixXcd;
    using Super = Eigen::SparseMatrix<cplx, Eigen::ColMajor, int>;

    explicit DenseModel(SystemSpec spec) : spec_(std::move(spec)) {
        d_ = static_cast<index_t>(spec_.d_levels);
        spin_dim_ = 1;
        for (std::size_t i = 0; i < spec_.n_systems; ++i) {
            spin_dim_ = detail::checked_mul(spin_dim_, d_);
            if (spin_dim_ > kOracleMaxHilbert) break;
        }
        mode_dim_ = 1;
        for (const auto& m : spec_.modes) mode_dim_ = detail::checked_mul(mode_dim_, m.fock_cutoff);
        if (spin_dim_ > kOracleMaxHilbert || spin_dim_ * mode_dim_ > kOracleMaxHilbert) {
            throw SpecError("dense reference limited to Hilbert dimension " +
                            std::to_string(kOracleMaxHilbert));
        }
        dim_ = spin_dim_ * mode_dim_;
        hamiltonian_ = Matrix::Zero(idx(dim_), idx(dim_));
        extra_ = Super(idx(dim_ * dim_), idx(dim_ * dim_));
    }

    const SystemSpec& spec() const { return spec_; }
    index_t hilbert_dim() const { return dim_; }
    index_t liouville_dim() const { return dim_ * dim_; }

    Matrix identity() const { return Matrix::Identity(idx(dim_), idx(dim_)); }

    /// |k><l| on one site.
    Matrix sigma(std::size_t site, int k, int l) const {
        Matrix s = Matrix::Zero(idx(d_), idx(d_));
        s(k, l) = 1.0;
        const index_t before = ipow(d_, site);
        const index_t after = ipow(d_, spec_.n_systems - site - 1) * mode_dim_;
        return kron3(Matrix::Identity(idx(before), idx(before)), s,
                     Matrix::Identity(idx(after), idx(after)));
    }

    Matrix collective(int k, int l) const {
        Matrix j = Matrix::Zero(idx(dim_), idx(dim_));
        for (std::size_t i = 0; i < spec_.n_systems; ++i) j += sigma(i, k, l);
        return j;
    }

    /// Truncated annihilation operator of mode j.
    Matrix annihilation(std::size_t mode) const {
        const index_t c = spec_.modes.at(mode).fock_cutoff;
        Matrix b = Matrix::Zero(idx(c), idx(c));
        for (index_t m = 1; m < c; ++m) b(idx(m - 1), idx(m)) = std::sqrt(static_cast<double>(m));
        index_t before = spin_dim_;
        for (std::size_t j = 0; j < mode; ++j) before *= spec_.modes[j].fock_cutoff;
        const index_t after = mode_dim_ * spin_dim_ / before / c;
        return kron3(Matrix::Identity(idx(before), idx(before)), b,
                     Matrix::Identity(idx(after), idx(after)));
    }

    Matrix creation(std::size_t mode) const { return annihilation(mode).adjoint(); }

    void add_hamiltonian(const Matrix& h) { hamiltonian_ += h; }

    /// gamma (A rho A^dag - 1/2 {A^dag A, rho})
    void add_dissipator(const Matrix& a, double gamma) {
        const Matrix ada = a.adjoint() * a;
        add_sandwich(a, a.adjoint(), gamma);
        add_sandwich(ada, identity(), -0.5 * gamma);
        add_sandwich(identity(), ada, -0.5 * gamma);
    }

    /// c * A rho B
    void add_sandwich(const Matrix& a, const Matrix& b, cplx c) {
        extra_ += c * superop(a, b);
    }

    void add_superoperator(const Super& s) { extra_ += s; }

    Super superop(const Matrix& a, const Matrix& b) const {
        Super bt = b.transpose().sparseView();
        Super as = a.sparseView();
        Super out = Eigen::kroneckerProduct(bt, as);
        out.prune(cplx(0.0, 0.0), 0.0);
        return out;
    }

    /// Adds the physical content of a term, built from Hilbert-space operators.
    void add_term(const Term& term);

    /// Superoperator of a product term, factors applied in written order.
    Super product_superop(const ProductTerm& p) const;

    /// -i [H, rho] plus all dissipative and explicit superoperator terms.
    Super liouvillian() const {
        Super l = superop(hamiltonian_, identity()) - superop(identity(), hamiltonian_);
        l *= -I;
        l += extra_;
        l.prune(cplx(0.0, 0.0), 0.0);
        return l;
    }

    /// vec(rho) index of the element rho[row, col].
    index_t vec_index(index_t row, index_t col) const { return row + col * dim_; }

    static Eigen::Index idx(index_t v) { return static_cast<Eigen::Index>(v); }

private:
    static index_t ipow(index_t b, std::size_t e) {
        index_t r = 1;
        for (std::size_t i = 0; i < e; ++i) r *= b;
        return r;
    }

    static Matrix kron3(const Matrix& a, const Matrix& b, const Matrix& c) {
        Matrix ab = Eigen::kroneckerProduct(a, b).eval();
        return Eigen::kroneckerProduct(ab, c).eval();
    }

    Super factor_superop(const Factor& f) const;

    SystemSpec spec_;
    index_t d_ = 0;
    index_t spin_dim_ = 1;
    index_t mode_dim_ = 1;
    index_t dim_ = 1;
    Matrix hamiltonian_;
    Super extra_;
};

inline DenseModel::Super DenseModel::factor_superop(const Factor& f) const {
    const Matrix id = identity();
    if (auto c = std::get_if<factor::Collective>(&f)) {
        const Matrix j = collective(c->x, c->y);
        return c->side == Side::left ? superop(j, id) : superop(id, j);
    }
    if (auto m = std::get_if<factor::Mode>(&f)) {
        const Matrix b = annihilation(m->mode);
        const Matrix bd = creation(m->mode);
        switch (m->kind) {
        case ModeOpKind::bL: return superop(b, id);
        case ModeOpKind::bR: return superop(id, b);
        case ModeOpKind::bdL: return superop(bd, id);
        case ModeOpKind::bdR: return superop(id, bd);
        case ModeOpKind::bdbL: return superop(bd * b, id);
        case ModeOpKind::bdbR: return superop(id, bd * b);
        case ModeOpKind::bbdL: return superop(b * bd, id);
        case ModeOpKind::bbdR: return superop(id, b * bd);
        case ModeOpKind::bL_bdR: return superop(b, bd);
        case ModeOpKind::bdL_bR: return superop(bd, b);
        }
    }
    Super s(idx(liouville_dim()), idx(liouville_dim()));
    if (auto n = std::get_if<factor::NonConnecting>(&f)) {
        // n_xy  <->  sum_i s_yy rho s_xx
        for (std::size_t i = 0; i < spec_.n_systems; ++i) {
            s += superop(sigma(i, n->dim.right, n->dim.right), sigma(i, n->dim.left, n->dim.left));
        }
        return s;
    }
    // inc n_xl, dec n_yk  <->  sum_i s_kl rho s_xy
    const auto& c = std::get<factor::Connecting>(f);
    for (std::size_t i = 0; i < spec_.n_systems; ++i) {
        s += superop(sigma(i, c.dec.right, c.inc.right), sigma(i, c.inc.left, c.dec.left));
    }
    return s;
}

inline DenseModel::Super DenseModel::product_superop(const ProductTerm& p) const {
    Super acc = factor_superop(p.factors.at(0));
    for (std::size_t i = 1; i < p.factors.size(); ++i) {
        Super next = acc * factor_superop(p.factors[i]);
        acc = next;
    }
    return p.coef * acc;
}

inline void DenseModel::add_term(const Term& term) {
    if (auto p = std::get_if<ProductTerm>(&term)) {
        extra_ += product_superop(*p);
        return;
    }
    const auto& t = std::get<TemplateKind>(term);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, tmpl::MlsH0>) {
                add_hamiltonian(v.omega * collective(v.level, v.level));
            } else if constexpr (std::is_same_v<T, tmpl::ModeH0>) {
                add_hamiltonian(v.omega * creation(v.mode) * annihilation(v.mode));
            } else if constexpr (std::is_same_v<T, tmpl::MlsModeRwa>) {
                add_hamiltonian(v.g * (collective(v.x, v.y) * creation(v.mode) +
                                       collective(v.y, v.x) * annihilation(v.mode)));
            } else if constexpr (std::is_same_v<T, tmpl::MlsModeNonRwa>) {
                add_hamiltonian(v.g * (collective(v.x, v.y) + collective(v.y, v.x)) *
                                (creation(v.mode) + annihilation(v.mode)));
            } else if constexpr (std::is_same_v<T, tmpl::MlsCohDrive>) {
                add_hamiltonian(v.E * (collective(v.x, v.y) + collective(v.y, v.x)));
            } else if constexpr (std::is_same_v<T, tmpl::ModeCohDrive>) {
                add_hamiltonian(v.E * (creation(v.mode) + annihilation(v.mode)));
            } else if constexpr (std::is_same_v<T, tmpl::LindbladRelaxMls>) {
                const int y = v.from.left;
                const int x = v.to.left;
                for (std::size_t i = 0; i < spec_.n_systems; ++i) {
                    add_sandwich(sigma(i, x, y), sigma(i, y, x), 2.0 * v.rate);
                    add_sandwich(sigma(i, y, y), sigma(i, y, y), -2.0 * v.rate);
                }
            } else if constexpr (std::is_same_v<T, tmpl::LindbladDephMls>) {
                for (std::size_t i = 0; i < spec_.n_systems; ++i) {
                    add_sandwich(sigma(i, v.dim.right, v.dim.right), sigma(i, v.dim.left, v.dim.left),
                                 -v.rate);
                }
            } else if constexpr (std::is_same_v<T, tmpl::MlsDecay>) {
                for (std::size_t i = 0; i < spec_.n_systems; ++i) {
                    add_dissipator(sigma(i, v.to, v.from), 2.0 * v.rate);
                }
            } else if constexpr (std::is_same_v<T, tmpl::LindbladMode>) {
                add_dissipator(annihilation(v.mode), 2.0 * v.rate);
            } else if constexpr (std::is_same_v<T, tmpl::LindbladModeThermal>) {
                add_dissipator(annihilation(v.mode), 2.0 * v.rate * (v.nbar + 1.0));
                add_dissipator(creation(v.mode), 2.0 * v.rate * v.nbar);
            }
        },
        t);
}

inline DenseModel build_dense_model(const SystemSpec& spec, const std::vector<Term>& terms) {
    DenseModel model(spec);
    for (const auto& t : terms) model.add_term(t);
    return model;
}

namespace detail {

/// All MLS pairs (k, l) with their counts for one configuration, n00 included.
inline std::vector<int> pair_sequence(const SymBasis& basis, index_t mls_row) {
    const auto& spec = basis.spec();
    const int d = spec.d_levels;
    std::vector<int> seq;
    for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
            const auto c = basis.dim_count(mls_row, MLSDimId{k, l});
            for (std::size_t i = 0; i < c; ++i) seq.push_back(k * d + l);
        }
    }
    std::sort(seq.begin(), seq.end());
    return seq;
}

} // namespace detail

/// Linear map vec(rho) -> reduced coefficients: row s holds 1 at every
/// (ket, bra) element picked out by one distinct arrangement of P(s), and
/// `multiplicity[s]` counts those arrangements.
struct Projection {
    DenseModel::Super matrix;
    std::vector<double> multiplicity;
};

inline Projection projection_map(const DenseModel& model, const SymBasis& basis) {
    const auto& spec = basis.spec();
    if (spec.n_systems != model.spec().n_systems || spec.d_levels != model.spec().d_levels ||
        spec.modes.size() != model.spec().modes.size()) {
        throw SpecError("dense model and basis describe different systems");
    }
    const int d = spec.d_levels;
    const index_t f = basis.mode_block();
    index_t mode_dim = 1;
    for (const auto& m : spec.modes) mode_dim *= m.fock_cutoff;

    std::vector<Eigen::Triplet<cplx, int>> trips;
    Projection p;
    p.multiplicity.assign(basis.size(), 0.0);
    for (index_t r = 0; r < basis.mls_size(); ++r) {
        auto seq = detail::pair_sequence(basis, r);
        std::vector<std::pair<index_t, index_t>> spin_elems; // (ket row, bra col)
        do {
            index_t ket = 0, bra = 0;
            for (int pair : seq) {
                const int k = pair / d;
                const int l = pair % d;
                // tr[|k><l| rho] = rho[l, k]
                ket = ket * static_cast<index_t>(d) + static_cast<index_t>(l);
                bra = bra * static_cast<index_t>(d) + static_cast<index_t>(k);
            }
            spin_elems.emplace_back(ket, bra);
        } while (std::next_permutation(seq.begin(), seq.end()));
        for (index_t q = 0; q < f; ++q) {
            index_t mket = 0, mbra = 0;
            for (std::size_t j = 0; j < spec.modes.size(); ++j) {
                const index_t c = spec.modes[j].fock_cutoff;
                mket = mket * c + basis.mode_ket(q, j);
                mbra = mbra * c + basis.mode_bra(q, j);
            }
            const index_t s = r * f + q;
            p.multiplicity[s] = static_cast<double>(spin_elems.size());
            for (auto [ket, bra] : spin_elems) {
                const index_t row = ket * mode_dim + mket;
                const index_t col = bra * mode_dim + mbra;
                trips.emplace_back(static_cast<int>(s), static_cast<int>(model.vec_index(row, col)), 1.0);
            }
        }
    }
    p.matrix = DenseModel::Super(DenseModel::idx(basis.size()), DenseModel::idx(model.liouville_dim()));
    p.matrix.setFromTriplets(trips.begin(), trips.end());
    return p;
}

/// Reduced coefficients tr[P(s) rho] of a full density matrix.
inline DensityVector symmetrize_project(const DenseModel& model, const SymBasis& basis,
                                        const Eigen::MatrixXcd& rho) {
    if (static_cast<index_t>(rho.rows()) != model.hilbert_dim() || rho.rows() != rho.cols()) {
        throw SpecError("density matrix does not match the dense model");
    }
    const auto p = projection_map(model, basis);
    Eigen::Map<const Vector> v(rho.data(), rho.size());
    return p.matrix * v;
}

/// Symmetric full density matrix whose projection is `dm`. Exact when every
/// MLS dim is tracked untruncated.
inline Eigen::MatrixXcd reconstruct_full(const DenseModel& model, const SymBasis& basis,
                                         const DensityVector& dm) {
    const auto p = projection_map(model, basis);
    Vector scaled = dm;
    for (Eigen::Index s = 0; s < scaled.size(); ++s) scaled[s] /= p.multiplicity[static_cast<std::size_t>(s)];
    Vector v = p.matrix.transpose() * scaled;
    const auto n = DenseModel::idx(model.hilbert_dim());
    return Eigen::Map<Eigen::MatrixXcd>(v.data(), n, n);
}

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
};

/// Classical RK4 on vec(rho) with h = t_end / ceil(t_end / dt), sampled at
/// step 0, every `sample_every`-th step and the last step.
inline Trajectory dense_evolve(const DenseModel& model, const Eigen::MatrixXcd& rho0, double dt,
                               double t_end, std::size_t sample_every = 1) {
    if (!(dt > 0.0) || !(t_end >= 0.0) || sample_every == 0) {
        throw SolverError("dense evolution needs dt > 0, t_end >= 0 and a positive cadence");
    }
    const DenseModel::Super l = model.liouvillian();
    Vector y = Eigen::Map<const Vector>(rho0.data(), rho0.size());
    const std::size_t n = t_end == 0.0 ? 0 : static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    const double h = n ? t_end / static_cast<double>(n) : 0.0;
    Trajectory tr;
    tr.times.push_back(0.0);
    tr.states.push_back(y);
    for (std::size_t step = 1; step <= n; ++step) {
        const Vector k1 = l * y;
        const Vector k2 = l * (y + 0.5 * h * k1);
        const Vector k3 = l * (y + 0.5 * h * k2);
        const Vector k4 = l * (y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite()) throw SolverError("dense evolution diverged");
        if (step % sample_every == 0 || step == n) {
            tr.times.push_back(step == n ? t_end : h * static_cast<double>(step));
            tr.states.push_back(y);
        }
    }
    return tr;
}

/// tr[O rho] for vec(rho).
inline cplx dense_expectation(const Eigen::MatrixXcd& op, const Vector& vec_rho) {
    const auto n = op.rows();
    Eigen::Map<const Eigen::MatrixXcd> rho(vec_rho.data(), n, n);
    return (op * rho).trace();
}

/// Row vector t with t * vec(rho) = tr[rho].
inline Vector dense_trace(const DenseModel& model) {
    Vector t = Vector::Zero(DenseModel::idx(model.liouville_dim()));
    for (index_t r = 0; r < model.hilbert_dim(); ++r) t[DenseModel::idx(model.vec_index(r, r))] = 1.0;
    return t;
}

/// Dual of tr[O rho].
inline Vector dense_dual(const DenseModel& model, const Eigen::MatrixXcd& op) {
    Vector t(DenseModel::idx(model.liouville_dim()));
    for (index_t r = 0; r < model.hilbert_dim(); ++r) {
        for (index_t c = 0; c < model.hilbert_dim(); ++c) {
            t[DenseModel::idx(model.vec_index(r, c))] = op(DenseModel::idx(c), DenseModel::idx(r));
        }
    }
    return t;
}

/// Dual of tr[S(rho)] for a superoperator S.
inline Vector dense_dual(const DenseModel& model, const DenseModel::Super& s) {
    return (dense_trace(model).transpose() * s).transpose();
}

/// Full-space counterpart of Observable: a dual, or num / den^2.
struct DenseObservable {
    Vector numerator;
    Vector denominator;
    bool ratio = false;

    ObservableValue evaluate(const Vector& vec_rho) const {
        const double num = (numerator.transpose() * vec_rho).value().real();
        if (!ratio) return {num, true};
        const double den = (denominator.transpose() * vec_rho).value().real();
        if (den == 0.0) return {std::numeric_limits<double>::quiet_NaN(), false};
        return {num / (den * den), true};
    }
};

/// A reduced observable with the full-space observable it should equal.
struct ObservablePair {
    std::string label;
    Observable reduced;
    DenseObservable dense;
};

struct DeviationReport {
    std::vector<std::string> labels;
    std::vector<double> observable_max; ///< per observable, max over time
    double state_max = 0.0;             ///< max |project(full) - reduced| over time and states

    double worst() const {
        double w = state_max;
        for (double v : observable_max) w = std::max(w, v);
        return w;
    }
};

inline DeviationReport compare_runs(const DenseModel& model, const SymBasis& basis,
                                    const Trajectory& reduced, const Trajectory& dense,
                                    const std::vector<ObservablePair>& observables) {
    if (reduced.times.size() != dense.times.size()) {
        throw SolverError("time grids differ: " + std::to_string(reduced.times.size()) + " vs " +
                          std::to_string(dense.times.size()) + " samples");
    }
    for (std::size_t i = 0; i < reduced.times.size(); ++i) {
        const double scale = std::max(1.0, std::abs(reduced.times[i]));
        if (std::abs(reduced.times[i] - dense.times[i]) > 1e-12 * scale) {
            throw SolverError("time grids differ at sample " + std::to_string(i));
        }
    }
    const auto p = projection_map(model, basis);
    DeviationReport rep;
    rep.observable_max.assign(observables.size(), 0.0);
    for (const auto& o : observables) rep.labels.push_back(o.label);
    for (std::size_t i = 0; i < reduced.times.size(); ++i) {
        const Vector projected = p.matrix * dense.states[i];
        rep.state_max = std::max(rep.state_max, (projected - reduced.states[i]).cwiseAbs().maxCoeff());
        for (std::size_t k = 0; k < observables.size(); ++k) {
            const auto a = observables[k].reduced.evaluate(reduced.states[i]);
            const auto b = observables[k].dense.evaluate(dense.states[i]);
            if (a.valid != b.valid) {
                rep.observable_max[k] = std::numeric_limits<double>::infinity();
            } else if (a.valid) {
                rep.observable_max[k] = std::max(rep.observable_max[k], std::abs(a.value - b.value));
            }
        }
    }
    return rep;
}

} // namespace permsym
