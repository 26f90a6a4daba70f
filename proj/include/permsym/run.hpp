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

/// @file run.hpp
/// @brief From a model document to observable files.
///
/// Property file layout:
///
/// @code
/// # t <label_1> ... <label_k>
/// # system N=<N> levels=<d> dims=<n11,...> modes=<name:fock,...>
/// # energies levels=<e0,e1,...> modes=<w0,...>
/// # term <canonical term line>          (one per term)
/// # basis size=<n> solved=<m> nnz=<nnz> dropped_arrows=<k>
/// # solve <method|steady> dt=<dt> t_end=<T> monitor_every=<c>
/// <t> <v_1> ... <v_k>                   (%.16e, nan for undefined ratios)
/// @endcode
///
/// A steady-state run writes one data row with time `inf`. A run that fails
/// after its files were opened appends `# RUN FAILED: <reason>`.

#pragma once

#include "permsym/basis.hpp"
#include "permsym/dynamics.hpp"
#include "permsym/integrators.hpp"
#include "permsym/model.hpp"
#include "permsym/prune.hpp"
#include "permsym/steady_state.hpp"
#include "permsym/terms.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace permsym {

/// Command-line adjustments applied on top of a document.
struct RunOverrides {
    std::optional<std::size_t> monitor_every;
    std::optional<double> dt;
    std::optional<double> t_end;
    bool steady = false;
    std::optional<PruneGranularity> prune;
};

inline ModelDocument apply_overrides(ModelDocument doc, const RunOverrides& o) {
    if (o.monitor_every) {
        if (*o.monitor_every == 0) throw SpecError("monitor_every must be positive");
        doc.output.monitor_every = *o.monitor_every;
        doc.solve.config.monitor_every = *o.monitor_every;
    }
    if (o.dt) {
        if (!(*o.dt > 0.0)) throw SpecError("dt must be positive");
        doc.solve.config.dt = *o.dt;
    }
    if (o.t_end) {
        if (!(*o.t_end > 0.0)) throw SpecError("t_end must be positive");
        doc.solve.config.t_end = *o.t_end;
    }
    if (o.steady) doc.solve.steady = true;
    if (o.prune) {
        doc.solve.prune_enabled = true;
        doc.solve.prune = *o.prune;
    }
    return doc;
}

/// Everything needed to solve a document.
struct BuiltRun {
    ModelDocument doc;
    SymBasis basis;
    SparseOperator L;
    DensityVector initial;
    DualVector trace;
    std::vector<Observable> observables;
    std::optional<PrunedSystem> pruned;
    double build_seconds = 0.0;

    /// Operator, state and functionals in the space actually solved.
    const SparseOperator& solve_operator() const { return pruned ? pruned->op : L; }
    index_t solve_size() const { return pruned ? pruned->size() : basis.size(); }
    Vector to_solve_space(const Vector& full) const { return pruned ? pruned->restrict(full) : full; }
    Vector to_full_space(const Vector& v) const { return pruned ? pruned->expand(v) : v; }
};

/// Observable bound to a declaration.
inline Observable bind_observable(const SymBasis& basis, const ObservableDecl& decl) {
    switch (decl.type) {
    case ObservableType::mls_occupation:
        return make_observable(basis, obs::MlsOccupation{decl.dim}, decl.label);
    case ObservableType::mode_occupation:
        return make_observable(basis, obs::ModeOccupation{decl.mode}, decl.label);
    case ObservableType::g2:
        return make_observable(basis, obs::G2Zero{decl.mode}, decl.label);
    case ObservableType::product: {
        const SparseOperator op = assemble(basis, {Term{decl.product}});
        return make_observable(basis, obs::Custom{std::cref(op)}, decl.label);
    }
    }
    throw SpecError("unknown observable type");
}

/// Assembles every term in document order, with the term's line on error.
inline SparseOperator assemble_document(const SymBasis& basis, const ModelDocument& doc) {
    SparseOperator L(basis.size());
    for (const auto& t : doc.terms) {
        try {
            add_term(L, basis, t.term);
        } catch (const Error& e) {
            throw SpecError("term on line " + std::to_string(t.line) + ": " + e.what());
        }
    }
    L.freeze();
    return L;
}

inline BuiltRun build_run(const ModelDocument& doc, const WarningSink& warn = default_warning) {
    const auto start = std::chrono::steady_clock::now();
    BuiltRun run{doc, SymBasis(doc.system), SparseOperator(0), {}, {}, {}, std::nullopt, 0.0};
    run.L = assemble_document(run.basis, doc);
    run.initial = init_state(run.basis, doc.initial, warn);
    run.trace = trace_functional(run.basis);
    for (const auto& o : doc.output.observables) run.observables.push_back(bind_observable(run.basis, o));
    if (doc.solve.prune_enabled) {
        std::vector<index_t> support;
        for (index_t s = 0; s < run.basis.size(); ++s) {
            if (run.initial[static_cast<Eigen::Index>(s)] != cplx(0.0, 0.0)) support.push_back(s);
        }
        run.pruned = prune_reachable(run.basis, run.L, support, doc.solve.prune);
    }
    run.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

inline BuiltRun build_run(const std::string& text, const WarningSink& warn = default_warning) {
    return build_run(parse_model(text), warn);
}

struct RunReport {
    index_t basis_size = 0;
    index_t solved_size = 0;
    std::size_t nnz = 0;
    std::size_t dropped_arrows = 0;
    double build_seconds = 0.0;
    double solve_seconds = 0.0;
    double write_seconds = 0.0;
    EvolveStats evolve;
    std::optional<SteadyStateResult> steady;
    std::vector<std::string> output_files;
};

namespace detail {

inline std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline std::string join_reals(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_real(v[i]);
    return s;
}

/// An output file owned by one run.
class OutputFile {
public:
    explicit OutputFile(const std::filesystem::path& path) : path_(path), out_(path) {
        if (!out_) throw Error("cannot open output file " + path.string());
    }

    std::ofstream& stream() { return out_; }
    const std::filesystem::path& path() const { return path_; }

    void check() {
        if (!out_) throw Error("write failed on " + path_.string());
    }

    void fail(const std::string& reason) {
        out_.clear();
        out_ << "# RUN FAILED: " << reason << "\n";
        out_.flush();
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

inline void write_header(std::ostream& out, const BuiltRun& run) {
    const auto& doc = run.doc;
    const auto& s = doc.system;
    out << "# t";
    for (const auto& o : run.observables) out << " " << o.label;
    out << "\n# system N=" << s.n_systems << " levels=" << s.d_levels << " dims=";
    for (std::size_t i = 0; i < s.tracked_dims.size(); ++i) {
        out << (i ? "," : "") << s.tracked_dims[i].id.name() << ":" << s.tracked_dims[i].cutoff;
    }
    out << " modes=";
    for (std::size_t j = 0; j < s.modes.size(); ++j) out << (j ? "," : "") << s.modes[j].name << ":" << s.modes[j].fock_cutoff;
    out << "\n# energies levels=" << join_reals(s.level_energies) << " modes=";
    std::vector<double> me;
    for (const auto& m : s.modes) me.push_back(m.energy);
    out << join_reals(me) << "\n";
    for (const auto& t : doc.terms) out << "# term " << print_term(s, t.term) << "\n";
    out << "# basis size=" << run.basis.size() << " solved=" << run.solve_size()
        << " nnz=" << run.L.nnz() << " dropped_arrows=" << run.L.dropped_arrows() << "\n";
    const auto& c = doc.solve.config;
    if (doc.solve.steady) {
        out << "# solve steady\n";
    } else {
        out << "# solve " << (c.method == Method::rk4_fixed ? "rk4" : "rk_adaptive") << " dt=" << format_real(c.dt)
            << " t_end=" << format_real(c.t_end) << " monitor_every=" << c.monitor_every << "\n";
    }
}

inline void write_row(std::ostream& out, double t, const std::vector<Observable>& observables,
                      const DensityVector& dm) {
    out << format_value(t);
    for (const auto& o : observables) {
        const auto v = o.evaluate(dm);
        out << " " << format_value(v.valid ? v.value : std::numeric_limits<double>::quiet_NaN());
    }
    out << "\n";
}

inline void write_distribution_block(std::ostream& out, double t, const std::vector<double>& p) {
    out << "# t=" << format_value(t) << "\n";
    for (std::size_t i = 0; i < p.size(); ++i) out << i << " " << format_value(p[i]) << "\n";
    out << "\n";
}

} // namespace detail

/// Solves a built run and writes its files under `out_dir`.
inline RunReport execute_run(const BuiltRun& run, const std::filesystem::path& out_dir) {
    RunReport rep;
    rep.basis_size = run.basis.size();
    rep.solved_size = run.solve_size();
    rep.nnz = run.L.nnz();
    rep.dropped_arrows = run.L.dropped_arrows();
    rep.build_seconds = run.build_seconds;

    std::filesystem::create_directories(out_dir);
    std::vector<std::unique_ptr<detail::OutputFile>> files;
    try {
        files.push_back(std::make_unique<detail::OutputFile>(out_dir / run.doc.output.file));
        for (const auto& d : run.doc.output.distributions) {
            files.push_back(std::make_unique<detail::OutputFile>(out_dir / d.file));
        }
    } catch (const std::exception& e) {
        for (auto& f : files) f->fail(e.what());
        throw;
    }
    for (const auto& f : files) rep.output_files.push_back(f->path().string());

    double write_time = 0.0;
    auto emit = [&](double t, const Vector& y) {
        const auto w0 = std::chrono::steady_clock::now();
        const Vector full = run.to_full_space(y);
        detail::write_row(files[0]->stream(), t, run.observables, full);
        files[0]->check();
        for (std::size_t i = 0; i < run.doc.output.distributions.size(); ++i) {
            detail::write_distribution_block(files[i + 1]->stream(), t,
                                             distribution(run.basis, full, run.doc.output.distributions[i].kind));
            files[i + 1]->check();
        }
        write_time += std::chrono::duration<double>(std::chrono::steady_clock::now() - w0).count();
    };

    const auto start = std::chrono::steady_clock::now();
    try {
        detail::write_header(files[0]->stream(), run);
        for (std::size_t i = 0; i < run.doc.output.distributions.size(); ++i) {
            auto& out = files[i + 1]->stream();
            out << "# distribution ";
            if (auto m = std::get_if<dist::ModeNumber>(&run.doc.output.distributions[i].kind)) {
                out << "mode_number " << run.doc.system.modes.at(m->mode).name << "\n";
            } else {
                out << "mls_excitation " << std::get<dist::MlsExcitation>(run.doc.output.distributions[i].kind).dim.name()
                    << "\n";
            }
        }
        const Vector y0 = run.to_solve_space(run.initial);
        if (run.doc.solve.steady) {
            rep.steady = steady_state(run.solve_operator(), run.to_solve_space(run.trace));
            emit(std::numeric_limits<double>::infinity(), rep.steady->state);
        } else {
            evolve(run.solve_operator(), y0, run.doc.solve.config, emit, &rep.evolve);
        }
    } catch (const std::exception& e) {
        for (auto& f : files) f->fail(e.what());
        throw;
    }
    for (auto& f : files) {
        f->stream().flush();
        f->check();
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep.write_seconds = write_time;
    rep.solve_seconds = total - write_time;
    return rep;
}

} // namespace permsym
