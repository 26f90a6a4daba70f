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

/// @file permsym_cli.cpp
/// @brief `permsym run|examples|dims|verify`.

#include "permsym/builtin_models.hpp"
#include "permsym/permsym.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace permsym;

struct RunFlags {
    std::size_t monitor_every = 0;
    double dt = 0.0;
    double t_end = 0.0;
    bool steady = false;
    std::string prune;
    std::string out_dir = ".";
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--monitor-every", f.monitor_every, "Write a row every n-th step (default 30)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out-dir", f.out_dir, "Directory for output files");
    cmd->add_option("--dt", f.dt, "Time step")->check(CLI::PositiveNumber);
    cmd->add_option("--t-end", f.t_end, "Final time")->check(CLI::PositiveNumber);
    cmd->add_flag("--steady", f.steady, "Solve for the steady state instead of integrating");
    cmd->add_option("--prune", f.prune, "Reachability pruning")
        ->expected(0, 1)
        ->default_str("configurations")
        ->check(CLI::IsMember({"configurations", "states"}));
}

RunOverrides to_overrides(const RunFlags& f, const CLI::App* cmd) {
    RunOverrides o;
    if (cmd->count("--monitor-every")) o.monitor_every = f.monitor_every;
    if (cmd->count("--dt")) o.dt = f.dt;
    if (cmd->count("--t-end")) o.t_end = f.t_end;
    o.steady = f.steady;
    if (cmd->count("--prune")) {
        o.prune = f.prune == "states" ? PruneGranularity::state : PruneGranularity::configuration;
    }
    return o;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Built-in name or path to a model file.
std::string load_model(const std::string& name_or_path) {
    if (auto m = builtin::find_model(name_or_path)) return std::string(*m);
    return read_file(name_or_path);
}

int run_document(const std::string& text, const RunFlags& flags, const CLI::App* cmd) {
    ModelDocument doc = apply_overrides(parse_model(text), to_overrides(flags, cmd));
    if (doc.solve.steady && cmd->count("--steady") == 0 && cmd->count("--dt") + cmd->count("--t-end") > 0) {
        std::cerr << "note: the document requests a steady state; --dt/--t-end are ignored\n";
    }
    const BuiltRun run = build_run(doc);
    const RunReport rep = execute_run(run, flags.out_dir);
    std::printf("basis size      %llu\n", static_cast<unsigned long long>(rep.basis_size));
    if (run.pruned) std::printf("after pruning   %llu\n", static_cast<unsigned long long>(rep.solved_size));
    std::printf("nonzeros        %zu\n", rep.nnz);
    std::printf("dropped arrows  %zu\n", rep.dropped_arrows);
    if (rep.steady) {
        std::printf("steady residual %.3e (relative %.3e, %d refinement steps)\n", rep.steady->residual,
                    rep.steady->relative_residual, rep.steady->iterations);
    } else {
        std::printf("steps           %zu accepted, %zu rejected, %zu rhs evaluations\n", rep.evolve.accepted,
                    rep.evolve.rejected, rep.evolve.rhs_evaluations);
    }
    std::printf("time [s]        build %.3f  solve %.3f  write %.3f\n", rep.build_seconds, rep.solve_seconds,
                rep.write_seconds);
    for (const auto& f : rep.output_files) std::printf("wrote           %s\n", f.c_str());
    return 0;
}

std::string fmt_count(index_t a, index_t b) {
    try {
        return std::to_string(detail::checked_mul(a, b));
    } catch (const OverflowError&) {
        return "overflow";
    }
}

int print_dims(int levels, std::size_t max_n) {
    const std::size_t m = static_cast<std::size_t>(levels * levels);
    std::printf("# N full(%d^N) symmetric(binomial(N+%zu,N))", levels * levels, m - 1);
    if (levels == 3) std::printf(" reduced_laser(binomial(N+4,N))");
    std::printf("\n");
    index_t full = 1;
    bool overflow = false;
    for (std::size_t n = 1; n <= max_n; ++n) {
        if (!overflow) {
            try {
                full = detail::checked_mul(full, static_cast<index_t>(m));
            } catch (const OverflowError&) {
                overflow = true;
            }
        }
        std::printf("%zu %s %llu", n, overflow ? "overflow" : std::to_string(full).c_str(),
                    static_cast<unsigned long long>(dimension_count(n, m)));
        if (levels == 3) std::printf(" %llu", static_cast<unsigned long long>(dimension_count(n, 5)));
        std::printf("\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Permutation-symmetric Lindblad master equation solver"};
    app.require_subcommand(1);

    RunFlags run_flags;
    std::string model_path;
    auto* run_cmd = app.add_subcommand("run", "Solve a model file");
    run_cmd->add_option("model", model_path, "Model file")->required();
    add_run_flags(run_cmd, run_flags);

    RunFlags ex_flags;
    std::string example;
    bool print_only = false;
    auto* ex_cmd = app.add_subcommand("examples", "Run (or print) a built-in example");
    std::vector<std::string> names;
    for (const auto& [n, text] : builtin::kModels) names.emplace_back(n);
    ex_cmd->add_option("name", example, "Example name")->required()->check(CLI::IsMember(names));
    ex_cmd->add_flag("--print", print_only, "Print the model document and exit");
    add_run_flags(ex_cmd, ex_flags);

    int levels = 2;
    std::size_t max_n = 20;
    auto* dims_cmd = app.add_subcommand("dims", "Print full vs symmetric Liouville space sizes");
    dims_cmd->add_option("--levels", levels, "Levels per system")->check(CLI::Range(2, 10));
    dims_cmd->add_option("--max-n", max_n, "Largest N")->check(CLI::Range(1, 1000));

    std::string verify_target;
    std::size_t verify_n = 2;
    std::size_t verify_fock = 4;
    double verify_tol = 1e-8;
    double verify_dt = 0.0;
    double verify_t_end = 0.0;
    auto* verify_cmd = app.add_subcommand("verify", "Compare against the dense reference at small N");
    verify_cmd->add_option("model", verify_target, "Built-in example name or model file")->required();
    verify_cmd->add_option("--n", verify_n, "Number of systems")->check(CLI::Range(1, 6));
    verify_cmd->add_option("--fock", verify_fock, "Largest Fock cutoff")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--tol", verify_tol, "Pass threshold on the maximum deviation");
    verify_cmd->add_option("--dt", verify_dt, "Time step")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--t-end", verify_t_end, "Final time")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return run_document(read_file(model_path), run_flags, run_cmd);
        if (*ex_cmd) {
            const std::string text(*builtin::find_model(example));
            if (print_only) {
                std::cout << text;
                return 0;
            }
            return run_document(text, ex_flags, ex_cmd);
        }
        if (*dims_cmd) return print_dims(levels, max_n);
        if (*verify_cmd) {
            VerifyOptions opt;
            opt.n_systems = verify_n;
            opt.max_fock = verify_fock;
            if (verify_cmd->count("--dt")) opt.dt = verify_dt;
            if (verify_cmd->count("--t-end")) opt.t_end = verify_t_end;
            const auto res = verify_document(parse_model(load_model(verify_target)), opt);
            const auto& s = res.system;
            std::printf("system          N=%zu levels=%d", s.n_systems, s.d_levels);
            for (const auto& m : s.modes) std::printf(" %s:fock=%zu", m.name.c_str(), m.fock_cutoff);
            std::printf("\nsamples         %zu\n", res.samples);
            for (std::size_t i = 0; i < res.report.labels.size(); ++i) {
                std::printf("%-15s %.3e\n", res.report.labels[i].c_str(), res.report.observable_max[i]);
            }
            std::printf("state           %.3e\n", res.report.state_max);
            std::printf("trace defect    %.3e\n", res.max_trace_defect);
            std::printf("hermiticity     %.3e\n", res.max_hermiticity_defect);
            const double worst = res.report.worst();
            std::printf("max deviation   %.3e (%s, tolerance %.1e)\n", worst, worst < verify_tol ? "pass" : "FAIL",
                        verify_tol);
            return worst < verify_tol ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
