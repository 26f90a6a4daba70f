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

#include "permsym/builtin_models.hpp"
#include "permsym/prune.hpp"
#include "permsym/run.hpp"

#include <gtest/gtest.h>

using namespace permsym;

namespace {

ModelDocument laser_document(std::size_t n, std::size_t fock) {
    auto doc = parse_model(std::string(*builtin::find_model("ex3b")));
    auto s = doc.system;
    for (auto& d : s.tracked_dims) d.cutoff = n + 1;
    s.modes[0].fock_cutoff = fock;
    doc.system = define_system(n, s.d_levels, s.tracked_dims, s.level_energies, s.modes);
    doc.solve.config.t_end = 3;
    return doc;
}

/// Max deviation of every density observable between a pruned run and the full run.
double density_mismatch(const BuiltRun& pruned, const BuiltRun& full) {
    std::vector<Observable> obs;
    for (const auto& d : full.doc.system.tracked_dims) {
        if (d.id.is_density()) obs.push_back(make_observable(full.basis, obs::MlsOccupation{d.id}));
    }
    for (std::size_t j = 0; j < full.doc.system.modes.size(); ++j) {
        obs.push_back(make_observable(full.basis, obs::ModeOccupation{j}));
    }
    std::vector<Vector> a, b;
    evolve(pruned.solve_operator(), pruned.to_solve_space(pruned.initial), pruned.doc.solve.config,
           [&](double, const Vector& y) { a.push_back(pruned.to_full_space(y)); });
    evolve(full.L, full.initial, full.doc.solve.config, [&](double, const Vector& y) { b.push_back(y); });
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (const auto& o : obs) worst = std::max(worst, std::abs(o.evaluate(a[i]).value - o.evaluate(b[i]).value));
    }
    return worst;
}

} // namespace

TEST(Prune, ThreeLevelLaserKeepsFiveDimConfigurations) {
    for (std::size_t n : {1u, 2u, 3u, 4u}) {
        auto doc = laser_document(n, 3);
        const auto run = build_run(doc, nullptr);
        ASSERT_TRUE(run.pruned.has_value());
        EXPECT_EQ(run.pruned->size(), dimension_count(n, 5) * 9) << n;
        EXPECT_EQ(run.pruned->kept_configurations.size(), dimension_count(n, 5)) << n;
        // every kept configuration has no coherence involving level 2
        for (auto r : run.pruned->kept_configurations) {
            for (MLSDimId d : {MLSDimId{2, 0}, MLSDimId{0, 2}, MLSDimId{2, 1}, MLSDimId{1, 2}}) {
                EXPECT_EQ(run.basis.dim_count(r, d), 0u);
            }
        }
    }
}

TEST(Prune, ObservablesMatchUnprunedRun) {
    auto doc = laser_document(3, 4);
    const auto pruned = build_run(doc, nullptr);
    doc.solve.prune_enabled = false;
    const auto full = build_run(doc, nullptr);
    EXPECT_LT(pruned.solve_size(), full.solve_size());
    EXPECT_LT(density_mismatch(pruned, full), 1e-12);
}

TEST(Prune, StateGranularityIsFinerAndExact) {
    auto doc = laser_document(2, 4);
    const auto cfg = build_run(doc, nullptr);
    doc.solve.prune = PruneGranularity::state;
    const auto st = build_run(doc, nullptr);
    EXPECT_LE(st.pruned->size(), cfg.pruned->size());
    for (auto s : st.pruned->kept) EXPECT_TRUE(cfg.pruned->reduced_index(s).has_value());
    doc.solve.prune_enabled = false;
    const auto full = build_run(doc, nullptr);
    EXPECT_LT(density_mismatch(st, full), 1e-12);
}

TEST(Prune, FullyDrivenLambdaKeepsEverything) {
    auto doc = parse_model(std::string(*builtin::find_model("ex3a")));
    doc.solve.config.t_end = 2;
    doc.solve.prune_enabled = true;
    const auto pruned = build_run(doc, nullptr);
    EXPECT_EQ(pruned.pruned->size(), pruned.basis.size());
    doc.solve.prune_enabled = false;
    const auto full = build_run(doc, nullptr);
    EXPECT_LT(density_mismatch(pruned, full), 1e-12);
}

TEST(Prune, ClosureIsForwardInvariant) {
    auto doc = laser_document(2, 3);
    doc.solve.prune = PruneGranularity::state;
    const auto run = build_run(doc, nullptr);
    const auto& m = run.L.matrix();
    // no kept column feeds a removed row
    for (int r = 0; r < m.outerSize(); ++r) {
        if (run.pruned->reduced_index(static_cast<index_t>(r))) continue;
        for (SparseOperator::Matrix::InnerIterator it(m, r); it; ++it) {
            EXPECT_FALSE(run.pruned->reduced_index(static_cast<index_t>(it.col())).has_value());
        }
    }
}

TEST(Prune, RestrictExpandRoundTrip) {
    auto doc = laser_document(2, 3);
    const auto run = build_run(doc, nullptr);
    const auto& p = *run.pruned;
    Vector r = Vector::LinSpaced(static_cast<Eigen::Index>(p.size()), 1.0, 2.0);
    EXPECT_EQ(p.restrict(p.expand(r)), r);
    EXPECT_EQ(p.op.dimension(), p.size());
    EXPECT_TRUE(p.op.frozen());
    EXPECT_FALSE(p.reduced_index(run.basis.size() + 5).has_value());
}

TEST(Prune, Errors) {
    auto doc = laser_document(2, 3);
    const auto run = build_run(doc, nullptr);
    EXPECT_THROW(prune_reachable(run.basis, run.L, {}), SpecError);
    EXPECT_THROW(prune_reachable(run.basis, run.L, {run.basis.size()}), SpecError);
    SparseOperator small(3);
    small.freeze();
    EXPECT_THROW(prune_reachable(run.basis, small, {0}), OperatorError);
}
