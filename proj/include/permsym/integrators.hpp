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

/// @file integrators.hpp
/// @brief Explicit Runge-Kutta integration of d/dt P = L P.

#pragma once

#include "permsym/sparse_operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>

namespace permsym {

enum class Method { rk4_fixed, rk_adaptive_32 };

struct SolverConfig {
    Method method = Method::rk4_fixed;
    double t_end = 1.0;
    double dt = 1e-2;         ///< fixed step; initial step for the adaptive method
    double rtol = 1e-8;
    double atol = 1e-10;
    double dt_min = 1e-14;
    double dt_max = std::numeric_limits<double>::infinity();
    std::size_t monitor_every = 30;
    std::size_t max_steps = 100000000;
};

struct EvolveStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evaluations = 0;
    std::size_t monitor_calls = 0;
    double final_time = 0.0;
};

/// Called with (time, state) at step 0, after every `monitor_every`-th
/// accepted step, and at t_end when that is not already a monitored step.
using Monitor = std::function<void(double, const Vector&)>;

/// Number of fixed steps for `config`: ceil(t_end / dt), the step itself being t_end / n.
inline std::size_t fixed_step_count(const SolverConfig& config) {
    if (!(config.dt > 0.0) || !(config.t_end >= 0.0) || !std::isfinite(config.t_end)) {
        throw SolverError("fixed-step integration needs dt > 0 and a finite t_end >= 0");
    }
    if (config.t_end == 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(config.t_end / config.dt - 1e-9));
}

namespace detail {

inline void require_finite(const Vector& y, double t) {
    if (!y.allFinite()) {
        throw SolverError("state became non-finite at t = " + std::to_string(t) +
                          "; reduce the step size or check the model");
    }
}

inline void validate(const SparseOperator& L, const Vector& y0, const SolverConfig& c) {
    if (static_cast<index_t>(y0.size()) != L.dimension()) {
        throw OperatorError("initial vector length does not match operator dimension");
    }
    if (!y0.allFinite()) throw SolverError("initial vector is not finite");
    if (c.monitor_every == 0) throw SolverError("monitor cadence must be positive");
    if (!(c.t_end >= 0.0) || !std::isfinite(c.t_end)) throw SolverError("t_end must be finite and >= 0");
    if (c.method == Method::rk_adaptive_32) {
        if (!(c.rtol > 0.0) || !(c.atol > 0.0)) throw SolverError("rtol and atol must be positive");
        if (!(c.dt_min > 0.0) || !(c.dt_max >= c.dt_min) || !(c.dt > 0.0)) {
            throw SolverError("adaptive step bounds must satisfy 0 < dt_min <= dt_max and dt > 0");
        }
    }
}

inline Vector evolve_rk4(const SparseOperator& L, Vector y, const SolverConfig& c,
                         const Monitor& monitor, EvolveStats& stats) {
    const std::size_t n = fixed_step_count(c);
    const double h = n ? c.t_end / static_cast<double>(n) : 0.0;
    const Eigen::Index dim = y.size();
    Vector k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    if (monitor) monitor(0.0, y), ++stats.monitor_calls;
    for (std::size_t step = 1; step <= n; ++step) {
        L.apply(y, k1);
        tmp = y + (0.5 * h) * k1;
        L.apply(tmp, k2);
        tmp = y + (0.5 * h) * k2;
        L.apply(tmp, k3);
        tmp = y + h * k3;
        L.apply(tmp, k4);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        stats.rhs_evaluations += 4;
        ++stats.accepted;
        const double t = step == n ? c.t_end : h * static_cast<double>(step);
        require_finite(y, t);
        if (monitor && (step % c.monitor_every == 0 || step == n)) {
            monitor(t, y);
            ++stats.monitor_calls;
        }
    }
    stats.final_time = c.t_end;
    return y;
}

// Bogacki-Shampine 3(2) with first-same-as-last and a PI step controller.
inline Vector evolve_bs32(const SparseOperator& L, Vector y, const SolverConfig& c,
                          const Monitor& monitor, EvolveStats& stats) {
    const Eigen::Index dim = y.size();
    Vector k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim), y_new(dim), err(dim);
    constexpr double safety = 0.9;
    constexpr double alpha = 0.7 / 3.0;
    constexpr double beta = 0.4 / 3.0;
    double t = 0.0;
    double h = std::min(c.dt, c.dt_max);
    double prev_err = 1.0;
    if (monitor) monitor(0.0, y), ++stats.monitor_calls;
    if (c.t_end == 0.0) return y;
    L.apply(y, k1);
    ++stats.rhs_evaluations;
    while (t < c.t_end) {
        if (stats.accepted + stats.rejected >= c.max_steps) {
            throw SolverError("adaptive integration exceeded " + std::to_string(c.max_steps) + " steps");
        }
        bool final_step = false;
        if (t + h >= c.t_end || c.t_end - (t + h) < c.dt_min) {
            h = c.t_end - t;
            final_step = true;
        }
        tmp = y + (0.5 * h) * k1;
        L.apply(tmp, k2);
        tmp = y + (0.75 * h) * k2;
        L.apply(tmp, k3);
        y_new = y + h * ((2.0 / 9.0) * k1 + (1.0 / 3.0) * k2 + (4.0 / 9.0) * k3);
        L.apply(y_new, k4);
        stats.rhs_evaluations += 3;
        err = h * ((-5.0 / 72.0) * k1 + (1.0 / 12.0) * k2 + (1.0 / 9.0) * k3 + (-1.0 / 8.0) * k4);
        const double scale = c.atol + c.rtol * std::max(y.cwiseAbs().maxCoeff(), y_new.cwiseAbs().maxCoeff());
        const double e = err.cwiseAbs().maxCoeff() / scale;
        if (!std::isfinite(e)) {
            throw SolverError("state became non-finite near t = " + std::to_string(t) +
                              "; check the model");
        }
        if (e <= 1.0) {
            t = final_step ? c.t_end : t + h;
            y.swap(y_new);
            k1.swap(k4);
            ++stats.accepted;
            if (monitor && (stats.accepted % c.monitor_every == 0 || t >= c.t_end)) {
                monitor(t, y);
                ++stats.monitor_calls;
            }
            double factor = e == 0.0 ? 5.0
                                     : safety * std::pow(e, -alpha) * std::pow(prev_err, beta);
            factor = std::clamp(factor, 0.2, 5.0);
            prev_err = std::max(e, 1e-4);
            h = std::min(h * factor, c.dt_max);
        } else {
            ++stats.rejected;
            const double factor = std::max(0.2, safety * std::pow(e, -1.0 / 3.0));
            h *= factor;
        }
        if (t < c.t_end && h < c.dt_min) {
            throw SolverError("step size underflow at t = " + std::to_string(t) + " (dt < dt_min = " +
                              std::to_string(c.dt_min) + ")");
        }
    }
    stats.final_time = t;
    return y;
}

} // namespace detail

/// Integrates from t = 0 to config.t_end and returns the final state.
inline Vector evolve(const SparseOperator& L, const Vector& y0, const SolverConfig& config,
                     const Monitor& monitor = {}, EvolveStats* stats = nullptr) {
    detail::validate(L, y0, config);
    EvolveStats local;
    EvolveStats& s = stats ? *stats : local;
    s = EvolveStats{};
    if (config.method == Method::rk4_fixed) return detail::evolve_rk4(L, y0, config, monitor, s);
    return detail::evolve_bs32(L, y0, config, monitor, s);
}

} // namespace permsym
