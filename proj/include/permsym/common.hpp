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

/// @file common.hpp
/// @brief Scalar types and the exception hierarchy shared by all modules.

#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace permsym {

using cplx = std::complex<double>;
using index_t = std::uint64_t;

inline constexpr cplx I{0.0, 1.0};

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid system declaration or argument that references something undeclared.
class SpecError : public Error {
public:
    using Error::Error;
};

/// Checked integer arithmetic left the 64-bit count range.
class OverflowError : public Error {
public:
    using Error::Error;
};

/// Operator lifecycle or shape violation (write after freeze, dimension mismatch).
class OperatorError : public Error {
public:
    using Error::Error;
};

/// Time integration or steady-state solve failed.
class SolverError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline index_t checked_mul(index_t a, index_t b) {
    index_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) {
        throw OverflowError("index space overflow: " + std::to_string(a) + " * " +
                            std::to_string(b) + " exceeds 64 bits");
    }
    return r;
}

inline index_t checked_add(index_t a, index_t b) {
    index_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) {
        throw OverflowError("index space overflow: " + std::to_string(a) + " + " +
                            std::to_string(b) + " exceeds 64 bits");
    }
    return r;
}

} // namespace detail
} // namespace permsym
