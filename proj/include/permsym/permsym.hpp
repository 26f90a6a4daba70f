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

/// @file permsym.hpp
/// @brief Umbrella header.

#pragma once

#include "permsym/basis.hpp"
#include "permsym/common.hpp"
#include "permsym/dynamics.hpp"
#include "permsym/integrators.hpp"
#include "permsym/liouville.hpp"
#include "permsym/model.hpp"
#include "permsym/oracle.hpp"
#include "permsym/prune.hpp"
#include "permsym/run.hpp"
#include "permsym/sparse_operator.hpp"
#include "permsym/steady_state.hpp"
#include "permsym/terms.hpp"
#include "permsym/verify.hpp"
