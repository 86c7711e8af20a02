// Copyright 2026 The balanced-mc Authors
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


#pragma once

#include "balanced_mc/convex_solver.hpp"
#include "balanced_mc/errors.hpp"
#include "balanced_mc/experiments.hpp"
#include "balanced_mc/io.hpp"
#include "balanced_mc/linalg.hpp"
#include "balanced_mc/masked.hpp"
#include "balanced_mc/nonconvex_solver.hpp"
#include "balanced_mc/objective.hpp"
#include "balanced_mc/random.hpp"
#include "balanced_mc/weights.hpp"
