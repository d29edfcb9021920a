// Copyright 2026 The detdiag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header for the library (everything except the CLI driver).

#pragma once

#include "detdiag/analysis.hpp"
#include "detdiag/apcore.hpp"
#include "detdiag/dataset.hpp"
#include "detdiag/error.hpp"
#include "detdiag/errors.hpp"
#include "detdiag/geometry.hpp"
#include "detdiag/io.hpp"
#include "detdiag/oracles.hpp"
#include "detdiag/parallel.hpp"
#include "detdiag/report.hpp"
#include "detdiag/synth.hpp"
