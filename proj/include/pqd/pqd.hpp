// Copyright 2026 The pqd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "pqd/analysis.hpp"
#include "pqd/codes.hpp"
#include "pqd/config.hpp"
#include "pqd/decoders.hpp"
#include "pqd/encoding.hpp"
#include "pqd/error.hpp"
#include "pqd/linalg.hpp"
#include "pqd/optimizer.hpp"
#include "pqd/pauli.hpp"
#include "pqd/qnn.hpp"
#include "pqd/random.hpp"
#include "pqd/spectral.hpp"
#include "pqd/sweep.hpp"
