// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The phasegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "phasegen/coherence.hpp"
#include "phasegen/geometry.hpp"
#include "phasegen/io.hpp"
#include "phasegen/oracle.hpp"
#include "phasegen/phasemap.hpp"
#include "phasegen/random.hpp"
#include "phasegen/rtf.hpp"
#include "phasegen/signalgen.hpp"
#include "phasegen/stats.hpp"
