#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The stochmech Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "stochmech/analysis.hpp"
#include "stochmech/consortium.hpp"
#include "stochmech/demos.hpp"
#include "stochmech/io.hpp"
#include "stochmech/mechanism.hpp"
#include "stochmech/scenario_json.hpp"
#include "stochmech/scheduling.hpp"
#include "stochmech/strategy.hpp"
#include "stochmech/value.hpp"
