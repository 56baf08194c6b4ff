// Copyright 2026 The pvdyn Authors
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

#include "pvdyn/spatial.hpp"
#include "pvdyn/model.hpp"
#include "pvdyn/generators.hpp"
#include "pvdyn/urdf.hpp"
#include "pvdyn/kinematics.hpp"
#include "pvdyn/baseline/dynamics.hpp"
#include "pvdyn/baseline/ltl.hpp"
#include "pvdyn/baseline/kkt_oracle.hpp"
#include "pvdyn/constrained/types.hpp"
#include "pvdyn/constrained/workspace.hpp"
#include "pvdyn/constrained/pv.hpp"
#include "pvdyn/constrained/soft.hpp"
#include "pvdyn/constrained/proximal.hpp"
#include "pvdyn/delassus/operator.hpp"
#include "pvdyn/delassus/osim.hpp"
#include "pvdyn/harness/instances.hpp"
#include "pvdyn/harness/integrator.hpp"
#include "pvdyn/harness/check_suite.hpp"
#include "pvdyn/harness/bench.hpp"
