// Copyright 2026 The Peristalsim Authors
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

#include "peristalsim/actuator.hpp"
#include "peristalsim/drivetrain.hpp"

namespace peristalsim {

/// The mechanical side of the device: actuator law, cylinders and routing.
struct DeviceSpecs {
  actuator::ActuatorSpec actuator;
  drivetrain::CrankSpec crank;
  drivetrain::Manifold manifold = drivetrain::eight_piston_manifold();
};

}  // namespace peristalsim
