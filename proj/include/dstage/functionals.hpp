/* Copyright 2026 The dstage Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef DSTAGE_FUNCTIONALS_HPP_
#define DSTAGE_FUNCTIONALS_HPP_

#include <string>
#include <vector>

#include "dstage/error.hpp"
#include "dstage/lld.hpp"

namespace dstage {

// The two frozen functional lists. Their order fixes the feature layout.
enum class FunctionalSet { kLarge39, kVoiced19 };

const std::vector<std::string>& functional_names(FunctionalSet set);
std::size_t functional_count(FunctionalSet set);

// Evaluates every functional of `set` over the trajectory, or over its voiced
// frames only. Regression and position functionals index the (masked)
// sequence 0..N-1. An empty voiced sequence yields zeros and a warning.
// Throws kEmptyTrajectory for an empty trajectory.
std::vector<double> apply_functionals(const LldTrajectory& t,
                                      FunctionalSet set, bool voiced_only,
                                      double frame_rate_hz = 100.0,
                                      Warnings* warnings = nullptr);

}  // namespace dstage

#endif  // DSTAGE_FUNCTIONALS_HPP_
