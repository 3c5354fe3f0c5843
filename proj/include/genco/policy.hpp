// Copyright 2026 The genco Authors. All Rights Reserved.
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

#include <string>

#include "genco/domain.hpp"
#include "genco/rng.hpp"

namespace genco {

/// Common selection interface shared by the baselines, the trained model and
/// the simulator's oracle. `select` must return a combination valid for `ad`.
class SelectionPolicy {
 public:
  virtual ~SelectionPolicy() = default;

  virtual std::string name() const = 0;
  virtual CreativeCombination select(const RequestContext& context, const Ad& ad,
                                     Engine& rng) = 0;
  /// Online policies learn from the realized outcome; default is a no-op.
  virtual void update(const ImpressionRecord& /*record*/) {}
};

}  // namespace genco
