// Copyright 2026 The amalgam Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AMALGAM_RANDOM_H_
#define AMALGAM_RANDOM_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace amalgam {

using Rng = std::mt19937_64;

// Child seed for a named sub-component. Derivation is a pure function of
// (base, tag), so the seed a component sees does not depend on how many
// other components drew random numbers before it.
std::uint64_t DeriveSeed(std::uint64_t base, std::string_view tag);

inline Rng MakeRng(std::uint64_t base, std::string_view tag) {
  return Rng(DeriveSeed(base, tag));
}

}  // namespace amalgam

#endif  // AMALGAM_RANDOM_H_
