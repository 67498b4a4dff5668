/*
 * Copyright 2026 The dropimpute Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DROPIMPUTE_TESTS_FIXTURES_HPP
#define DROPIMPUTE_TESTS_FIXTURES_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dropimpute/core.hpp"

namespace fixture {

inline dropimpute::UserRecord user(std::uint32_t arm, std::vector<double> x, std::optional<double> z,
                                   std::uint32_t segment = 0) {
  static int counter = 0;
  dropimpute::UserRecord r;
  r.user_id = "t" + std::to_string(++counter);
  r.arm = dropimpute::TreatmentArm{arm};
  r.segment = segment;
  r.x = std::move(x);
  r.outcome = z ? dropimpute::Outcome::observed(*z) : dropimpute::Outcome::missing();
  return r;
}

}  // namespace fixture

#endif  // DROPIMPUTE_TESTS_FIXTURES_HPP
