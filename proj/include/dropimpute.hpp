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

#ifndef DROPIMPUTE_DROPIMPUTE_HPP
#define DROPIMPUTE_DROPIMPUTE_HPP

#include "dropimpute/classifier.hpp"
#include "dropimpute/config.hpp"
#include "dropimpute/core.hpp"
#include "dropimpute/error.hpp"
#include "dropimpute/imputers.hpp"
#include "dropimpute/io.hpp"
#include "dropimpute/knn.hpp"
#include "dropimpute/matrix.hpp"
#include "dropimpute/metrics.hpp"
#include "dropimpute/parallel.hpp"
#include "dropimpute/partitioner.hpp"
#include "dropimpute/report.hpp"
#include "dropimpute/rng.hpp"
#include "dropimpute/simgen.hpp"

#endif  // DROPIMPUTE_DROPIMPUTE_HPP
