// Copyright 2026 The qthresh Authors.
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

#ifndef QTHRESH_QTHRESH_HPP_
#define QTHRESH_QTHRESH_HPP_

#include "qthresh/benchmarks.hpp"
#include "qthresh/cdf.hpp"
#include "qthresh/errors.hpp"
#include "qthresh/estimation.hpp"
#include "qthresh/fluid.hpp"
#include "qthresh/format.hpp"
#include "qthresh/harness.hpp"
#include "qthresh/io.hpp"
#include "qthresh/model.hpp"
#include "qthresh/policies.hpp"
#include "qthresh/random.hpp"
#include "qthresh/reward_dist.hpp"

#endif  // QTHRESH_QTHRESH_HPP_
