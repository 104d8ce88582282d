// Copyright 2026 The MSPE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Self-contained invariant checks shared by the command-line `verify` verb
// and the acceptance suite. Each check builds its own randomized inputs from
// fixed seeds and compares against an independent oracle.

#include <functional>
#include <string>
#include <vector>

namespace mspe {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

CheckResult check_pe_oracle();             // 1
CheckResult check_shift_algebra();         // 2
CheckResult check_shift_rule();            // 3
CheckResult check_equivariance();          // 4
CheckResult check_gradients();             // 5
CheckResult check_similarity_metric();     // 6
CheckResult check_diffusion_math();        // 7
CheckResult check_expansion_contracts();   // 11

/// All of the above, in id order.
std::vector<CheckResult> run_invariant_suite();

/// "PASS [id] name (1.23 s): detail"
std::string format_result(const CheckResult& r);

/// Runs `body`, times it and converts exceptions into a failed result.
CheckResult timed_check(int id, const std::string& name, const std::function<bool(std::string&)>& body);

}  // namespace mspe
