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

// Process-level tuning shared by the executables.

namespace mspe {

/// Keeps freed tensor buffers on the heap instead of returning them to the
/// OS. Many same-sized temporaries per step otherwise cost a page-fault storm.
/// No-op outside glibc.
void tune_allocator();

}  // namespace mspe
