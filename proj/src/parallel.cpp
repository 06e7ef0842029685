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

#include "dstage/parallel.hpp"

#include <omp.h>

namespace dstage {

namespace {
int g_workers = 0;
}

void set_worker_count(int workers) {
  g_workers = workers < 0 ? 0 : workers;
  if (g_workers > 0) omp_set_num_threads(g_workers);
}

int worker_count() {
  return g_workers > 0 ? g_workers : omp_get_max_threads();
}

}  // namespace dstage
