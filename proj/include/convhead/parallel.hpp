// Copyright (c) 2026 convhead contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace convhead {

// Sets the OpenMP thread count for all parallel kernels. 0 keeps the
// runtime default. Every kernel in this library is written so its result
// is independent of the thread count: elementwise loops write disjoint
// slots and reductions are performed in a fixed order.
void set_threads(int n);

int max_threads();

} // namespace convhead
