// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "checks.hpp"

#include <doctest.h>

using namespace checks;

TEST_CASE("optimizer agrees with the straight-line oracle, joint assignment")
{
    const auto s = compare_with_oracle(100, 2024, BeamAssignment::joint);
    INFO(s.first_mismatch);
    CHECK(s.mismatches == 0);
    CHECK(s.worst_v_bb_error < 1e-9);
    // the instance mix must exercise the shrink loop, not only alpha = N_RF
    int shrunk = 0;
    for (int a = 2; a < 8; ++a)
        shrunk += s.accepted_alpha_histogram[static_cast<std::size_t>(a)];
    CHECK(shrunk > 0);
    CHECK(s.accepted_alpha_histogram[8] > 0);
}

TEST_CASE("optimizer agrees with the straight-line oracle, per-target assignment")
{
    const auto s = compare_with_oracle(100, 4048, BeamAssignment::per_target);
    INFO(s.first_mismatch);
    CHECK(s.mismatches == 0);
    CHECK(s.worst_v_bb_error < 1e-9);
}

TEST_CASE("block diagonalization leakage")
{
    CHECK(worst_bd_leakage(200, 7) < 1e-9);
}

TEST_CASE("baseband combine two-form equivalence")
{
    CHECK(worst_two_form_gap(20, 8) < 1e-10);
}

TEST_CASE("range bin exact at the boundary and interior bins")
{
    for (Index n0 : {0, 1, 7, 395, 791})
        CHECK(estimated_bin(n0, static_cast<std::uint64_t>(n0) + 1) == n0);
}
