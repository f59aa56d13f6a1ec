//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file fixtures.hpp  Shared chair/body fixtures for the test suites.
//---------------------------------------------------------------------------//
#pragma once

#include <vector>

#include "sitfit/body.hpp"
#include "sitfit/geometry.hpp"

namespace sitfit::fixtures
{

//! Canonical box chair: a solid seat pedestal with its top at 0.45 m and a
//! thick backrest reclined 12.5 degrees. Thick members keep interior SDF
//! gradients pointing back out of the entry face, so a descending body is
//! pushed back to the surface instead of through the far side.
inline geom::ChairAsm box_chair()
{
    double const recline = 0.218;
    std::vector<geom::Cuboid> cubs;
    cubs.push_back(
        {Vec3{0, 0.225, 0}, Vec3{0.25, 0.225, 0.24}, Quat::Identity()});
    Quat const q(Eigen::AngleAxisd(-recline, Vec3::UnitX()));
    Vec3 const center = Vec3{0, 0.45, -0.24} + q * Vec3{0, 0.24, 0.06};
    cubs.push_back({center, Vec3{0.25, 0.26, 0.06}, q});
    return geom::make_chair(cubs);
}

//! Flat 2 m x 2 m platform with its top at seat height (0.45 m).
inline geom::ChairAsm platform()
{
    std::vector<geom::Cuboid> cubs;
    cubs.push_back({Vec3{0, 0.225, 0}, Vec3{1.0, 0.225, 1.0}, Quat::Identity()});
    return geom::make_chair(cubs);
}

}  // namespace sitfit::fixtures
