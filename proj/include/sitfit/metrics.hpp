//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file metrics.hpp  Pose-matching loss between two poses of one body.
//---------------------------------------------------------------------------//
#pragma once

#include <vector>

#include "sitfit/body.hpp"

namespace sitfit::metrics
{

//! The joints that count toward the pose-matching loss.
struct JointSet
{
    std::vector<int> included;

    //! Every joint except the root and both feet (19 of 22).
    static JointSet standard();
};

//! Sum of root-relative joint distances between two sets of world joint
//! positions, in centimeters.
//!
//! Positions are expressed relative to joint 0 (the root) before distances
//! are taken, so the result is invariant to a global translation of either
//! input; the root itself therefore never contributes and is excluded from
//! any sensible JointSet.
double joint_set_loss(std::array<Vec3, body::kNumJoints> const& a,
                      std::array<Vec3, body::kNumJoints> const& b,
                      JointSet const& set);

//! Pose-matching loss between two poses of one body, in centimeters:
//! forward kinematics on both poses, then joint_set_loss over `set`.
double pose_loss(body::BodyModel const& body,
                 body::Pose const& a,
                 body::Pose const& b,
                 JointSet const& set = JointSet::standard());

}  // namespace sitfit::metrics
