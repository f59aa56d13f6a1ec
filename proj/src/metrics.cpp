//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file metrics.cpp  Pose-matching loss.
//---------------------------------------------------------------------------//
#include "sitfit/metrics.hpp"

namespace sitfit::metrics
{

JointSet JointSet::standard()
{
    JointSet set;
    set.included.reserve(body::kNumJoints - 3);
    for (int j = 0; j < body::kNumJoints; ++j)
    {
        if (j != body::kPelvis && j != body::kLFoot && j != body::kRFoot)
        {
            set.included.push_back(j);
        }
    }
    return set;
}

double joint_set_loss(std::array<Vec3, body::kNumJoints> const& a,
                      std::array<Vec3, body::kNumJoints> const& b,
                      JointSet const& set)
{
    Vec3 const root_a = a[body::kPelvis];
    Vec3 const root_b = b[body::kPelvis];
    double sum = 0;
    for (int j : set.included)
    {
        sum += ((a[j] - root_a) - (b[j] - root_b)).norm();
    }
    return 100.0 * sum;  // meters -> centimeters
}

double pose_loss(body::BodyModel const& body,
                 body::Pose const& a,
                 body::Pose const& b,
                 JointSet const& set)
{
    body::PoseFrames const fa = body::forward_kinematics(body, a);
    body::PoseFrames const fb = body::forward_kinematics(body, b);
    return joint_set_loss(fa.pos, fb.pos, set);
}

}  // namespace sitfit::metrics
