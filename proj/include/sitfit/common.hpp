//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file common.hpp  Shared aliases, validation macro, tolerances.
//---------------------------------------------------------------------------//
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sitfit
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

//! Runtime contract check; throws with a readable message on violation.
#define SITFIT_REQUIRE(cond, msg)                                  \
    do                                                             \
    {                                                              \
        if (!(cond))                                               \
        {                                                          \
            std::ostringstream os_;                                \
            os_ << "sitfit: " << msg;                              \
            throw std::runtime_error(os_.str());                   \
        }                                                          \
    } while (0)

//! Gravitational acceleration [m/s^2]; gravity acts along -y.
inline constexpr double kGravity = 9.8;

//! Total body mass [kg]; joint masses sum to exactly this.
inline constexpr double kBodyMass = 1.0;

//! Contact tolerance tau [m] shared by the sit energy and the contact sets.
inline constexpr double kContactTau = 1e-3;

}  // namespace sitfit
