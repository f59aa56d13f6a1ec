//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file energies.hpp  Differentiable sitting-pose energy terms.
//---------------------------------------------------------------------------//
#pragma once

#include <string>

#include "sitfit/body.hpp"
#include "sitfit/common.hpp"
#include "sitfit/geometry.hpp"

namespace sitfit::energy
{

//! Term weights plus the contact threshold and gravity magnitude.
//!
//! The default weight set already carries the gravitational constant:
//! grav = 19.6 = 2g and zgrav = 9.8 = g, so `gravity` defaults to 1 and the
//! potential terms act with physical strength g/2g relative to the unit
//! contact forces of the penetration term. Setting gravity = 9.8 on top of
//! these weights makes the pull two orders of magnitude stronger than any
//! vertex-count contact force the mesh can produce and bodies fall through
//! geometry; the standalone grav_energy() helper keeps its physical default
//! for direct potential queries.
struct EnergyWeights
{
    double grav{19.6};
    double pen{1.0};
    double self{10.0};
    double feas{0.1};
    double spine{1.0};
    double zgrav{9.8};
    double sit{17.0};
    double sym{2.5};
    double tau{kContactTau};
    double gravity{1.0};

    //! Named preset; "paper-shapeassembly" is the embedded default set.
    static EnergyWeights preset(std::string const& name);
    //! Parse a config: optional "preset" plus per-field overrides
    //! (alpha_grav, alpha_pen, ..., tau, gravity). Unknown keys error.
    static EnergyWeights from_json(std::string const& text);
    std::string to_json() const;
};

//! Per-term values and the weighted total.
struct EnergyBreakdown
{
    double e_grav{0}, e_pen{0}, e_self{0}, e_feas{0};
    double e_spine{0}, e_zgrav{0}, e_sit{0}, e_sym{0};
    double total{0};
};

//! Gravitational potential against a floor plane: sum_j g (p_j . axis -
//! floor) m(j) M. Used with axis = +y / floor = bbox y_min for gravity and
//! axis = +z / floor = bbox z_min for the backrest pull.
double grav_energy(body::BodyModel const& b,
                   body::Pose const& pose,
                   Vec3 const& axis,
                   double floor,
                   double gravity = kGravity);

//! Sum of mesh-vertex penetration depths into the chair.
double penetration_energy(body::BodyModel const& b,
                          geom::ChairAsm const& chair,
                          body::Pose const& pose);

//! Capsule-pair self-penetration over the body's non-adjacent pair list.
double self_penetration_energy(body::BodyModel const& b, body::Pose const& pose);

//! Joint-limit feasibility: signed-grid swing penalty plus twist excess.
double feasibility_energy(body::BodyModel const& b, body::Pose const& pose);

//! L1 spine deviation from the initialization pose.
double spine_energy(body::Pose const& pose, body::Pose const& initial_pose);

//! Mean distance-beyond-threshold of the sit region to the chair.
double sit_contact_energy(body::BodyModel const& b,
                          geom::ChairAsm const& chair,
                          body::Pose const& pose,
                          double tau);

//! Bilateral-symmetry deviation of the pose parameters.
double symmetry_energy(body::Pose const& pose);

//! All terms plus the weighted total; when grad is non-null it receives the
//! 69-dimensional gradient of the total w.r.t. the pose parameters (a valid
//! subgradient at non-smooth points).
EnergyBreakdown total_energy(body::BodyModel const& b,
                             geom::ChairAsm const& chair,
                             body::Pose const& pose,
                             EnergyWeights const& w,
                             body::Pose const& initial_pose,
                             VecX* grad = nullptr);

//! Gradient-only convenience wrapper.
VecX total_energy_grad(body::BodyModel const& b,
                       geom::ChairAsm const& chair,
                       body::Pose const& pose,
                       EnergyWeights const& w,
                       body::Pose const& initial_pose);

}  // namespace sitfit::energy
