//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file statics.hpp  Comfort metric: tet body, equilibrium forces, pressure.
//---------------------------------------------------------------------------//
#pragma once

#include <array>
#include <vector>

#include "sitfit/body.hpp"
#include "sitfit/common.hpp"
#include "sitfit/geometry.hpp"

namespace sitfit::statics
{

//! Constant-density tetrahedral volume mesh of a posed body.
//!
//! Vertices are world-space; every tet is positively oriented; per-tet
//! masses sum to total_mass exactly (normalized at build time). `contact`
//! holds, sorted ascending, the vertices whose chair signed distance is
//! below the contact tolerance (filled by mark_contacts; empty until then).
struct TetMesh
{
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> tets;
    std::vector<double> tet_mass;  //!< kg, Σ == total_mass
    std::vector<int> contact;      //!< sorted vertex indices touching the chair
    double total_mass{kBodyMass};
    int dropped_tets{0};  //!< degenerate tets removed during assembly

    //! Mass-weighted mean of tet centroids.
    Vec3 center_of_mass() const;
    //! Signed volume of tet t (positive by construction).
    double tet_volume(int t) const;
};

//! Validate raw tets into a TetMesh: orient each tet positively, drop
//! zero-volume tets (more than 5% dropped is an error), and assign
//! constant-density masses renormalized to total_mass.
TetMesh assemble_tet_mesh(std::vector<Vec3> vertices,
                          std::vector<std::array<int, 4>> tets,
                          double total_mass);

//! Analytic capsule tetrahedralization of the posed body.
//!
//! Each capsule becomes 3 axial segments of an 8-wedge octagonal prism
//! (24 tets per segment ring level: 8 wedges x 3 tets) spanning exactly the
//! bone, with the octagon cross-section area set to (capsule volume)/length
//! so the prism reproduces the full capsule volume (cylinder + both caps)
//! exactly. The axial end stations sit at the joints, and every joint is a
//! single vertex shared by all capsules meeting there: the skeleton is a
//! tree, so those pins make the tet assembly connected and let equilibrium
//! route force between capsules (a torso tet's weight can reach the seat
//! through the pelvis pin). Tets ride the capsule's proximal joint frame
//! rigidly, so posing preserves every tet volume.
TetMesh tetrahedralize(body::BodyModel const& body,
                       body::Pose const& pose,
                       double total_mass = kBodyMass);

//! Fill tets->contact with the vertices whose sdf_chair < tau.
void mark_contacts(TetMesh* tets, geom::ChairAsm const& chair, double tau);

//! Static-equilibrium force solution at the tet vertices.
struct EquilibriumSolution
{
    std::vector<Vec3> forces;  //!< N, one per tet vertex
    double residual{0};        //!< ||A x - b|| over all constraint rows
    bool rank_deficient{false};
};

//! The "net torque of contact about the body's center of mass is zero"
//! constraint admits two readings; both are assembled behind this switch so
//! they can be swapped without touching the rest of the system.
//!   kPerVertex (default) — each contact vertex's own force has zero torque
//!     about the center of mass (3 rows per contact vertex), i.e. every
//!     contact force points at the center of mass.
//!   kAggregate — one torque balance over all contact forces together
//!     (3 rows total): the body's rotational equilibrium about its center
//!     of mass.
//! Measured on a settled body, both readings give nearly the same contact
//! pressures (within ~8%) and leave a similar least-squares compromise on
//! the global force-balance row (~2.5e-2 of body weight); on hand-solvable
//! fixtures (single tet, slab) both solve to ~1e-9.
enum class ContactTorque
{
    kPerVertex,
    kAggregate,
};

//! Solve the least-squares static-equilibrium system for per-vertex forces.
//!
//! Unknowns: one 3-vector force per tet vertex. Rows, unweighted, in order:
//!   1. per tet: sum of its four vertex forces + tet weight = 0;
//!   2. per tet: net torque of its four vertex forces about its centroid = 0;
//!   3. global: sum of contact-vertex forces + whole-body weight = 0;
//!   4. torque of contact forces about the body's center of mass = 0
//!      (aggregate or per-vertex per the switch above).
//! Solved via normal equations with diagonal regularization 1e-9 (sparse
//! LDLT); the residual is recomputed against the raw rows. Gravity acts
//! along -y. Errors if the contact set is empty ("airborne body").
EquilibriumSolution solve_equilibrium(TetMesh const& tets,
                                      double gravity = kGravity,
                                      ContactTorque torque = ContactTorque::kPerVertex);

//! Per-face contact pressures over a body surface mesh.
struct ComfortBreakdown
{
    double loss_kpa{0};                 //!< Σ face pressures, in kPa
    std::vector<double> face_pressure;  //!< Pa per triangle; 0 off-contact
    int contact_faces{0};
};

//! Sum of contact-face pressures in kilopascals.
//!
//! A triangle counts as in contact when its centroid's chair signed distance
//! is below tau. Each surface vertex takes the force solved at its nearest
//! tet vertex; a face's pressure is the normal component of its three vertex
//! forces divided by its area, with the normal oriented out of the chair
//! (into the body) so that compressive contact reads positive. Zero contact
//! faces yields a zero loss (the airborne warning path).
ComfortBreakdown comfort_loss(TetMesh const& tets,
                              EquilibriumSolution const& solution,
                              std::vector<Vec3> const& surface_vertices,
                              std::vector<std::array<int, 3>> const& triangles,
                              geom::ChairAsm const& chair,
                              double tau);

//! One-call comfort pipeline: tetrahedralize, mark contacts, solve, sum
//! pressures. An airborne body (no contact vertices) short-circuits to a
//! zero loss with `airborne` set instead of erroring.
struct ComfortReport
{
    double loss_kpa{0};
    bool airborne{false};
    double residual{0};
    bool rank_deficient{false};
    std::vector<double> face_pressure;  //!< Pa per body-surface triangle
};

ComfortReport comfort_report(body::BodyModel const& body,
                             body::Pose const& pose,
                             geom::ChairAsm const& chair,
                             double tau = kContactTau,
                             double gravity = kGravity,
                             double total_mass = kBodyMass);

}  // namespace sitfit::statics
