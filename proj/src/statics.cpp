//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file statics.cpp  Comfort metric: tet body, equilibrium forces, pressure.
//---------------------------------------------------------------------------//
#include "sitfit/statics.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>

namespace sitfit::statics
{
namespace
{

int constexpr kWedges = 8;    //!< angular segments per prism ring
int constexpr kSegments = 3;  //!< axial segments per capsule
int constexpr kStations = kSegments + 1;

double signed_volume(Vec3 const& a, Vec3 const& b, Vec3 const& c, Vec3 const& d)
{
    return (b - a).cross(c - a).dot(d - a) / 6.0;
}

//! Deterministic orthonormal pair perpendicular to a unit axis. The octagon
//! cross-sections must lie in planes perpendicular to the capsule's own axis
//! or the prism volume shrinks by the tilt cosine.
void axis_frame(Vec3 const& axis, Vec3* e1, Vec3* e2)
{
    Vec3 const seed = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    *e1 = axis.cross(seed).normalized();
    *e2 = axis.cross(*e1);
}

}  // namespace

Vec3 TetMesh::center_of_mass() const
{
    Vec3 com = Vec3::Zero();
    for (std::size_t t = 0; t < tets.size(); ++t)
    {
        Vec3 c = Vec3::Zero();
        for (int v : tets[t])
        {
            c += vertices[v];
        }
        com += tet_mass[t] * (c / 4.0);
    }
    return com / total_mass;
}

double TetMesh::tet_volume(int t) const
{
    auto const& T = tets[t];
    return signed_volume(vertices[T[0]], vertices[T[1]], vertices[T[2]], vertices[T[3]]);
}

TetMesh assemble_tet_mesh(std::vector<Vec3> vertices,
                          std::vector<std::array<int, 4>> tets,
                          double total_mass)
{
    SITFIT_REQUIRE(total_mass > 0, "total mass must be positive");
    SITFIT_REQUIRE(!tets.empty(), "tet mesh must have at least one tet");
    int const n_verts = int(vertices.size());
    for (auto const& t : tets)
    {
        for (int v : t)
        {
            SITFIT_REQUIRE(v >= 0 && v < n_verts, "tet vertex index out of range");
        }
    }

    TetMesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.total_mass = total_mass;

    double constexpr kMinVolume = 1e-12;  // m^3
    std::vector<double> volumes;
    for (auto t : tets)
    {
        double vol = signed_volume(
            mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], mesh.vertices[t[3]]);
        if (vol < 0)
        {
            std::swap(t[2], t[3]);
            vol = -vol;
        }
        if (!(vol > kMinVolume))
        {
            ++mesh.dropped_tets;
            continue;
        }
        mesh.tets.push_back(t);
        volumes.push_back(vol);
    }
    SITFIT_REQUIRE(mesh.dropped_tets * 20 <= int(tets.size()),
                   "degenerate tetrahedra exceed 5% of the mesh ("
                       << mesh.dropped_tets << " of " << tets.size() << ")");

    double total_volume = 0;
    for (double v : volumes)
    {
        total_volume += v;
    }
    double const density = total_mass / total_volume;
    mesh.tet_mass.resize(volumes.size());
    double running = 0;
    for (std::size_t i = 0; i + 1 < volumes.size(); ++i)
    {
        mesh.tet_mass[i] = density * volumes[i];
        running += mesh.tet_mass[i];
    }
    // The last tet absorbs the rounding so masses sum to total_mass exactly.
    mesh.tet_mass.back() = total_mass - running;
    return mesh;
}

TetMesh tetrahedralize(body::BodyModel const& body,
                       body::Pose const& pose,
                       double total_mass)
{
    body::PoseFrames const frames = body::forward_kinematics(body, pose);

    // One shared pin vertex per joint welds adjacent capsules together: the
    // skeleton is a tree, so sharing the joint vertex makes the whole tet
    // assembly connected and lets the equilibrium system route force between
    // capsules. Capsule axial stations therefore sit exactly at the joints,
    // and the octagon cross-section area is set to (capsule volume)/length
    // so each capsule's prism reproduces its full analytic volume (cylinder
    // plus both spherical caps) exactly.
    int constexpr kRingsPerCapsule = kStations * kWedges;  // 32
    int constexpr kPrivatePerCapsule = kRingsPerCapsule + 2;
    std::vector<Vec3> verts;
    verts.reserve(body::kNumJoints + std::size_t(kPrivatePerCapsule) * body::kNumBones);
    std::vector<std::array<int, 4>> tets;
    tets.reserve(std::size_t(kSegments * kWedges * 3) * body::kNumBones);
    for (int j = 0; j < body::kNumJoints; ++j)
    {
        verts.push_back(frames.pos[j]);
    }

    for (int b = 0; b < body::kNumBones; ++b)
    {
        body::Capsule const cap = body.rest_capsule(b);
        int const joint = b + 1;
        int const parent = body.skeleton.parent[joint];
        Vec3 const axis_vec = cap.b - cap.a;
        double const length = axis_vec.norm();
        Vec3 const axis = axis_vec / length;
        Vec3 e1, e2;
        axis_frame(axis, &e1, &e2);

        // Octagon circumradius from the exact-volume cross-section area:
        // area = (pi r^2 L + 4 pi r^3 / 3) / L, and a regular octagon of
        // circumradius R has area 2*sqrt(2)*R^2.
        double const area =
            (M_PI * cap.radius * cap.radius * length
             + 4.0 * M_PI * std::pow(cap.radius, 3) / 3.0)
            / length;
        double const ring_radius = std::sqrt(area / (2.0 * std::sqrt(2.0)));

        int const base = int(verts.size());
        for (int k = 0; k < kStations; ++k)
        {
            Vec3 const center_rest = cap.a + (length * k / kSegments) * axis;
            for (int j = 0; j < kWedges; ++j)
            {
                double const phi = M_PI / kWedges + j * (2.0 * M_PI / kWedges);
                Vec3 const rest =
                    center_rest + ring_radius * (std::cos(phi) * e1 + std::sin(phi) * e2);
                // Pose rigidly with the proximal joint's frame (the same
                // frame the surface skinning rides).
                verts.push_back(frames.pos[parent]
                                + frames.rot[parent] * (rest - body.skeleton.rest_pos[parent]));
            }
        }
        for (int k : {1, 2})
        {
            Vec3 const rest = cap.a + (length * k / kSegments) * axis;
            verts.push_back(frames.pos[parent]
                            + frames.rot[parent] * (rest - body.skeleton.rest_pos[parent]));
        }

        // Station centers: joints at the ends (shared pins), private
        // interior centers in between.
        auto center_vert = [&](int k) {
            if (k == 0)
            {
                return parent;
            }
            if (k == kSegments)
            {
                return joint;
            }
            return base + kRingsPerCapsule + (k - 1);
        };
        auto ring_vert = [base](int k, int j) { return base + k * kWedges + j; };
        for (int k = 0; k < kSegments; ++k)
        {
            for (int j = 0; j < kWedges; ++j)
            {
                int const j1 = (j + 1) % kWedges;
                int const a0 = center_vert(k);
                int const a1 = ring_vert(k, j);
                int const a2 = ring_vert(k, j1);
                int const b0 = center_vert(k + 1);
                int const b1 = ring_vert(k + 1, j);
                int const b2 = ring_vert(k + 1, j1);
                tets.push_back({a0, a1, a2, b0});
                tets.push_back({a1, a2, b0, b1});
                tets.push_back({a2, b0, b1, b2});
            }
        }
    }

    return assemble_tet_mesh(std::move(verts), std::move(tets), total_mass);
}

void mark_contacts(TetMesh* tets, geom::ChairAsm const& chair, double tau)
{
    tets->contact.clear();
    for (int v = 0; v < int(tets->vertices.size()); ++v)
    {
        if (geom::sdf_chair(tets->vertices[v], chair) < tau)
        {
            tets->contact.push_back(v);
        }
    }
}

EquilibriumSolution solve_equilibrium(TetMesh const& tets,
                                      double gravity,
                                      ContactTorque torque)
{
    SITFIT_REQUIRE(!tets.contact.empty(), "airborne body: no contact vertices");
    SITFIT_REQUIRE(gravity > 0, "gravity must be positive");

    int const n_verts = int(tets.vertices.size());
    int const n_tets = int(tets.tets.size());
    int const n_contact = int(tets.contact.size());
    int const n_torque_rows = torque == ContactTorque::kPerVertex ? 3 * n_contact : 3;
    int const n_rows = 6 * n_tets + 3 + n_torque_rows;
    int const n_cols = 3 * n_verts;

    // Unweighted rows, assembled in the order documented in the header.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(std::size_t(n_tets) * 36 + std::size_t(n_contact) * 9 + 16);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_rows);

    // r x f as three rows over f's components: row axis a gets the skew
    // matrix entries [r]_x(a, :).
    auto add_cross_rows = [&trips](int row0, Vec3 const& r, int col0) {
        trips.emplace_back(row0 + 0, col0 + 1, -r.z());
        trips.emplace_back(row0 + 0, col0 + 2, r.y());
        trips.emplace_back(row0 + 1, col0 + 0, r.z());
        trips.emplace_back(row0 + 1, col0 + 2, -r.x());
        trips.emplace_back(row0 + 2, col0 + 0, -r.y());
        trips.emplace_back(row0 + 2, col0 + 1, r.x());
    };

    int row = 0;
    for (int t = 0; t < n_tets; ++t)
    {
        for (int v : tets.tets[t])
        {
            for (int a = 0; a < 3; ++a)
            {
                trips.emplace_back(row + a, 3 * v + a, 1.0);
            }
        }
        rhs[row + 1] = tets.tet_mass[t] * gravity;
        row += 3;
    }
    for (int t = 0; t < n_tets; ++t)
    {
        Vec3 centroid = Vec3::Zero();
        for (int v : tets.tets[t])
        {
            centroid += tets.vertices[v];
        }
        centroid /= 4.0;
        for (int v : tets.tets[t])
        {
            add_cross_rows(row, tets.vertices[v] - centroid, 3 * v);
        }
        row += 3;
    }
    for (int v : tets.contact)
    {
        for (int a = 0; a < 3; ++a)
        {
            trips.emplace_back(row + a, 3 * v + a, 1.0);
        }
    }
    rhs[row + 1] = tets.total_mass * gravity;
    row += 3;
    Vec3 const com = tets.center_of_mass();
    for (int v : tets.contact)
    {
        add_cross_rows(row, tets.vertices[v] - com, 3 * v);
        if (torque == ContactTorque::kPerVertex)
        {
            row += 3;
        }
    }
    if (torque == ContactTorque::kAggregate)
    {
        row += 3;
    }
    SITFIT_REQUIRE(row == n_rows, "equilibrium row count mismatch");

    Eigen::SparseMatrix<double> A(n_rows, n_cols);
    A.setFromTriplets(trips.begin(), trips.end());

    Eigen::SparseMatrix<double> normal = Eigen::SparseMatrix<double>(A.transpose()) * A;
    double constexpr kRidge = 1e-9;
    Eigen::SparseMatrix<double> identity(n_cols, n_cols);
    identity.setIdentity();
    normal += kRidge * identity;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(normal);
    SITFIT_REQUIRE(ldlt.info() == Eigen::Success, "equilibrium factorization failed");
    Eigen::VectorXd const atb = A.transpose() * rhs;
    Eigen::VectorXd const x = ldlt.solve(atb);
    SITFIT_REQUIRE(x.allFinite(), "equilibrium solve produced non-finite forces");

    EquilibriumSolution sol;
    sol.forces.resize(n_verts);
    for (int v = 0; v < n_verts; ++v)
    {
        sol.forces[v] = x.segment<3>(3 * v);
    }
    sol.residual = (A * x - rhs).norm();
    Eigen::VectorXd const d = ldlt.vectorD();
    sol.rank_deficient = d.minCoeff() < 1e-7 * d.maxCoeff();
    return sol;
}

ComfortBreakdown comfort_loss(TetMesh const& tets,
                              EquilibriumSolution const& solution,
                              std::vector<Vec3> const& surface_vertices,
                              std::vector<std::array<int, 3>> const& triangles,
                              geom::ChairAsm const& chair,
                              double tau)
{
    SITFIT_REQUIRE(solution.forces.size() == tets.vertices.size(),
                   "solution does not match the tet mesh");

    // Nearest tet vertex per surface vertex (the force carried by a face is
    // the sum over its corners of these nearest-vertex forces).
    std::vector<int> nearest(surface_vertices.size(), 0);
    for (std::size_t s = 0; s < surface_vertices.size(); ++s)
    {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < tets.vertices.size(); ++v)
        {
            double const d2 = (surface_vertices[s] - tets.vertices[v]).squaredNorm();
            if (d2 < best)
            {
                best = d2;
                nearest[s] = int(v);
            }
        }
    }

    ComfortBreakdown out;
    out.face_pressure.assign(triangles.size(), 0.0);
    for (std::size_t f = 0; f < triangles.size(); ++f)
    {
        auto const& tri = triangles[f];
        Vec3 const& p0 = surface_vertices[tri[0]];
        Vec3 const& p1 = surface_vertices[tri[1]];
        Vec3 const& p2 = surface_vertices[tri[2]];
        Vec3 const centroid = (p0 + p1 + p2) / 3.0;
        if (!(geom::sdf_chair(centroid, chair) < tau))
        {
            continue;
        }
        Vec3 const cross = (p1 - p0).cross(p2 - p0);
        double const area = 0.5 * cross.norm();
        if (area < 1e-12)
        {
            continue;
        }
        Vec3 normal = cross / (2.0 * area);
        // Orient out of the chair (into the body): compression positive.
        Vec3 outward;
        geom::sdf_chair_grad(centroid, chair, &outward);
        if (normal.dot(outward) < 0)
        {
            normal = -normal;
        }
        Vec3 const force = solution.forces[nearest[tri[0]]] + solution.forces[nearest[tri[1]]]
                           + solution.forces[nearest[tri[2]]];
        out.face_pressure[f] = force.dot(normal) / area;
        ++out.contact_faces;
    }
    for (double p : out.face_pressure)
    {
        out.loss_kpa += p;
    }
    out.loss_kpa /= 1000.0;
    return out;
}

ComfortReport comfort_report(body::BodyModel const& body,
                             body::Pose const& pose,
                             geom::ChairAsm const& chair,
                             double tau,
                             double gravity,
                             double total_mass)
{
    TetMesh tets = tetrahedralize(body, pose, total_mass);
    mark_contacts(&tets, chair, tau);
    ComfortReport report;
    if (tets.contact.empty())
    {
        report.airborne = true;
        report.face_pressure.assign(body.triangles.size(), 0.0);
        return report;
    }
    EquilibriumSolution const sol = solve_equilibrium(tets, gravity);
    ComfortBreakdown breakdown = comfort_loss(
        tets, sol, body::skin_mesh(body, pose), body.triangles, chair, tau);
    report.loss_kpa = breakdown.loss_kpa;
    report.residual = sol.residual;
    report.rank_deficient = sol.rank_deficient;
    report.face_pressure = std::move(breakdown.face_pressure);
    return report;
}

}  // namespace sitfit::statics
