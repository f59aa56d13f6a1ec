//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file test_statics.cpp  Tet assembly, equilibrium forces, pressure sums.
//---------------------------------------------------------------------------//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/SVD>
#include <cmath>

#include "fixtures.hpp"
#include "sitfit/sitopt.hpp"
#include "sitfit/statics.hpp"

using namespace sitfit;
using body::BodyModel;
using body::Pose;
using statics::ContactTorque;
using statics::TetMesh;

namespace
{

BodyModel const& female_body()
{
    static BodyModel const b = body::build_body(body::ShapeVec::female());
    return b;
}

//! A settled pose on the canonical box chair, optimized once per run.
struct Settled
{
    geom::ChairAsm chair;
    Pose pose;
};

Settled const& settled()
{
    static Settled const s = [] {
        Settled out{fixtures::box_chair(), Pose{}};
        sitopt::SitConfig cfg;
        out.pose = sitopt::optimize_sit(female_body(), out.chair, cfg).pose;
        return out;
    }();
    return s;
}

//! An infinite-feeling plane: top face at y == 0.
geom::ChairAsm plane_chair()
{
    std::vector<geom::Cuboid> cubs;
    cubs.push_back({Vec3{0, -0.5, 0}, Vec3{2.0, 0.5, 2.0}, Quat::Identity()});
    return geom::make_chair(cubs);
}

//! One tet whose bottom face (vertices 0,1,2) lies in the y=0 plane with the
//! apex directly above the bottom face's centroid.
TetMesh slab_tet(double leg_x, double leg_z, double mass)
{
    std::vector<Vec3> verts{Vec3{0, 0, 0},
                            Vec3{leg_x, 0, 0},
                            Vec3{0, 0, leg_z},
                            Vec3{leg_x / 3.0, 0.15, leg_z / 3.0}};
    return statics::assemble_tet_mesh(verts, {{0, 1, 2, 3}}, mass);
}

//! Independent row assembly for the oracle: dense matrix built straight from
//! the constraint statement, solved below by SVD rather than normal
//! equations.
struct OracleSystem
{
    MatX A;
    VecX b;
};

Mat3 skew(Vec3 const& r)
{
    Mat3 s;
    s << 0, -r.z(), r.y(), r.z(), 0, -r.x(), -r.y(), r.x(), 0;
    return s;
}

OracleSystem oracle_system(TetMesh const& m, double g, bool per_vertex)
{
    int const nv = int(m.vertices.size());
    int const nt = int(m.tets.size());
    int const nc = int(m.contact.size());
    int const rows = 6 * nt + 3 + (per_vertex ? 3 * nc : 3);
    OracleSystem sys;
    sys.A = MatX::Zero(rows, 3 * nv);
    sys.b = VecX::Zero(rows);
    int row = 0;
    for (int t = 0; t < nt; ++t, row += 3)
    {
        for (int v : m.tets[t])
        {
            sys.A.block<3, 3>(row, 3 * v) += Mat3::Identity();
        }
        sys.b.segment<3>(row) = Vec3(0, m.tet_mass[t] * g, 0);
    }
    for (int t = 0; t < nt; ++t, row += 3)
    {
        Vec3 c = Vec3::Zero();
        for (int v : m.tets[t])
        {
            c += m.vertices[v];
        }
        c /= 4.0;
        for (int v : m.tets[t])
        {
            sys.A.block<3, 3>(row, 3 * v) += skew(m.vertices[v] - c);
        }
    }
    for (int v : m.contact)
    {
        sys.A.block<3, 3>(row, 3 * v) += Mat3::Identity();
    }
    sys.b.segment<3>(row) = Vec3(0, m.total_mass * g, 0);
    row += 3;
    Vec3 com = Vec3::Zero();
    for (int t = 0; t < nt; ++t)
    {
        Vec3 c = Vec3::Zero();
        for (int v : m.tets[t])
        {
            c += m.vertices[v];
        }
        com += m.tet_mass[t] * c / 4.0;
    }
    com /= m.total_mass;
    for (int v : m.contact)
    {
        sys.A.block<3, 3>(row, 3 * v) += skew(m.vertices[v] - com);
        if (per_vertex)
        {
            row += 3;
        }
    }
    return sys;
}

struct OracleSolution
{
    std::vector<Vec3> forces;           //!< ridge-regularized model, via SVD
    std::vector<Vec3> forces_no_ridge;  //!< plain minimum-norm least squares
    bool rank_deficient{false};
};

OracleSolution oracle_solve(TetMesh const& m, double g, bool per_vertex)
{
    OracleSystem const sys = oracle_system(m, g, per_vertex);
    int const n = int(sys.A.cols());

    // The solver under test regularizes its normal equations with a 1e-9
    // diagonal ridge; the equivalent least-squares problem appends
    // sqrt(1e-9) * I rows with zero right-hand side. Solving that augmented
    // system by SVD reaches the same model through an independent route (no
    // normal equations are ever formed here).
    MatX aug = MatX::Zero(sys.A.rows() + n, n);
    aug.topRows(sys.A.rows()) = sys.A;
    aug.bottomRows(n) = std::sqrt(1e-9) * MatX::Identity(n, n);
    VecX rhs = VecX::Zero(aug.rows());
    rhs.head(sys.A.rows()) = sys.b;
    Eigen::JacobiSVD<MatX> ridge_svd(aug, Eigen::ComputeThinU | Eigen::ComputeThinV);
    VecX const x = ridge_svd.solve(rhs);

    Eigen::JacobiSVD<MatX> raw_svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    VecX const x_raw = raw_svd.solve(sys.b);
    VecX const sv = raw_svd.singularValues();
    OracleSolution out;
    out.rank_deficient = sv.minCoeff() < 1e-7 * sv.maxCoeff();
    out.forces.resize(m.vertices.size());
    out.forces_no_ridge.resize(m.vertices.size());
    for (std::size_t v = 0; v < out.forces.size(); ++v)
    {
        out.forces[v] = x.segment<3>(3 * int(v));
        out.forces_no_ridge[v] = x_raw.segment<3>(3 * int(v));
    }
    return out;
}

}  // namespace

TEST_CASE("tet masses are constant density and sum exactly to the body mass")
{
    TetMesh const tets = statics::tetrahedralize(female_body(), Pose{});
    // One shared pin per joint plus 32 ring + 2 interior-center vertices per
    // capsule; 3 tets per wedge, 8 wedges, 3 segments.
    CHECK(tets.vertices.size() == body::kNumJoints + 34u * body::kNumBones);
    CHECK(tets.tets.size() == 72u * body::kNumBones);
    CHECK(tets.dropped_tets == 0);
    double sum = 0;
    double min_vol = 1e30;
    for (std::size_t t = 0; t < tets.tets.size(); ++t)
    {
        sum += tets.tet_mass[t];
        min_vol = std::min(min_vol, tets.tet_volume(int(t)));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(min_vol > 0.0);
    // Constant density: mass ratio equals volume ratio.
    double const density0 = tets.tet_mass[0] / tets.tet_volume(0);
    double const density1 = tets.tet_mass.back() / tets.tet_volume(int(tets.tets.size()) - 1);
    CHECK(density0 == doctest::Approx(density1).epsilon(1e-9));
}

TEST_CASE("capsule tet volumes reproduce the analytic capsule volume")
{
    BodyModel const& b = female_body();
    TetMesh const tets = statics::tetrahedralize(b, Pose{});
    int constexpr kTetsPerCapsule = 72;
    for (int bone = 0; bone < body::kNumBones; ++bone)
    {
        body::Capsule const cap = b.rest_capsule(bone);
        double const length = (cap.b - cap.a).norm();
        double const analytic =
            M_PI * cap.radius * cap.radius * length + 4.0 * M_PI * std::pow(cap.radius, 3) / 3.0;
        double sum = 0;
        for (int t = 0; t < kTetsPerCapsule; ++t)
        {
            sum += tets.tet_volume(bone * kTetsPerCapsule + t);
        }
        CAPTURE(bone);
        CHECK(sum == doctest::Approx(analytic).epsilon(1e-9));
        CHECK(std::abs(sum - analytic) < 0.05 * analytic);
    }
}

TEST_CASE("posing rigidly preserves every tet volume")
{
    BodyModel const& b = female_body();
    TetMesh const rest = statics::tetrahedralize(b, Pose{});

    Pose moved;
    moved.t_glob = Vec3(0.3, 1.2, -0.7);
    moved.r_glob = Vec3(0.4, -0.3, 1.1);
    moved.bone_rot[body::kLKnee - 1] = Vec3(1.2, 0, 0);
    moved.bone_rot[body::kRShoulder - 1] = Vec3(0, 0.5, -0.9);
    TetMesh const posed = statics::tetrahedralize(b, moved);

    REQUIRE(posed.tets.size() == rest.tets.size());
    double max_diff = 0;
    for (std::size_t t = 0; t < rest.tets.size(); ++t)
    {
        max_diff =
            std::max(max_diff, std::abs(posed.tet_volume(int(t)) - rest.tet_volume(int(t))));
    }
    CHECK(max_diff < 1e-9);
}

TEST_CASE("a single resting tet matches an independent least-squares oracle")
{
    double const side = 0.4;
    double const mass = 2.5;
    std::vector<Vec3> verts{Vec3{0, 0, 0},
                            Vec3{side, 0, 0},
                            Vec3{side / 2, 0, side * std::sqrt(3.0) / 2},
                            Vec3{side / 2, side * std::sqrt(2.0 / 3.0), side * std::sqrt(3.0) / 6}};
    TetMesh tets = statics::assemble_tet_mesh(verts, {{0, 1, 2, 3}}, mass);
    statics::mark_contacts(&tets, plane_chair(), kContactTau);
    REQUIRE(tets.contact == std::vector<int>{0, 1, 2});

    for (bool per_vertex : {true, false})
    {
        CAPTURE(per_vertex);
        auto const mode = per_vertex ? ContactTorque::kPerVertex : ContactTorque::kAggregate;
        auto const sol = statics::solve_equilibrium(tets, 9.8, mode);
        auto const oracle = oracle_solve(tets, 9.8, per_vertex);
        double max_diff = 0;
        double max_diff_raw = 0;
        for (std::size_t v = 0; v < oracle.forces.size(); ++v)
        {
            max_diff = std::max(max_diff, (sol.forces[v] - oracle.forces[v]).norm());
            max_diff_raw =
                std::max(max_diff_raw, (sol.forces[v] - oracle.forces_no_ridge[v]).norm());
        }
        CHECK(max_diff < 1e-6);
        // Against the unregularized minimum-norm solution the only gap is the
        // ridge bias itself, bounded by ridge * |x| / sigma_min^2 (measured
        // 3.5e-6 at sigma_min = 0.081 for this system).
        CHECK(max_diff_raw < 1e-4);

        Vec3 total = Vec3::Zero();
        for (int v : tets.contact)
        {
            total += sol.forces[v];
        }
        CHECK((total - Vec3(0, mass * 9.8, 0)).norm() < 1e-6);
        CHECK(sol.residual < 1e-6);
        // The aggregate-torque system on one tet is genuinely rank deficient
        // (12 unknowns, rank 11); the flag must agree with the oracle's
        // singular values either way.
        CHECK(sol.rank_deficient == oracle.rank_deficient);
        CHECK(sol.rank_deficient == !per_vertex);
        // Mirror symmetry of the bottom triangle about x = side/2; absolute
        // tolerance because the lateral components are ~1e-8.
        CHECK(std::abs(sol.forces[0].y() - sol.forces[1].y()) < 1e-6);
        CHECK(std::abs(sol.forces[0].x() + sol.forces[1].x()) < 1e-6);
    }
}

TEST_CASE("the global balance row is satisfied to solver tolerance when settled")
{
    TetMesh tets = statics::tetrahedralize(female_body(), settled().pose);
    statics::mark_contacts(&tets, settled().chair, kContactTau);
    REQUIRE(tets.contact.size() > 50u);

    auto const sol = statics::solve_equilibrium(tets);
    Vec3 total = Vec3::Zero();
    for (int v : tets.contact)
    {
        total += sol.forces[v];
    }
    double const mg = tets.total_mass * kGravity;
    double const gap = (total - Vec3(0, mg, 0)).norm();
    CHECK(std::isfinite(sol.residual));
    CHECK(gap <= sol.residual);  // the row is one term of the residual
    CHECK(gap < 0.05 * mg);      // measured ~2.5e-2 * Mg on the settled pose
    CHECK(!sol.rank_deficient);
}

TEST_CASE("doubling the mass doubles every force")
{
    geom::ChairAsm const chair = settled().chair;
    TetMesh light = statics::tetrahedralize(female_body(), settled().pose, 1.0);
    TetMesh heavy = statics::tetrahedralize(female_body(), settled().pose, 2.0);
    statics::mark_contacts(&light, chair, kContactTau);
    statics::mark_contacts(&heavy, chair, kContactTau);
    auto const sol1 = statics::solve_equilibrium(light);
    auto const sol2 = statics::solve_equilibrium(heavy);
    double max_rel = 0;
    for (std::size_t v = 0; v < sol1.forces.size(); ++v)
    {
        double const diff = (2.0 * sol1.forces[v] - sol2.forces[v]).norm();
        if (sol2.forces[v].norm() > 1e-9)
        {
            max_rel = std::max(max_rel, diff / sol2.forces[v].norm());
        }
    }
    CHECK(max_rel < 1e-9);
}

TEST_CASE("scaling gravity scales forces and comfort linearly")
{
    BodyModel const& b = female_body();
    TetMesh tets = statics::tetrahedralize(b, settled().pose);
    statics::mark_contacts(&tets, settled().chair, kContactTau);
    auto const sol1 = statics::solve_equilibrium(tets, 9.8);
    auto const sol2 = statics::solve_equilibrium(tets, 3.0 * 9.8);
    double max_rel = 0;
    for (std::size_t v = 0; v < sol1.forces.size(); ++v)
    {
        double const diff = (3.0 * sol1.forces[v] - sol2.forces[v]).norm();
        if (sol2.forces[v].norm() > 1e-9)
        {
            max_rel = std::max(max_rel, diff / sol2.forces[v].norm());
        }
    }
    CHECK(max_rel < 1e-6);

    auto const mesh = body::skin_mesh(b, settled().pose);
    auto const c1 = statics::comfort_loss(tets, sol1, mesh, b.triangles, settled().chair, kContactTau);
    auto const c2 = statics::comfort_loss(tets, sol2, mesh, b.triangles, settled().chair, kContactTau);
    CHECK(c2.loss_kpa == doctest::Approx(3.0 * c1.loss_kpa).epsilon(1e-6));
}

TEST_CASE("a one-kilogram slab on a plane presses at its analytic pressure")
{
    geom::ChairAsm const plane = plane_chair();
    std::vector<std::array<int, 3>> const tris{{0, 1, 2}, {0, 1, 3}, {1, 2, 3}, {2, 0, 3}};

    // Bottom face 0.2 x 0.1 legs: area 0.01 m^2 -> Mg/A = 980 Pa.
    TetMesh small = slab_tet(0.2, 0.1, 1.0);
    statics::mark_contacts(&small, plane, kContactTau);
    REQUIRE(small.contact == std::vector<int>{0, 1, 2});
    auto const sol_small = statics::solve_equilibrium(small);
    auto const comfort_small =
        statics::comfort_loss(small, sol_small, small.vertices, tris, plane, kContactTau);
    CHECK(comfort_small.contact_faces == 1);
    CHECK(comfort_small.loss_kpa == doctest::Approx(0.98).epsilon(1e-6));

    // Doubling the contact area halves the pressure.
    TetMesh big = slab_tet(0.2, 0.2, 1.0);
    statics::mark_contacts(&big, plane, kContactTau);
    auto const sol_big = statics::solve_equilibrium(big);
    auto const comfort_big =
        statics::comfort_loss(big, sol_big, big.vertices, tris, plane, kContactTau);
    CHECK(comfort_big.loss_kpa == doctest::Approx(0.49).epsilon(1e-6));
}

TEST_CASE("an airborne body raises in the solver and warns in the report")
{
    BodyModel const& b = female_body();
    geom::ChairAsm const plane = plane_chair();
    Pose high;
    high.t_glob = Vec3(0, 2.0, 0);

    TetMesh tets = statics::tetrahedralize(b, high);
    statics::mark_contacts(&tets, plane, kContactTau);
    CHECK(tets.contact.empty());
    CHECK_THROWS_WITH_AS(statics::solve_equilibrium(tets),
                         doctest::Contains("airborne"),
                         std::runtime_error);

    auto const report = statics::comfort_report(b, high, plane);
    CHECK(report.airborne);
    CHECK(report.loss_kpa == 0.0);
    CHECK(report.face_pressure.size() == b.triangles.size());
    for (double p : report.face_pressure)
    {
        CHECK(p == 0.0);
    }
}

TEST_CASE("comfort is zero when no supplied face touches the chair")
{
    geom::ChairAsm const plane = plane_chair();
    TetMesh slab = slab_tet(0.2, 0.1, 1.0);
    statics::mark_contacts(&slab, plane, kContactTau);
    auto const sol = statics::solve_equilibrium(slab);
    // Only the side faces, whose centroids are above tau.
    std::vector<std::array<int, 3>> const sides{{0, 1, 3}, {1, 2, 3}, {2, 0, 3}};
    auto const comfort = statics::comfort_loss(slab, sol, slab.vertices, sides, plane, kContactTau);
    CHECK(comfort.contact_faces == 0);
    CHECK(comfort.loss_kpa == 0.0);
}

TEST_CASE("degenerate tets are dropped and too many degenerates error")
{
    // 21 disjoint unit-ish tets plus one duplicate-vertex tet: 1/22 < 5%.
    std::vector<Vec3> verts;
    std::vector<std::array<int, 4>> tets;
    for (int i = 0; i < 21; ++i)
    {
        int const base = int(verts.size());
        Vec3 const o(2.0 * i, 0, 0);
        verts.push_back(o);
        verts.push_back(o + Vec3(0.3, 0, 0));
        verts.push_back(o + Vec3(0, 0.3, 0));
        verts.push_back(o + Vec3(0, 0, 0.3));
        tets.push_back({base, base + 1, base + 2, base + 3});
    }
    tets.push_back({0, 1, 2, 2});
    TetMesh const mesh = statics::assemble_tet_mesh(verts, tets, 3.0);
    CHECK(mesh.dropped_tets == 1);
    CHECK(mesh.tets.size() == 21u);
    double sum = 0;
    for (double m : mesh.tet_mass)
    {
        sum += m;
    }
    CHECK(sum == doctest::Approx(3.0).epsilon(1e-12));

    // 1 degenerate of 2 total: over the 5% budget.
    std::vector<Vec3> small{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    CHECK_THROWS_WITH_AS(
        statics::assemble_tet_mesh(small, {{0, 1, 2, 3}, {0, 1, 2, 2}}, 1.0),
        doctest::Contains("degenerate"),
        std::runtime_error);
}

TEST_CASE("a settled body reports positive finite comfort")
{
    auto const report =
        statics::comfort_report(female_body(), settled().pose, settled().chair);
    CHECK(!report.airborne);
    CHECK(std::isfinite(report.loss_kpa));
    CHECK(report.loss_kpa > 0.0);
    // Measured 1.71 kPa on the canonical settled pose; envelope, not a pin.
    CHECK(report.loss_kpa > 0.3);
    CHECK(report.loss_kpa < 6.0);
    CHECK(!report.rank_deficient);
    CHECK(std::isfinite(report.residual));
}
