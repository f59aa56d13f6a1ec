//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file test_energies.cpp  Energy terms, invariants, and the pose gradient.
//---------------------------------------------------------------------------//
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "sitfit/body.hpp"
#include "sitfit/energies.hpp"
#include "sitfit/geometry.hpp"
#include "sitfit/rng.hpp"

using namespace sitfit;
using body::BodyModel;
using body::Pose;
using energy::EnergyBreakdown;
using energy::EnergyWeights;

namespace
{

BodyModel const& female_body()
{
    static BodyModel const b = body::build_body(body::ShapeVec::female());
    return b;
}

//! Three axis-aligned cuboids, all centered on the x = 0 plane.
geom::ChairAsm symmetric_chair()
{
    std::vector<geom::Cuboid> cs;
    cs.push_back({Vec3{0, 0.22, 0}, Vec3{0.25, 0.03, 0.25}, Quat{1, 0, 0, 0}});
    cs.push_back({Vec3{0, 0.45, -0.26}, Vec3{0.25, 0.20, 0.03}, Quat{1, 0, 0, 0}});
    cs.push_back({Vec3{0, 0.095, 0}, Vec3{0.22, 0.095, 0.22}, Quat{1, 0, 0, 0}});
    return geom::make_chair(std::move(cs));
}

geom::ChairAsm unit_cube_chair()
{
    return geom::make_chair(
        {{Vec3::Zero(), Vec3{0.5, 0.5, 0.5}, Quat{1, 0, 0, 0}}});
}

Pose random_pose(Rng& rng, double bone_scale)
{
    Pose p;
    p.t_glob = Vec3{rng.uniform(-0.1, 0.1), rng.uniform(0.1, 0.5),
                    rng.uniform(-0.1, 0.1)};
    for (int k = 0; k < 3; ++k)
    {
        p.r_glob[k] = rng.uniform(-0.3, 0.3);
    }
    for (auto& r : p.bone_rot)
    {
        for (int k = 0; k < 3; ++k)
        {
            r[k] = rng.uniform(-bone_scale, bone_scale);
        }
    }
    return p;
}

//! Body stub whose mesh is a caller-chosen vertex list bound to the pelvis.
BodyModel point_body(std::vector<Vec3> verts, std::vector<int> sit)
{
    BodyModel b = female_body();
    b.rest_vertices = std::move(verts);
    b.rest_normals.assign(b.rest_vertices.size(), Vec3::UnitY());
    b.bindings.assign(b.rest_vertices.size(), body::SkinBinding{0, -1});
    b.triangles.clear();
    b.sit_vertices = std::move(sit);
    b.self_pairs.clear();
    return b;
}

}  // namespace

TEST_CASE("gravitational energy matches a point-mass oracle")
{
    BodyModel b = female_body();
    b.masses.fill(0.0);
    b.masses[0] = 1.0;  // concentrate the whole 1 kg at the pelvis
    Pose pose;
    pose.t_glob = Vec3{0.0, 0.5, 0.0};
    CHECK(energy::grav_energy(b, pose, Vec3::UnitY(), 0.0)
          == doctest::Approx(4.9).epsilon(1e-12));
    pose.t_glob = Vec3{0.0, 0.0, 0.0};
    CHECK(energy::grav_energy(b, pose, Vec3::UnitZ(), -0.25)
          == doctest::Approx(2.45).epsilon(1e-12));
}

TEST_CASE("gravitational energy equals the mass-weighted height sum")
{
    BodyModel const& b = female_body();
    Rng rng(0xe1);
    for (int trial = 0; trial < 5; ++trial)
    {
        Pose const pose = random_pose(rng, 0.4);
        double const floor = rng.uniform(-0.5, 0.2);
        body::PoseFrames const f = forward_kinematics(b, pose);
        double expect = 0.0;
        for (int j = 0; j < body::kNumJoints; ++j)
        {
            expect += kGravity * (f.pos[j].y() - floor) * b.masses[j];
        }
        CHECK(energy::grav_energy(b, pose, Vec3::UnitY(), floor)
              == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("penetration energy counts a lone vertex by its depth")
{
    BodyModel const b = point_body({Vec3{0.0, 0.4, 0.0}}, {});
    geom::ChairAsm const cube = unit_cube_chair();
    CHECK(energy::penetration_energy(b, cube, Pose{})
          == doctest::Approx(0.1).epsilon(1e-12));

    // Moving the vertex outside zeroes the term.
    BodyModel const b2 = point_body({Vec3{0.0, 0.7, 0.0}}, {});
    CHECK(energy::penetration_energy(b2, cube, Pose{}) == 0.0);
}

TEST_CASE("penetration energy equals the clamped-depth sum over the mesh")
{
    BodyModel const& b = female_body();
    geom::ChairAsm const chair = symmetric_chair();
    Rng rng(0xe2);
    for (int trial = 0; trial < 5; ++trial)
    {
        Pose const pose = random_pose(rng, 0.3);
        std::vector<Vec3> const mesh = skin_mesh(b, pose);
        double expect = 0.0;
        int inside = 0;
        for (Vec3 const& v : mesh)
        {
            double const d = geom::sdf_chair(v, chair);
            if (d < 0.0)
            {
                expect += -d;
                ++inside;
            }
        }
        CHECK(energy::penetration_energy(b, chair, pose)
              == doctest::Approx(expect).epsilon(1e-12));
        if (inside > 0)
        {
            CHECK(energy::penetration_energy(b, chair, pose) > 0.0);
        }
    }
}

TEST_CASE("self-penetration depth matches the capsule-pair oracle")
{
    BodyModel const& base = female_body();
    CHECK(energy::self_penetration_energy(base, Pose{}) == 0.0);

    // Inflate the two thigh capsules: their rest axes are parallel vertical
    // segments 0.178 apart, so radii of 0.339 overlap by exactly 0.5.
    BodyModel b = base;
    b.self_pairs = {{2, 3}};
    b.skeleton.radius[2] = 0.339;
    b.skeleton.radius[3] = 0.339;
    CHECK(energy::self_penetration_energy(b, Pose{})
          == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("self-penetration sums all listed capsule pairs")
{
    BodyModel const& b = female_body();
    Rng rng(0xe3);
    bool saw_positive = false;
    for (int trial = 0; trial < 8; ++trial)
    {
        Pose const pose = random_pose(rng, 0.8);
        body::PoseFrames const f = forward_kinematics(b, pose);
        double expect = 0.0;
        for (auto const& [b1, b2] : b.self_pairs)
        {
            int const j1 = b1 + 1, j2 = b2 + 1;
            double const d = geom::segment_distance(
                f.pos[b.skeleton.parent[j1]], f.pos[j1],
                f.pos[b.skeleton.parent[j2]], f.pos[j2], nullptr, nullptr);
            expect +=
                std::max(b.skeleton.radius[b1] + b.skeleton.radius[b2] - d, 0.0);
        }
        double const got = energy::self_penetration_energy(b, pose);
        CHECK(got == doctest::Approx(expect).epsilon(1e-12));
        saw_positive = saw_positive || got > 0.0;
    }
    CHECK(saw_positive);  // large random poses do fold limbs into each other
}

TEST_CASE("joint-limit energy is zero at rest and positive beyond the limits")
{
    BodyModel const& b = female_body();
    CHECK(energy::feasibility_energy(b, Pose{}) == 0.0);

    // Hyperextend the left knee: a swing well past the flexion box.
    Pose hyper;
    hyper.bone_rot[2] = -0.5 * b.skeleton.swing_e1[2];
    CHECK(energy::feasibility_energy(b, hyper) > 0.0);

    // Pure twist beyond the bound contributes the excess directly.
    Pose twisted;
    twisted.bone_rot[2] = 1.6 * b.skeleton.swing_dir[2];
    CHECK(energy::feasibility_energy(b, twisted)
          == doctest::Approx(1.6 - b.limits.twist_bound[2]).epsilon(1e-9));
}

TEST_CASE("joint-limit energy equals the per-bone grid and twist sum")
{
    BodyModel const& b = female_body();
    Rng rng(0xe4);
    for (int trial = 0; trial < 5; ++trial)
    {
        Pose const pose = random_pose(rng, 0.9);
        double expect = 0.0;
        for (int bone = 0; bone < body::kNumBones; ++bone)
        {
            body::SwingTwist const st =
                body::swing_twist(b.skeleton, bone, pose.bone_rot[bone]);
            expect += std::max(geom::bilerp(b.limits.grid[bone], st.phi, st.theta),
                               0.0);
            expect += std::max(std::abs(st.twist) - b.limits.twist_bound[bone], 0.0);
        }
        CHECK(energy::feasibility_energy(b, pose)
              == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("spine energy is the L1 deviation from the initial pose")
{
    Pose pose;
    pose.bone_rot[8] = Vec3{0.1, -0.1, 0.1};  // first spine bone
    pose.bone_rot[17] = Vec3{0.7, 0.2, -0.4};  // an arm bone: ignored
    CHECK(energy::spine_energy(pose, Pose{})
          == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(energy::spine_energy(pose, pose) == 0.0);
}

TEST_CASE("seat-contact energy averages distances beyond the threshold")
{
    // Two sit vertices against the unit cube: one hovering 0.011 above the
    // top face, one buried inside. Mean of (0.011 - 0.001) and 0 is 0.005.
    BodyModel const b =
        point_body({Vec3{0.0, 0.511, 0.0}, Vec3{0.0, 0.3, 0.0}}, {0, 1});
    CHECK(energy::sit_contact_energy(b, unit_cube_chair(), Pose{}, 1e-3)
          == doctest::Approx(0.005).epsilon(1e-12));
}

TEST_CASE("symmetry energy scores the off-plane pose components")
{
    Pose pose;
    pose.t_glob.x() = 0.2;
    CHECK(energy::symmetry_energy(pose) == doctest::Approx(0.2).epsilon(1e-12));

    pose.r_glob = Vec3{0.3, 0.0, 0.0};  // roll about x is symmetry-free
    CHECK(energy::symmetry_energy(pose) == doctest::Approx(0.2).epsilon(1e-12));

    // A mirror-consistent elbow pair adds nothing; breaking it adds the L1
    // distance between the left rotation and the mirrored right one.
    pose.bone_rot[17] = Vec3{0.1, 0.2, -0.3};
    pose.bone_rot[18] = Vec3{0.1, -0.2, 0.3};
    CHECK(energy::symmetry_energy(pose) == doctest::Approx(0.2).epsilon(1e-12));
    pose.bone_rot[18] = Vec3{0.1, 0.2, -0.3};
    CHECK(energy::symmetry_energy(pose) == doctest::Approx(1.2).epsilon(1e-12));
}

TEST_CASE("a mirrored pose leaves every energy term unchanged")
{
    BodyModel const& b = female_body();
    geom::ChairAsm const chair = symmetric_chair();
    EnergyWeights const w;
    Rng rng(0xe5);
    for (int trial = 0; trial < 3; ++trial)
    {
        Pose const pose = random_pose(rng, 0.5);
        Pose const mirrored = body::mirror_pose(pose);
        EnergyBreakdown const a = total_energy(b, chair, pose, w, Pose{});
        EnergyBreakdown const m = total_energy(b, chair, mirrored, w, Pose{});
        CHECK(std::abs(a.e_grav - m.e_grav) < 1e-9);
        CHECK(std::abs(a.e_pen - m.e_pen) < 1e-9);
        CHECK(std::abs(a.e_self - m.e_self) < 1e-9);
        CHECK(std::abs(a.e_feas - m.e_feas) < 1e-9);
        CHECK(std::abs(a.e_spine - m.e_spine) < 1e-9);
        CHECK(std::abs(a.e_zgrav - m.e_zgrav) < 1e-9);
        CHECK(std::abs(a.e_sit - m.e_sit) < 1e-9);
        CHECK(std::abs(a.e_sym - m.e_sym) < 1e-9);
        CHECK(std::abs(a.total - m.total) < 1e-8);
    }
}

TEST_CASE("gravitational energy decreases as the body is lowered")
{
    BodyModel const& b = female_body();
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10; ++i)
    {
        Pose pose;
        pose.t_glob.y() = 1.0 - 0.1 * i;
        double const e = energy::grav_energy(b, pose, Vec3::UnitY(), -1.0);
        CHECK(e < prev);
        prev = e;
    }
}

TEST_CASE("all penalty terms are non-negative")
{
    BodyModel const& b = female_body();
    geom::ChairAsm const chair = symmetric_chair();
    Rng rng(0xe6);
    for (int trial = 0; trial < 5; ++trial)
    {
        Pose const pose = random_pose(rng, 1.0);
        EnergyBreakdown const e =
            total_energy(b, chair, pose, EnergyWeights{}, Pose{});
        CHECK(e.e_pen >= 0.0);
        CHECK(e.e_self >= 0.0);
        CHECK(e.e_feas >= 0.0);
        CHECK(e.e_spine >= 0.0);
        CHECK(e.e_sit >= 0.0);
        CHECK(e.e_sym >= 0.0);
    }
}

TEST_CASE("total energy is the weighted sum of the standalone terms")
{
    BodyModel const& b = female_body();
    geom::ChairAsm const chair = symmetric_chair();
    EnergyWeights w;
    w.tau = 2e-3;
    Rng rng(0xe7);
    Pose const init = random_pose(rng, 0.2);
    for (int trial = 0; trial < 3; ++trial)
    {
        Pose const pose = random_pose(rng, 0.5);
        EnergyBreakdown const e = total_energy(b, chair, pose, w, init);
        CHECK(e.e_grav
              == doctest::Approx(energy::grav_energy(b, pose, Vec3::UnitY(),
                                                     chair.bbox.y_min,
                                                     w.gravity))
                     .epsilon(1e-12));
        CHECK(e.e_zgrav
              == doctest::Approx(energy::grav_energy(b, pose, Vec3::UnitZ(),
                                                     chair.bbox.z_min,
                                                     w.gravity))
                     .epsilon(1e-12));
        CHECK(e.e_pen
              == doctest::Approx(energy::penetration_energy(b, chair, pose))
                     .epsilon(1e-12));
        CHECK(e.e_self
              == doctest::Approx(energy::self_penetration_energy(b, pose))
                     .epsilon(1e-12));
        CHECK(e.e_feas
              == doctest::Approx(energy::feasibility_energy(b, pose))
                     .epsilon(1e-12));
        CHECK(e.e_spine
              == doctest::Approx(energy::spine_energy(pose, init)).epsilon(1e-12));
        CHECK(e.e_sit
              == doctest::Approx(energy::sit_contact_energy(b, chair, pose, w.tau))
                     .epsilon(1e-12));
        CHECK(e.e_sym
              == doctest::Approx(energy::symmetry_energy(pose)).epsilon(1e-12));
        double const total = w.grav * e.e_grav + w.pen * e.e_pen
                             + w.self * e.e_self + w.feas * e.e_feas
                             + w.spine * e.e_spine + w.zgrav * e.e_zgrav
                             + w.sit * e.e_sit + w.sym * e.e_sym;
        CHECK(e.total == doctest::Approx(total).epsilon(1e-12));
    }
}

TEST_CASE("zero weights produce a zero gradient")
{
    BodyModel const& b = female_body();
    geom::ChairAsm const chair = symmetric_chair();
    EnergyWeights w;
    w.grav = w.pen = w.self = w.feas = 0.0;
    w.spine = w.zgrav = w.sit = w.sym = 0.0;
    Rng rng(0xe8);
    Pose const pose = random_pose(rng, 0.5);
    VecX const g = energy::total_energy_grad(b, chair, pose, w, Pose{});
    REQUIRE(g.size() == body::kPoseDof);
    CHECK(g.isZero(0.0));
}

TEST_CASE("the symmetry gradient carries unit L1 signs")
{
    BodyModel const& b = female_body();
    geom::ChairAsm const chair = symmetric_chair();
    EnergyWeights w;
    w.grav = w.pen = w.self = w.feas = 0.0;
    w.spine = w.zgrav = w.sit = 0.0;
    w.sym = 2.5;
    Pose pose;
    pose.t_glob.x() = 0.2;
    VecX const g = energy::total_energy_grad(b, chair, pose, w, Pose{});
    CHECK(g[0] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(g.tail(body::kPoseDof - 1).isZero(0.0));
}

TEST_CASE("the analytic gradient matches finite differences")
{
    BodyModel const& b = female_body();
    geom::ChairAsm const chair = symmetric_chair();
    EnergyWeights const w;
    Pose const init;
    Rng rng(0xe9);

    double const h = 1e-5;
    double const tol = 1e-3;
    long checked = 0, skipped = 0;
    for (int state = 0; state < 20; ++state)
    {
        double const scale = 0.05 + 0.45 * (double(state) / 19.0);
        Pose const pose = random_pose(rng, scale);
        VecX const g = energy::total_energy_grad(b, chair, pose, w, init);
        VecX const x0 = pose.to_vector();

        auto eval = [&](int k, double delta) {
            VecX x = x0;
            x[k] += delta;
            return total_energy(b, chair, Pose(x), w, init).total;
        };

        for (int k = 0; k < body::kPoseDof; ++k)
        {
            double const ep = eval(k, h);
            double const em = eval(k, -h);
            double const fd = (ep - em) / (2.0 * h);
            double const err = std::abs(g[k] - fd);
            bool ok = false;
            if (std::abs(g[k]) <= 1e-6)
            {
                ok = std::abs(fd) <= 2e-3;  // FD noise floor on flat components
            }
            else
            {
                ok = err <= tol * std::max(std::abs(g[k]), std::abs(fd));
            }
            if (ok)
            {
                ++checked;
                continue;
            }
            // At a kink the two one-sided differences disagree; any
            // subgradient is acceptable there, so skip the component.
            double const e0 = eval(k, 0.0);
            double const fwd = (ep - e0) / h;
            double const bwd = (e0 - em) / h;
            double const osd = std::abs(fwd - bwd);
            if (osd > tol * std::max({std::abs(fwd), std::abs(bwd), 1e-3}))
            {
                ++skipped;
                continue;
            }
            ++checked;
            CAPTURE(state);
            CAPTURE(k);
            CAPTURE(g[k]);
            CAPTURE(fd);
            CHECK(err <= tol * std::max({std::abs(g[k]), std::abs(fd), 1e-6}));
        }
    }
    // Kinks must be rare at random points.
    CHECK(double(skipped) < 0.05 * double(checked + skipped));
}

TEST_CASE("weight presets and JSON configs round-trip")
{
    EnergyWeights const def;
    EnergyWeights const preset = EnergyWeights::preset("paper-shapeassembly");
    CHECK(preset.grav == def.grav);
    CHECK(preset.pen == def.pen);
    CHECK(preset.self == def.self);
    CHECK(preset.feas == def.feas);
    CHECK(preset.spine == def.spine);
    CHECK(preset.zgrav == def.zgrav);
    CHECK(preset.sit == def.sit);
    CHECK(preset.sym == def.sym);
    CHECK(preset.tau == def.tau);
    CHECK(preset.gravity == def.gravity);
    CHECK(def.grav == doctest::Approx(19.6));
    CHECK(def.sit == doctest::Approx(17.0));

    EnergyWeights const parsed = EnergyWeights::from_json(
        R"({"alpha_sit": 3.5, "tau": 0.002})");
    CHECK(parsed.sit == doctest::Approx(3.5));
    CHECK(parsed.tau == doctest::Approx(0.002));
    CHECK(parsed.grav == def.grav);

    EnergyWeights const round = EnergyWeights::from_json(parsed.to_json());
    CHECK(round.sit == parsed.sit);
    CHECK(round.tau == parsed.tau);
    CHECK(round.sym == parsed.sym);

    CHECK_THROWS(EnergyWeights::from_json(R"({"alpha_bogus": 1.0})"));
    CHECK_THROWS(EnergyWeights::from_json(R"({"alpha_sit": -1.0})"));
    CHECK_THROWS(EnergyWeights::preset("unknown"));
}
