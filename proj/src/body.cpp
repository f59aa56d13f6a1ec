//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file body.cpp  Articulated capsule body: skeleton, shape, FK, skinning.
//---------------------------------------------------------------------------//
#include "sitfit/body.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "sitfit/rng.hpp"

namespace sitfit::body
{

namespace
{

//! Mirror about the yz-plane.
Vec3 mirror_x(Vec3 const& v)
{
    return {-v.x(), v.y(), v.z()};
}

//! Axis-angle mirror about the yz-plane: conjugating a rotation by the
//! reflection negates the components parallel to the plane.
Vec3 mirror_axis_angle(Vec3 const& r)
{
    return {r.x(), -r.y(), -r.z()};
}

//! Deterministic orthonormal frame perpendicular to a unit direction. The
//! lateral axis is preferred so that grid coordinates read as
//! flexion/extension (about e1) and lateral deviation (about e2).
void perpendicular_frame(Vec3 const& dir, Vec3* e1, Vec3* e2)
{
    Vec3 const ref =
        std::abs(dir.x()) > 0.9 ? Vec3{Vec3::UnitY()} : Vec3{Vec3::UnitX()};
    *e1 = (ref - ref.dot(dir) * dir).normalized();
    *e2 = dir.cross(*e1);
}

//! Twin joint of j, or j itself for center joints.
int twin_of(int j)
{
    for (auto const& [l, r] : Skeleton::twin_joints())
    {
        if (j == l)
        {
            return r;
        }
        if (j == r)
        {
            return l;
        }
    }
    return j;
}

//! First child of a joint in index order, or -1 for leaves.
int first_child(std::array<int, kNumJoints> const& parent, int j)
{
    for (int c = 0; c < kNumJoints; ++c)
    {
        if (parent[c] == j)
        {
            return c;
        }
    }
    return -1;
}

struct LimitBox
{
    double phi_lo, phi_hi, theta_lo, theta_hi, twist;
};

//! Per-bone swing boxes (radians), shared between left/right twins. Ranges
//! keep the rest pose strictly inside at the 64-cell grid resolution.
LimitBox limit_box(int joint)
{
    switch (joint)
    {
        case kLHip:
        case kRHip:
            return {-2.4, 0.35, -0.9, 0.9, 0.8};
        case kLKnee:
        case kRKnee:
            return {-0.1, 2.4, -0.2, 0.2, 0.3};
        case kLAnkle:
        case kRAnkle:
            return {-0.9, 0.9, -0.45, 0.45, 0.45};
        case kLFoot:
        case kRFoot:
            return {-0.5, 0.5, -0.35, 0.35, 0.35};
        case kSpine1:
        case kSpine2:
        case kSpine3:
            return {-0.45, 0.6, -0.45, 0.45, 0.45};
        case kNeck:
            return {-0.6, 0.8, -0.6, 0.6, 0.8};
        case kHead:
            return {-0.5, 0.5, -0.45, 0.45, 0.6};
        case kLCollar:
        case kRCollar:
            return {-0.3, 0.35, -0.3, 0.3, 0.25};
        case kLShoulder:
        case kRShoulder:
            return {-1.6, 1.6, -1.9, 1.0, 1.2};
        case kLElbow:
        case kRElbow:
            return {-2.5, 0.15, -0.35, 0.35, 1.4};
        default:
            return {-0.6, 0.6, -0.6, 0.6, 0.7};  // wrists
    }
}

//! Base skeleton dimensions. Left-side x offsets are positive; right twins
//! mirror them exactly.
struct BaseTables
{
    std::array<int, kNumJoints> parent;
    std::array<Vec3, kNumJoints> offset;
    std::array<double, kNumBones> radius;
};

BaseTables base_tables(bool male)
{
    BaseTables t;
    t.parent = {-1, 0, 0, 1, 2, 3, 4, 5, 6, 0, 9, 10, 11, 12, 11, 11, 14, 15, 16, 17, 18, 19};
    double const hip_x = male ? 0.082 : 0.089;
    double const collar_x = male ? 0.065 : 0.06;
    double const shoulder_x = male ? 0.125 : 0.115;
    t.offset[kPelvis] = {0, 0, 0};
    t.offset[kLHip] = {hip_x, -0.06, 0};
    t.offset[kLKnee] = {0, -0.41, 0};
    t.offset[kLAnkle] = {0, -0.40, 0};
    t.offset[kLFoot] = {0, -0.06, 0.13};
    t.offset[kSpine1] = {0, 0.11, -0.01};
    t.offset[kSpine2] = {0, 0.13, 0.005};
    t.offset[kSpine3] = {0, 0.13, 0.005};
    t.offset[kNeck] = {0, 0.12, 0};
    t.offset[kHead] = {0, 0.15, 0.01};
    t.offset[kLCollar] = {collar_x, 0.06, 0};
    t.offset[kLShoulder] = {shoulder_x, 0.02, 0};
    t.offset[kLElbow] = {0.26, 0, 0};
    t.offset[kLWrist] = {0.245, 0, 0};
    for (auto const& [l, r] : Skeleton::twin_joints())
    {
        t.offset[r] = mirror_x(t.offset[l]);
    }
    if (male)
    {
        for (auto& o : t.offset)
        {
            o *= 1.06;
        }
    }
    auto radius_of = [](int joint) {
        switch (joint)
        {
            case kLHip:
            case kRHip:
                return 0.085;
            case kLKnee:
            case kRKnee:
                return 0.07;
            case kLAnkle:
            case kRAnkle:
                return 0.05;
            case kLFoot:
            case kRFoot:
                return 0.04;
            case kSpine1:
            case kSpine2:
                return 0.095;
            case kSpine3:
                return 0.09;
            case kNeck:
                return 0.05;
            case kHead:
                return 0.09;
            case kLCollar:
            case kRCollar:
                return 0.05;
            case kLShoulder:
            case kRShoulder:
                return 0.055;
            case kLElbow:
            case kRElbow:
                return 0.045;
            default:
                return 0.038;  // wrists
        }
    };
    for (int b = 0; b < kNumBones; ++b)
    {
        t.radius[b] = radius_of(b + 1);
    }
    return t;
}

double shape_factor(double coeff)
{
    return std::clamp(1.0 + 0.1 * coeff, 0.8, 1.2);
}

//! Regional shape knobs: which joints' offsets (lengths) and which bones'
//! radii each of components 2..15 scales. Symmetric across twins by
//! construction so any shape yields a bilaterally symmetric body.
struct RegionRule
{
    int component;
    std::vector<int> length_joints;
    std::vector<int> radius_joints;  //!< bone given by its distal joint
};

std::vector<RegionRule> const& region_rules()
{
    static std::vector<RegionRule> const rules = {
        {2, {kLKnee, kRKnee, kLAnkle, kRAnkle, kLFoot, kRFoot}, {}},
        {3, {}, {kLKnee, kRKnee, kLAnkle, kRAnkle, kLFoot, kRFoot}},
        {4, {kLElbow, kRElbow, kLWrist, kRWrist}, {}},
        {5, {}, {kLElbow, kRElbow, kLWrist, kRWrist}},
        {6, {kSpine1, kSpine2, kSpine3}, {}},
        {7, {}, {kSpine1, kSpine2, kSpine3}},
        {8, {kLHip, kRHip}, {}},
        {9, {kLCollar, kRCollar, kLShoulder, kRShoulder}, {}},
        {10, {kHead}, {kHead}},
        {11, {kNeck}, {}},
        {12, {kLFoot, kRFoot}, {kLFoot, kRFoot}},
        {13, {}, {kLHip, kRHip}},
        {14, {}, {kNeck}},
        {15, {kSpine2, kSpine3}, {}},
    };
    return rules;
}

Skeleton build_skeleton(ShapeVec const& shape)
{
    BaseTables const base = base_tables(shape.is_male());
    std::array<double, kNumJoints> length_scale;
    std::array<double, kNumBones> radius_scale;
    length_scale.fill(shape_factor(shape.v[0]));
    radius_scale.fill(shape_factor(shape.v[1]));
    for (auto const& rule : region_rules())
    {
        double const f = shape_factor(shape.v[rule.component]);
        for (int j : rule.length_joints)
        {
            length_scale[j] *= f;
        }
        for (int j : rule.radius_joints)
        {
            radius_scale[j - 1] *= f;
        }
    }

    Skeleton sk;
    sk.parent = base.parent;
    sk.offset[0] = Vec3::Zero();
    sk.rest_pos[0] = Vec3::Zero();
    for (int j = 1; j < kNumJoints; ++j)
    {
        sk.offset[j] = length_scale[j] * base.offset[j];
        sk.rest_pos[j] = sk.rest_pos[base.parent[j]] + sk.offset[j];
    }
    for (int b = 0; b < kNumBones; ++b)
    {
        sk.radius[b] = radius_scale[b] * base.radius[b];
    }

    // Swing-twist frames: twist axis along the first outgoing bone (the
    // incoming one at leaves); right twins mirror the left frame exactly so
    // mirrored poses land on identical grid coordinates.
    for (int b = 0; b < kNumBones; ++b)
    {
        int const j = b + 1;
        int const tw = twin_of(j);
        if (tw < j)
        {
            sk.swing_dir[b] = mirror_x(sk.swing_dir[tw - 1]);
            sk.swing_e1[b] = -mirror_x(sk.swing_e1[tw - 1]);
            sk.swing_e2[b] = -mirror_x(sk.swing_e2[tw - 1]);
            continue;
        }
        int const child = first_child(sk.parent, j);
        Vec3 const dir =
            (child >= 0 ? sk.offset[child] : sk.offset[j]).normalized();
        sk.swing_dir[b] = dir;
        perpendicular_frame(dir, &sk.swing_e1[b], &sk.swing_e2[b]);
    }
    return sk;
}

int constexpr kRingVerts = 10;
int constexpr kCapsuleVerts = 2 * kRingVerts + 2;  //!< 2 rings + 2 apex points
static_assert(kCapsuleVerts == BodyModel::kVertsPerCapsule,
              "mesh layout must match the public capsule block size");

//! Vertices/normals of one capsule in rest coordinates: ring0 at the
//! proximal end, ring1 at the distal end, then the two apex points. Ring
//! angles start at half the angular step so the pattern is closed under
//! x-mirroring. Ten verts per ring keeps the contact bands dense enough
//! that a seated body is statically supported by the penetration term.
void build_capsule_geometry(Vec3 const& a,
                            Vec3 const& b,
                            double radius,
                            std::vector<Vec3>* verts,
                            std::vector<Vec3>* normals)
{
    Vec3 const dir = (b - a).normalized();
    Vec3 u, v;
    perpendicular_frame(dir, &u, &v);
    for (Vec3 const& end : {a, b})
    {
        for (int k = 0; k < kRingVerts; ++k)
        {
            double const ang =
                M_PI / kRingVerts + k * (2.0 * M_PI / kRingVerts);
            Vec3 const n = std::cos(ang) * u + std::sin(ang) * v;
            verts->push_back(end + radius * n);
            normals->push_back(n);
        }
    }
    verts->push_back(a - radius * dir);
    normals->push_back(-dir);
    verts->push_back(b + radius * dir);
    normals->push_back(dir);
}

//! Triangles of one capsule (4 per ring vertex, outward winding), local
//! vertex indices.
std::vector<std::array<int, 3>> capsule_triangles()
{
    std::vector<std::array<int, 3>> tris;
    int const pole0 = 2 * kRingVerts, pole1 = 2 * kRingVerts + 1;
    for (int k = 0; k < kRingVerts; ++k)
    {
        int const k1 = (k + 1) % kRingVerts;
        tris.push_back({k, k1, kRingVerts + k1});
        tris.push_back({k, kRingVerts + k1, kRingVerts + k});
        tris.push_back({kRingVerts + k, kRingVerts + k1, pole1});
        tris.push_back({k1, k, pole0});
    }
    return tris;
}

}  // namespace

std::array<char const*, kNumJoints> const& Skeleton::joint_names()
{
    static std::array<char const*, kNumJoints> const names = {
        "pelvis",     "l_hip",      "r_hip",   "l_knee",   "r_knee",
        "l_ankle",    "r_ankle",    "l_foot",  "r_foot",   "spine1",
        "spine2",     "spine3",     "neck",    "head",     "l_collar",
        "r_collar",   "l_shoulder", "r_shoulder", "l_elbow", "r_elbow",
        "l_wrist",    "r_wrist"};
    return names;
}

std::array<std::pair<int, int>, 8> const& Skeleton::twin_joints()
{
    static std::array<std::pair<int, int>, 8> const twins = {{
        {kLHip, kRHip},
        {kLKnee, kRKnee},
        {kLAnkle, kRAnkle},
        {kLFoot, kRFoot},
        {kLCollar, kRCollar},
        {kLShoulder, kRShoulder},
        {kLElbow, kRElbow},
        {kLWrist, kRWrist},
    }};
    return twins;
}

std::array<int, 5> const& Skeleton::center_joints()
{
    static std::array<int, 5> const centers = {kSpine1, kSpine2, kSpine3, kNeck, kHead};
    return centers;
}

std::array<int, 3> const& Skeleton::spine_joints()
{
    static std::array<int, 3> const spine = {kSpine1, kSpine2, kSpine3};
    return spine;
}

ShapeVec ShapeVec::female()
{
    ShapeVec s;
    s.v[16] = 1.0;
    return s;
}

ShapeVec ShapeVec::male()
{
    ShapeVec s;
    s.v[17] = 1.0;
    return s;
}

Pose::Pose(VecX const& packed)
{
    SITFIT_REQUIRE(packed.size() == kPoseDof, "pose vector must have 69 entries");
    SITFIT_REQUIRE(packed.allFinite(), "pose entries must be finite");
    auto wrap = [](Vec3 v) {
        double const theta = v.norm();
        if (theta >= 2.0 * M_PI)
        {
            v *= std::fmod(theta, 2.0 * M_PI) / theta;
        }
        return v;
    };
    t_glob = packed.segment<3>(0);
    r_glob = wrap(packed.segment<3>(3));
    for (int b = 0; b < kNumBones; ++b)
    {
        bone_rot[b] = wrap(packed.segment<3>(6 + 3 * b));
    }
}

VecX Pose::to_vector() const
{
    VecX out(kPoseDof);
    out.segment<3>(0) = t_glob;
    out.segment<3>(3) = r_glob;
    for (int b = 0; b < kNumBones; ++b)
    {
        out.segment<3>(6 + 3 * b) = bone_rot[b];
    }
    return out;
}

Capsule BodyModel::rest_capsule(int bone) const
{
    int const j = bone + 1;
    return {skeleton.rest_pos[skeleton.parent[j]],
            skeleton.rest_pos[j],
            skeleton.radius[bone]};
}

BodyModel build_body(ShapeVec const& shape)
{
    for (double x : shape.v)
    {
        SITFIT_REQUIRE(std::isfinite(x), "shape entries must be finite");
    }
    bool const one_hot = (shape.v[16] == 1.0 && shape.v[17] == 0.0)
                         || (shape.v[16] == 0.0 && shape.v[17] == 1.0);
    SITFIT_REQUIRE(one_hot, "shape sex selector must be a one-hot pair");

    BodyModel body;
    body.shape = shape;
    body.skeleton = build_skeleton(shape);
    Skeleton const& sk = body.skeleton;

    // Surface mesh: one 18-vertex capsule per bone. Left and center capsules
    // are built from the parameterization; right twins mirror the left
    // vertices exactly (winding flipped) so twin vertices satisfy
    // x_left + x_right = 0 to machine precision.
    auto const local_tris = capsule_triangles();
    for (int b = 0; b < kNumBones; ++b)
    {
        int const j = b + 1;
        int const tw = twin_of(j);
        int const base = BodyModel::capsule_vertex_base(b);
        if (tw < j)
        {
            int const twin_base = BodyModel::capsule_vertex_base(tw - 1);
            for (int i = 0; i < kCapsuleVerts; ++i)
            {
                body.rest_vertices.push_back(mirror_x(body.rest_vertices[twin_base + i]));
                body.rest_normals.push_back(mirror_x(body.rest_normals[twin_base + i]));
            }
            for (auto const& t : local_tris)
            {
                body.triangles.push_back({base + t[0], base + t[2], base + t[1]});
            }
        }
        else
        {
            Capsule const cap = body.rest_capsule(b);
            build_capsule_geometry(
                cap.a, cap.b, cap.radius, &body.rest_vertices, &body.rest_normals);
            for (auto const& t : local_tris)
            {
                body.triangles.push_back({base + t[0], base + t[1], base + t[2]});
            }
        }
        // Skinning: the capsule rides its proximal joint's frame; the distal
        // cap (far ring + apex) blends 50/50 with the distal joint's frame so
        // bent joints do not crack open.
        int const p = sk.parent[j];
        for (int i = 0; i < kCapsuleVerts; ++i)
        {
            bool const distal = (i >= kRingVerts && i < 2 * kRingVerts)
                                || i == 2 * kRingVerts + 1;
            body.bindings.push_back({p, distal ? j : -1});
        }
    }

    // Sit region: back and glutes — vertices of the lumbar/spine and pelvic
    // girdle capsules whose rest normal points backward.
    for (int j : {kSpine1, kSpine2, kSpine3, kLHip, kRHip})
    {
        int const base = BodyModel::capsule_vertex_base(j - 1);
        for (int i = 0; i < kCapsuleVerts; ++i)
        {
            if (body.rest_normals[base + i].z() < -0.3)
            {
                body.sit_vertices.push_back(base + i);
            }
        }
    }
    SITFIT_REQUIRE(!body.sit_vertices.empty(), "sit region must be non-empty");

    // Non-adjacent capsule pairs with rest clearance; pairs that already
    // touch at rest (e.g. shoulder against neck) are excluded so the
    // self-penetration energy is exactly zero at rest.
    for (int b1 = 0; b1 < kNumBones; ++b1)
    {
        for (int b2 = b1 + 1; b2 < kNumBones; ++b2)
        {
            int const j1 = b1 + 1, j2 = b2 + 1;
            int const p1 = sk.parent[j1], p2 = sk.parent[j2];
            if (j1 == p2 || j2 == p1 || p1 == p2)
            {
                continue;
            }
            Capsule const c1 = body.rest_capsule(b1);
            Capsule const c2 = body.rest_capsule(b2);
            double const dist = geom::segment_distance(c1.a, c1.b, c2.a, c2.b);
            if (dist >= c1.radius + c2.radius + 0.005)
            {
                body.self_pairs.push_back({b1, b2});
            }
        }
    }

    body.total_mass = kBodyMass;
    body.masses = joint_masses(body, 200000, 0x51f17u);
    body.limits = build_joint_limits(sk);
    for (int b = 0; b < kNumBones; ++b)
    {
        SITFIT_REQUIRE(geom::bilerp(body.limits.grid[b], 0.0, 0.0) < 0.0,
                       "rest pose must be strictly inside the joint limits");
    }
    return body;
}

PoseFrames forward_kinematics(BodyModel const& body, Pose const& pose)
{
    Skeleton const& sk = body.skeleton;
    PoseFrames fk;
    fk.rot[0] = rodrigues<double>(pose.r_glob);
    fk.pos[0] = pose.t_glob;
    for (int j = 1; j < kNumJoints; ++j)
    {
        int const p = sk.parent[j];
        fk.rot[j] = fk.rot[p] * rodrigues<double>(pose.bone_rot[j - 1]);
        fk.pos[j] = fk.pos[p] + fk.rot[p] * sk.offset[j];
    }
    return fk;
}

std::vector<Vec3> skin_mesh(BodyModel const& body, PoseFrames const& frames)
{
    Skeleton const& sk = body.skeleton;
    std::vector<Vec3> out(body.rest_vertices.size());
    for (std::size_t i = 0; i < out.size(); ++i)
    {
        SkinBinding const& bind = body.bindings[i];
        Vec3 const& v = body.rest_vertices[i];
        Vec3 const pa = frames.pos[bind.joint_a]
                        + frames.rot[bind.joint_a] * (v - sk.rest_pos[bind.joint_a]);
        if (bind.joint_b < 0)
        {
            out[i] = pa;
        }
        else
        {
            Vec3 const pb =
                frames.pos[bind.joint_b]
                + frames.rot[bind.joint_b] * (v - sk.rest_pos[bind.joint_b]);
            out[i] = 0.5 * (pa + pb);
        }
    }
    return out;
}

std::vector<Vec3> skin_mesh(BodyModel const& body, Pose const& pose)
{
    return skin_mesh(body, forward_kinematics(body, pose));
}

std::vector<double> mc_joint_fractions(std::vector<Vec3> const& joint_pos,
                                       std::vector<Capsule> const& capsules,
                                       Vec3 const& bbox_lo,
                                       Vec3 const& bbox_hi,
                                       std::size_t n_samples,
                                       std::uint64_t seed,
                                       std::size_t* interior_count)
{
    SITFIT_REQUIRE(n_samples >= 10000, "mass sampling needs at least 1e4 points");
    std::vector<std::size_t> hits(joint_pos.size(), 0);
    std::size_t interior = 0;
    Rng rng(seed);
    for (std::size_t k = 0; k < n_samples; ++k)
    {
        Vec3 const p{rng.uniform(bbox_lo.x(), bbox_hi.x()),
                     rng.uniform(bbox_lo.y(), bbox_hi.y()),
                     rng.uniform(bbox_lo.z(), bbox_hi.z())};
        bool inside = false;
        for (auto const& c : capsules)
        {
            if (geom::point_segment_distance(p, c.a, c.b) <= c.radius)
            {
                inside = true;
                break;
            }
        }
        if (!inside)
        {
            continue;
        }
        ++interior;
        std::size_t nearest = 0;
        double best = (p - joint_pos[0]).squaredNorm();
        for (std::size_t j = 1; j < joint_pos.size(); ++j)
        {
            double const d2 = (p - joint_pos[j]).squaredNorm();
            if (d2 < best)
            {
                best = d2;
                nearest = j;
            }
        }
        ++hits[nearest];
    }
    SITFIT_REQUIRE(interior > 0, "no interior points: degenerate body");
    if (interior_count != nullptr)
    {
        *interior_count = interior;
    }
    std::vector<double> fractions(joint_pos.size());
    for (std::size_t j = 0; j < joint_pos.size(); ++j)
    {
        fractions[j] = double(hits[j]) / double(interior);
    }
    return fractions;
}

std::array<double, kNumJoints>
joint_masses(BodyModel const& body, std::size_t n_samples, std::uint64_t seed)
{
    Vec3 lo = body.rest_vertices.front(), hi = lo;
    for (auto const& v : body.rest_vertices)
    {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    std::vector<Vec3> joints(body.skeleton.rest_pos.begin(), body.skeleton.rest_pos.end());
    std::vector<Capsule> capsules;
    for (int b = 0; b < kNumBones; ++b)
    {
        capsules.push_back(body.rest_capsule(b));
    }
    std::vector<double> f =
        mc_joint_fractions(joints, capsules, lo, hi, n_samples, seed);
    // Twin symmetrization keeps mirror-symmetric poses at exactly equal
    // gravitational energy; renormalize to the exact total afterwards.
    for (auto const& [l, r] : Skeleton::twin_joints())
    {
        double const avg = 0.5 * (f[l] + f[r]);
        f[l] = avg;
        f[r] = avg;
    }
    double const sum = std::accumulate(f.begin(), f.end(), 0.0);
    std::array<double, kNumJoints> masses;
    for (int j = 0; j < kNumJoints; ++j)
    {
        masses[j] = body.total_mass * f[j] / sum;
    }
    return masses;
}

JointLimits build_joint_limits(Skeleton const& skeleton)
{
    (void)skeleton;
    JointLimits limits;
    int constexpr kGrid = 64;
    for (int b = 0; b < kNumBones; ++b)
    {
        LimitBox const box = limit_box(b + 1);
        limits.twist_bound[b] = box.twist;
        std::vector<std::uint8_t> valid(std::size_t(kGrid) * kGrid, 0);
        double const step = 2.0 * M_PI / kGrid;
        for (int y = 0; y < kGrid; ++y)
        {
            double const theta = -M_PI + (y + 0.5) * step;
            for (int x = 0; x < kGrid; ++x)
            {
                double const phi = -M_PI + (x + 0.5) * step;
                bool const ok = phi >= box.phi_lo && phi <= box.phi_hi
                                && theta >= box.theta_lo && theta <= box.theta_hi;
                valid[std::size_t(y) * kGrid + x] = ok ? 1 : 0;
            }
        }
        limits.grid[b] =
            geom::distance_transform(valid, kGrid, kGrid, -M_PI, M_PI, -M_PI, M_PI);
    }
    return limits;
}

SwingTwist swing_twist(Skeleton const& skeleton, int bone, Vec3 const& axis_angle)
{
    SwingTwist out;
    swing_twist_core<double>(skeleton.swing_dir[bone],
                             skeleton.swing_e1[bone],
                             skeleton.swing_e2[bone],
                             axis_angle,
                             &out.phi,
                             &out.theta,
                             &out.twist);
    return out;
}

Pose mirror_pose(Pose const& pose)
{
    Pose out;
    out.t_glob = mirror_x(pose.t_glob);
    out.r_glob = mirror_axis_angle(pose.r_glob);
    for (int b = 0; b < kNumBones; ++b)
    {
        int const src = twin_of(b + 1) - 1;
        out.bone_rot[b] = mirror_axis_angle(pose.bone_rot[src]);
    }
    return out;
}

std::string pose_to_json(Pose const& pose)
{
    nlohmann::json arr = nlohmann::json::array();
    VecX const v = pose.to_vector();
    for (int i = 0; i < v.size(); ++i)
    {
        arr.push_back(v[i]);
    }
    return arr.dump() + "\n";
}

Pose pose_from_json(std::string const& text)
{
    nlohmann::json const doc = nlohmann::json::parse(text);
    SITFIT_REQUIRE(doc.is_array() && doc.size() == kPoseDof,
                   "pose JSON must be a bare array of 69 numbers");
    VecX v(kPoseDof);
    for (int i = 0; i < kPoseDof; ++i)
    {
        v[i] = doc[i].get<double>();
    }
    return Pose(v);
}

std::string shape_to_json(ShapeVec const& shape)
{
    nlohmann::json doc;
    doc["shape"] = shape.v;
    return doc.dump() + "\n";
}

ShapeVec shape_from_json(std::string const& text)
{
    nlohmann::json const doc = nlohmann::json::parse(text);
    SITFIT_REQUIRE(doc.contains("shape") && doc["shape"].is_array()
                       && doc["shape"].size() == 18,
                   "shape JSON must hold a 'shape' array of 18 numbers");
    ShapeVec s;
    for (int i = 0; i < 18; ++i)
    {
        s.v[i] = doc["shape"][i].get<double>();
    }
    return s;
}

}  // namespace sitfit::body
