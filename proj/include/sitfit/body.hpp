//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file body.hpp  Articulated capsule body: skeleton, shape, FK, skinning.
//---------------------------------------------------------------------------//
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sitfit/common.hpp"
#include "sitfit/geometry.hpp"

namespace sitfit::body
{

//! Joint indices (fixed order; bones are joints 1..21, bone b = joint b+1).
enum Joint : int
{
    kPelvis = 0,
    kLHip,
    kRHip,
    kLKnee,
    kRKnee,
    kLAnkle,
    kRAnkle,
    kLFoot,
    kRFoot,
    kSpine1,
    kSpine2,
    kSpine3,
    kNeck,
    kHead,
    kLCollar,
    kRCollar,
    kLShoulder,
    kRShoulder,
    kLElbow,
    kRElbow,
    kLWrist,
    kRWrist,
};

int constexpr kNumJoints = 22;
int constexpr kNumBones = 21;
int constexpr kPoseDof = 69;  //!< t_glob(3) + r_glob(3) + 21 bone rotations

//! Resolved rest skeleton (shape already applied).
struct Skeleton
{
    std::array<int, kNumJoints> parent;
    std::array<Vec3, kNumJoints> offset;    //!< rest offset from parent
    std::array<Vec3, kNumJoints> rest_pos;  //!< accumulated rest position
    std::array<double, kNumBones> radius;   //!< capsule radius of bone b

    //! Swing-twist frames per bone: twist axis and the two swing axes the
    //! (phi, theta) grid coordinates project onto.
    std::array<Vec3, kNumBones> swing_dir;
    std::array<Vec3, kNumBones> swing_e1;
    std::array<Vec3, kNumBones> swing_e2;

    static std::array<char const*, kNumJoints> const& joint_names();
    //! Left/right twin joints, left first (8 pairs).
    static std::array<std::pair<int, int>, 8> const& twin_joints();
    //! Non-root joints without a twin: spine1..3, neck, head.
    static std::array<int, 5> const& center_joints();
    //! Spine bone subset (as joints).
    static std::array<int, 3> const& spine_joints();
};

//! 18 reals: 16 body-shape coefficients plus a 2-d one-hot sex selector
//! (index 16 = female, index 17 = male; exactly one of the two is 1).
struct ShapeVec
{
    std::array<double, 18> v{};

    static ShapeVec female();
    static ShapeVec male();
    bool is_male() const { return v[17] == 1.0; }
};

//! Pose: 69 reals. Axis-angle magnitudes are wrapped below 2*pi on
//! construction; all entries must be finite.
struct Pose
{
    Vec3 t_glob{Vec3::Zero()};
    Vec3 r_glob{Vec3::Zero()};
    std::array<Vec3, kNumBones> bone_rot{};

    Pose() { bone_rot.fill(Vec3::Zero()); }
    //! Construct from the packed 69-vector (t_glob, r_glob, bones in order).
    explicit Pose(VecX const& packed);
    VecX to_vector() const;
};

//! World transform of each joint frame. A point x given in rest coordinates
//! and rigidly attached to joint j maps to pos[j] + rot[j] * (x - rest_pos[j]).
struct PoseFrames
{
    std::array<Mat3, kNumJoints> rot;
    std::array<Vec3, kNumJoints> pos;  //!< world joint positions
};

//! Rigid skin binding: vertex follows joint_a's frame, optionally blended
//! 50/50 with joint_b's frame (joint_b < 0 for a rigid single-frame bind).
struct SkinBinding
{
    int joint_a{0};
    int joint_b{-1};
};

//! A capsule in rest coordinates.
struct Capsule
{
    Vec3 a, b;
    double radius;
};

//! Per-bone joint-limit data: signed grid over swing angles plus a scalar
//! twist bound (radians).
struct JointLimits
{
    std::array<geom::SignedGrid2D, kNumBones> grid;
    std::array<double, kNumBones> twist_bound;
};

//! Immutable body: resolved skeleton, capsule surface mesh, skinning table,
//! sit-region vertices, Monte Carlo joint masses, joint limits.
struct BodyModel
{
    Skeleton skeleton;
    ShapeVec shape;
    std::vector<Vec3> rest_vertices;
    std::vector<Vec3> rest_normals;
    std::vector<std::array<int, 3>> triangles;
    std::vector<SkinBinding> bindings;
    std::vector<int> sit_vertices;  //!< indices into rest_vertices
    std::array<double, kNumJoints> masses;
    double total_mass{kBodyMass};
    JointLimits limits;
    //! Non-adjacent capsule pairs with rest clearance, for self-penetration.
    std::vector<std::pair<int, int>> self_pairs;

    Capsule rest_capsule(int bone) const;
    //! Vertices per capsule: two 10-vertex rings plus two apex points.
    static int constexpr kVertsPerCapsule = 22;
    //! First vertex index of a bone's capsule block.
    static int capsule_vertex_base(int bone) { return kVertsPerCapsule * bone; }
};

//! Deterministic body construction from a shape vector.
BodyModel build_body(ShapeVec const& shape);

//! Forward kinematics: root transform translation(t_glob)*rot(r_glob),
//! children composed down the tree.
PoseFrames forward_kinematics(BodyModel const& body, Pose const& pose);

//! Posed surface mesh (fixed vertex order matching rest_vertices).
std::vector<Vec3> skin_mesh(BodyModel const& body, Pose const& pose);
//! Skin using precomputed frames (shared FK between energy terms).
std::vector<Vec3> skin_mesh(BodyModel const& body, PoseFrames const& frames);

//! Monte Carlo joint masses: uniform samples in the rest-mesh bounding box,
//! interior points assigned to the nearest joint; twin-symmetrized and
//! renormalized to total_mass.
std::array<double, kNumJoints>
joint_masses(BodyModel const& body, std::size_t n_samples, std::uint64_t seed);

//! Raw Monte Carlo kernel on explicit capsules (no symmetrization): returns
//! the interior-point fraction per joint. Errors if nothing lands inside.
//! The interior hit count is reported for callers that need error bars.
std::vector<double> mc_joint_fractions(std::vector<Vec3> const& joint_pos,
                                       std::vector<Capsule> const& capsules,
                                       Vec3 const& bbox_lo,
                                       Vec3 const& bbox_hi,
                                       std::size_t n_samples,
                                       std::uint64_t seed,
                                       std::size_t* interior_count = nullptr);

//! Per-bone signed validity grids: box swing predicate on a 64x64 grid over
//! [-pi, pi]^2 fed through the signed distance transform.
JointLimits build_joint_limits(Skeleton const& skeleton);

//! Swing-twist split of one bone's axis-angle rotation: grid coordinates
//! (phi, theta) and the twist angle about the bone axis (wrapped to
//! (-pi, pi]).
struct SwingTwist
{
    double phi, theta, twist;
};
SwingTwist swing_twist(Skeleton const& skeleton, int bone, Vec3 const& axis_angle);

//! Mirror a pose about the yz-plane: twin rotations swap and axis-angle
//! components map (x, y, z) -> (x, -y, -z); t_glob.x flips.
Pose mirror_pose(Pose const& pose);

//! Pose JSON: a bare array of 69 numbers. Shape JSON: {"shape": [18 numbers]}.
std::string pose_to_json(Pose const& pose);
Pose pose_from_json(std::string const& text);
std::string shape_to_json(ShapeVec const& shape);
ShapeVec shape_from_json(std::string const& text);

//! Swing-twist kernel shared by the double and dual-number paths: splits an
//! axis-angle rotation about `dir` and projects the swing onto (e1, e2).
//! The twist angle is wrapped to (-pi, pi].
template<class T>
void swing_twist_core(Vec3 const& dir,
                      Vec3 const& e1,
                      Vec3 const& e2,
                      Eigen::Matrix<T, 3, 1> const& aa,
                      T* phi,
                      T* theta,
                      T* twist)
{
    using std::atan2;
    using std::cos;
    using std::sin;
    using std::sqrt;
    using V = Eigen::Matrix<T, 3, 1>;
    *phi = T(0);
    *theta = T(0);
    *twist = T(0);
    T const theta2 = aa.squaredNorm();
    if (theta2 < T(1e-24))
    {
        return;
    }
    T const angle = sqrt(theta2);
    T const half = T(0.5) * angle;
    // sin(angle/2)/angle, with a series through the origin.
    T const sfac = angle < T(1e-4) ? T(0.5) - theta2 / T(48) : sin(half) / angle;
    T const qw = cos(half);
    V const qv = sfac * aa;
    V const dir_t = dir.cast<T>();
    T const proj = qv.dot(dir_t);
    T tw = T(2) * atan2(proj, qw);
    while (tw > T(M_PI))
    {
        tw -= T(2 * M_PI);
    }
    while (tw <= T(-M_PI))
    {
        tw += T(2 * M_PI);
    }
    *twist = tw;
    // swing = q * conj(twist quaternion)
    T const qtw = cos(T(0.5) * tw);
    V const qtv = sin(T(0.5) * tw) * dir_t;
    T sw = qw * qtw + qv.dot(qtv);
    V sv = qtw * qv - qw * qtv - qv.cross(qtv);
    if (sw < T(0))
    {
        sw = -sw;
        sv = -sv;
    }
    T const svn2 = sv.squaredNorm();
    if (svn2 < T(1e-24))
    {
        return;
    }
    T const svn = sqrt(svn2);
    T const s = T(2) * atan2(svn, sw);
    *phi = s * sv.dot(e1.cast<T>()) / svn;
    *theta = s * sv.dot(e2.cast<T>()) / svn;
}

//! Rodrigues rotation matrix from an axis-angle vector. Templated so the
//! same series/closed-form branch structure serves dual-number derivatives.
template<class T>
Eigen::Matrix<T, 3, 3> rodrigues(Eigen::Matrix<T, 3, 1> const& r)
{
    using std::cos;
    using std::sin;
    using std::sqrt;
    using Mat = Eigen::Matrix<T, 3, 3>;
    T const theta2 = r.squaredNorm();
    Mat k = Mat::Zero();
    k(0, 1) = -r.z();
    k(0, 2) = r.y();
    k(1, 0) = r.z();
    k(1, 2) = -r.x();
    k(2, 0) = -r.y();
    k(2, 1) = r.x();
    T a, b;
    if (theta2 < T(1e-12))
    {
        // Series keeps the value and derivative finite through theta = 0.
        a = T(1) - theta2 / T(6);
        b = T(0.5) - theta2 / T(24);
    }
    else
    {
        T const theta = sqrt(theta2);
        a = sin(theta) / theta;
        b = (T(1) - cos(theta)) / theta2;
    }
    return Mat::Identity() + a * k + b * (k * k);
}

}  // namespace sitfit::body
