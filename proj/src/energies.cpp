//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file energies.cpp  Differentiable sitting-pose energy terms.
//---------------------------------------------------------------------------//
#include "sitfit/energies.hpp"

#include <cmath>

#include "json.hpp"

#include "sitfit/dual.hpp"

namespace sitfit::energy
{

using body::BodyModel;
using body::kNumBones;
using body::kNumJoints;
using body::kPoseDof;
using body::Pose;
using body::PoseFrames;

namespace
{

double sign_of(double x)
{
    return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

//! Frame-space adjoints accumulated by the energy terms, then pulled back
//! through the kinematic tree.
struct Adjoint
{
    std::array<Mat3, kNumJoints> d_rot;
    std::array<Vec3, kNumJoints> d_pos;

    Adjoint()
    {
        d_rot.fill(Mat3::Zero());
        d_pos.fill(Vec3::Zero());
    }
};

//! Route a skinned-vertex adjoint into the frames it blends.
void add_vertex_adjoint(BodyModel const& b, std::size_t vert, Vec3 const& dv, Adjoint* adj)
{
    body::SkinBinding const& bind = b.bindings[vert];
    Vec3 const& v = b.rest_vertices[vert];
    double const w = bind.joint_b < 0 ? 1.0 : 0.5;
    adj->d_pos[bind.joint_a] += w * dv;
    adj->d_rot[bind.joint_a] +=
        w * dv * (v - b.skeleton.rest_pos[bind.joint_a]).transpose();
    if (bind.joint_b >= 0)
    {
        adj->d_pos[bind.joint_b] += w * dv;
        adj->d_rot[bind.joint_b] +=
            w * dv * (v - b.skeleton.rest_pos[bind.joint_b]).transpose();
    }
}

//! Pull frame adjoints back to the 69 pose parameters. Children carry
//! larger indices than their parents, so one descending sweep suffices.
void backprop_frames(BodyModel const& b,
                     Pose const& pose,
                     PoseFrames const& frames,
                     Adjoint* adj,
                     VecX* grad)
{
    auto contract = [](Mat3 const& d_local, Vec3 const& aa, double* out3) {
        Eigen::Matrix<Dual<3>, 3, 1> seeded;
        for (int k = 0; k < 3; ++k)
        {
            seeded[k] = Dual<3>::var(aa[k], k);
        }
        auto const m = body::rodrigues<Dual<3>>(seeded);
        for (int k = 0; k < 3; ++k)
        {
            double acc = 0.0;
            for (int r = 0; r < 3; ++r)
            {
                for (int c = 0; c < 3; ++c)
                {
                    acc += d_local(r, c) * m(r, c).d[k];
                }
            }
            out3[k] += acc;
        }
    };

    for (int j = kNumJoints - 1; j >= 1; --j)
    {
        int const p = b.skeleton.parent[j];
        Mat3 const local = body::rodrigues<double>(pose.bone_rot[j - 1]);
        adj->d_rot[p] += adj->d_rot[j] * local.transpose()
                         + adj->d_pos[j] * b.skeleton.offset[j].transpose();
        adj->d_pos[p] += adj->d_pos[j];
        Mat3 const d_local = frames.rot[p].transpose() * adj->d_rot[j];
        contract(d_local, pose.bone_rot[j - 1], grad->data() + 6 + 3 * (j - 1));
    }
    grad->segment<3>(0) += adj->d_pos[0];
    contract(adj->d_rot[0], pose.r_glob, grad->data() + 3);
}

double grav_term(BodyModel const& b,
                 PoseFrames const& frames,
                 Vec3 const& axis,
                 double floor,
                 double gravity,
                 double weight,
                 Adjoint* adj)
{
    // b.masses[j] is the joint's share of total_mass in kg, i.e. already the
    // product of the mass fraction and the body mass.
    double e = 0.0;
    for (int j = 0; j < kNumJoints; ++j)
    {
        e += gravity * (frames.pos[j].dot(axis) - floor) * b.masses[j];
        if (adj != nullptr)
        {
            adj->d_pos[j] += weight * gravity * b.masses[j] * axis;
        }
    }
    return e;
}

double pen_term(BodyModel const& b,
                geom::ChairAsm const& chair,
                std::vector<Vec3> const& mesh,
                double weight,
                Adjoint* adj)
{
    double e = 0.0;
    for (std::size_t i = 0; i < mesh.size(); ++i)
    {
        Vec3 g;
        double const d = geom::sdf_chair_grad(mesh[i], chair, adj ? &g : nullptr);
        if (d < 0.0)
        {
            e += -d;
            if (adj != nullptr)
            {
                add_vertex_adjoint(b, i, -weight * g, adj);
            }
        }
    }
    return e;
}

double self_term(BodyModel const& b,
                 PoseFrames const& frames,
                 double weight,
                 Adjoint* adj)
{
    double e = 0.0;
    for (auto const& [b1, b2] : b.self_pairs)
    {
        int const j1 = b1 + 1, j2 = b2 + 1;
        int const p1 = b.skeleton.parent[j1], p2 = b.skeleton.parent[j2];
        double s = 0.0, t = 0.0;
        double const dist = geom::segment_distance(
            frames.pos[p1], frames.pos[j1], frames.pos[p2], frames.pos[j2], &s, &t);
        double const depth = b.skeleton.radius[b1] + b.skeleton.radius[b2] - dist;
        if (depth <= 0.0)
        {
            continue;
        }
        e += depth;
        if (adj != nullptr && dist > 1e-12)
        {
            // Envelope theorem: differentiate at the fixed closest points.
            Vec3 const ca = frames.pos[p1] + s * (frames.pos[j1] - frames.pos[p1]);
            Vec3 const cb = frames.pos[p2] + t * (frames.pos[j2] - frames.pos[p2]);
            Vec3 const u = (ca - cb) / dist;
            adj->d_pos[p1] += -weight * (1.0 - s) * u;
            adj->d_pos[j1] += -weight * s * u;
            adj->d_pos[p2] += weight * (1.0 - t) * u;
            adj->d_pos[j2] += weight * t * u;
        }
    }
    return e;
}

double feas_term(BodyModel const& b, Pose const& pose, double weight, VecX* grad)
{
    double e = 0.0;
    for (int bone = 0; bone < kNumBones; ++bone)
    {
        Eigen::Matrix<Dual<3>, 3, 1> seeded;
        for (int k = 0; k < 3; ++k)
        {
            seeded[k] = Dual<3>::var(pose.bone_rot[bone][k], k);
        }
        Dual<3> phi, theta, twist;
        body::swing_twist_core<Dual<3>>(b.skeleton.swing_dir[bone],
                                        b.skeleton.swing_e1[bone],
                                        b.skeleton.swing_e2[bone],
                                        seeded,
                                        &phi,
                                        &theta,
                                        &twist);
        double gx = 0.0, gy = 0.0;
        double const d =
            geom::bilerp_grad(b.limits.grid[bone], phi.v, theta.v, &gx, &gy);
        if (d > 0.0)
        {
            e += d;
            if (grad != nullptr)
            {
                Eigen::Vector3d const dr = gx * phi.d + gy * theta.d;
                grad->segment<3>(6 + 3 * bone) += weight * dr;
            }
        }
        double const excess = std::abs(twist.v) - b.limits.twist_bound[bone];
        if (excess > 0.0)
        {
            e += excess;
            if (grad != nullptr)
            {
                grad->segment<3>(6 + 3 * bone) +=
                    weight * sign_of(twist.v) * twist.d;
            }
        }
    }
    return e;
}

double spine_term(Pose const& pose, Pose const& initial, double weight, VecX* grad)
{
    double e = 0.0;
    for (int j : body::Skeleton::spine_joints())
    {
        int const bone = j - 1;
        Vec3 const diff = pose.bone_rot[bone] - initial.bone_rot[bone];
        e += diff.cwiseAbs().sum();
        if (grad != nullptr)
        {
            for (int k = 0; k < 3; ++k)
            {
                (*grad)[6 + 3 * bone + k] += weight * sign_of(diff[k]);
            }
        }
    }
    return e;
}

double sit_term(BodyModel const& b,
                geom::ChairAsm const& chair,
                std::vector<Vec3> const& mesh,
                double tau,
                double weight,
                Adjoint* adj)
{
    double e = 0.0;
    double const inv_n = 1.0 / double(b.sit_vertices.size());
    for (int idx : b.sit_vertices)
    {
        Vec3 g;
        double const d = geom::sdf_chair_grad(mesh[idx], chair, adj ? &g : nullptr);
        if (d > tau)
        {
            e += (d - tau) * inv_n;
            if (adj != nullptr)
            {
                add_vertex_adjoint(b, idx, weight * inv_n * g, adj);
            }
        }
    }
    return e;
}

double sym_term(Pose const& pose, double weight, VecX* grad)
{
    auto mirror = [](Vec3 const& r) { return Vec3{r.x(), -r.y(), -r.z()}; };
    double e = 0.0;
    for (auto const& [l, r] : body::Skeleton::twin_joints())
    {
        Vec3 const diff = pose.bone_rot[l - 1] - mirror(pose.bone_rot[r - 1]);
        e += diff.cwiseAbs().sum();
        if (grad != nullptr)
        {
            for (int k = 0; k < 3; ++k)
            {
                double const s = sign_of(diff[k]);
                (*grad)[6 + 3 * (l - 1) + k] += weight * s;
                (*grad)[6 + 3 * (r - 1) + k] += weight * (k == 0 ? -s : s);
            }
        }
    }
    for (int c : body::Skeleton::center_joints())
    {
        Vec3 const& r = pose.bone_rot[c - 1];
        e += std::abs(r.y()) + std::abs(r.z());
        if (grad != nullptr)
        {
            (*grad)[6 + 3 * (c - 1) + 1] += weight * sign_of(r.y());
            (*grad)[6 + 3 * (c - 1) + 2] += weight * sign_of(r.z());
        }
    }
    e += std::abs(pose.r_glob.y()) + std::abs(pose.r_glob.z());
    e += std::abs(pose.t_glob.x());
    if (grad != nullptr)
    {
        (*grad)[4] += weight * sign_of(pose.r_glob.y());
        (*grad)[5] += weight * sign_of(pose.r_glob.z());
        (*grad)[0] += weight * sign_of(pose.t_glob.x());
    }
    return e;
}

}  // namespace

EnergyWeights EnergyWeights::preset(std::string const& name)
{
    SITFIT_REQUIRE(name == "paper-shapeassembly",
                   "unknown weight preset: " + name);
    return {};
}

EnergyWeights EnergyWeights::from_json(std::string const& text)
{
    nlohmann::json const doc = nlohmann::json::parse(text);
    SITFIT_REQUIRE(doc.is_object(), "weight config must be a JSON object");
    EnergyWeights w =
        preset(doc.value("preset", std::string("paper-shapeassembly")));
    for (auto const& [key, value] : doc.items())
    {
        if (key == "preset")
        {
            continue;
        }
        double* field = nullptr;
        if (key == "alpha_grav")
        {
            field = &w.grav;
        }
        else if (key == "alpha_pen")
        {
            field = &w.pen;
        }
        else if (key == "alpha_self")
        {
            field = &w.self;
        }
        else if (key == "alpha_feas")
        {
            field = &w.feas;
        }
        else if (key == "alpha_spine")
        {
            field = &w.spine;
        }
        else if (key == "alpha_zgrav")
        {
            field = &w.zgrav;
        }
        else if (key == "alpha_sit")
        {
            field = &w.sit;
        }
        else if (key == "alpha_sym")
        {
            field = &w.sym;
        }
        else if (key == "tau")
        {
            field = &w.tau;
        }
        else if (key == "gravity")
        {
            field = &w.gravity;
        }
        SITFIT_REQUIRE(field != nullptr, "unknown weight config key: " + key);
        *field = value.get<double>();
        SITFIT_REQUIRE(*field >= 0.0, "weight config values must be non-negative");
    }
    SITFIT_REQUIRE(w.tau > 0.0, "contact threshold must be positive");
    return w;
}

std::string EnergyWeights::to_json() const
{
    nlohmann::json doc;
    doc["alpha_grav"] = grav;
    doc["alpha_pen"] = pen;
    doc["alpha_self"] = self;
    doc["alpha_feas"] = feas;
    doc["alpha_spine"] = spine;
    doc["alpha_zgrav"] = zgrav;
    doc["alpha_sit"] = sit;
    doc["alpha_sym"] = sym;
    doc["tau"] = tau;
    doc["gravity"] = gravity;
    return doc.dump(2) + "\n";
}

double grav_energy(BodyModel const& b,
                   Pose const& pose,
                   Vec3 const& axis,
                   double floor,
                   double gravity)
{
    PoseFrames const frames = forward_kinematics(b, pose);
    return grav_term(b, frames, axis, floor, gravity, 0.0, nullptr);
}

double penetration_energy(BodyModel const& b,
                          geom::ChairAsm const& chair,
                          Pose const& pose)
{
    return pen_term(b, chair, skin_mesh(b, pose), 0.0, nullptr);
}

double self_penetration_energy(BodyModel const& b, Pose const& pose)
{
    return self_term(b, forward_kinematics(b, pose), 0.0, nullptr);
}

double feasibility_energy(BodyModel const& b, Pose const& pose)
{
    return feas_term(b, pose, 0.0, nullptr);
}

double spine_energy(Pose const& pose, Pose const& initial_pose)
{
    return spine_term(pose, initial_pose, 0.0, nullptr);
}

double sit_contact_energy(BodyModel const& b,
                          geom::ChairAsm const& chair,
                          Pose const& pose,
                          double tau)
{
    return sit_term(b, chair, skin_mesh(b, pose), tau, 0.0, nullptr);
}

double symmetry_energy(Pose const& pose)
{
    return sym_term(pose, 0.0, nullptr);
}

EnergyBreakdown total_energy(BodyModel const& b,
                             geom::ChairAsm const& chair,
                             Pose const& pose,
                             EnergyWeights const& w,
                             Pose const& initial_pose,
                             VecX* grad)
{
    PoseFrames const frames = forward_kinematics(b, pose);
    std::vector<Vec3> const mesh = skin_mesh(b, frames);

    Adjoint adjoint;
    Adjoint* adj = grad != nullptr ? &adjoint : nullptr;
    if (grad != nullptr)
    {
        grad->setZero(kPoseDof);
    }

    EnergyBreakdown out;
    out.e_grav = grav_term(
        b, frames, Vec3::UnitY(), chair.bbox.y_min, w.gravity, w.grav, adj);
    out.e_zgrav = grav_term(
        b, frames, Vec3::UnitZ(), chair.bbox.z_min, w.gravity, w.zgrav, adj);
    out.e_pen = pen_term(b, chair, mesh, w.pen, adj);
    out.e_self = self_term(b, frames, w.self, adj);
    out.e_feas = feas_term(b, pose, w.feas, grad);
    out.e_spine = spine_term(pose, initial_pose, w.spine, grad);
    out.e_sit = sit_term(b, chair, mesh, w.tau, w.sit, adj);
    out.e_sym = sym_term(pose, w.sym, grad);
    out.total = w.grav * out.e_grav + w.pen * out.e_pen + w.self * out.e_self
                + w.feas * out.e_feas + w.spine * out.e_spine
                + w.zgrav * out.e_zgrav + w.sit * out.e_sit + w.sym * out.e_sym;
    if (grad != nullptr)
    {
        backprop_frames(b, pose, frames, &adjoint, grad);
    }
    return out;
}

VecX total_energy_grad(BodyModel const& b,
                       geom::ChairAsm const& chair,
                       Pose const& pose,
                       EnergyWeights const& w,
                       Pose const& initial_pose)
{
    VecX grad;
    total_energy(b, chair, pose, w, initial_pose, &grad);
    return grad;
}

}  // namespace sitfit::energy
