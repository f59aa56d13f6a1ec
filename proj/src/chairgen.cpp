//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file chairgen.cpp  Procedural chair decoder, latent mapper, fine-tuning,
//! and generator evaluation.
//---------------------------------------------------------------------------//
#include "sitfit/chairgen.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "sitfit/dual.hpp"
#include "sitfit/metrics.hpp"
#include "sitfit/parallel.hpp"
#include "sitfit/sitopt.hpp"
#include "sitfit/statics.hpp"

namespace sitfit::chairgen
{
namespace
{

double constexpr kLegHalf = 0.03;  //!< square leg half-width, not decoded

//! Radical-inverse (Halton) value of index i in the given base; index is
//! offset by one so the first sample is not the origin.
double halton(unsigned i, unsigned base)
{
    double f = 1.0;
    double r = 0.0;
    for (unsigned n = i + 1; n != 0; n /= base)
    {
        f /= base;
        r += f * double(n % base);
    }
    return r;
}

//! Fixed sample schedule: sample i lies on cuboid i % 6, face (i / 6) % 6,
//! at Halton (u, v) in that face's unit square.
struct SampleSchedule
{
    std::array<double, kSurfaceSamples> u{}, v{};  //!< already mapped to [-1, 1]
    std::array<std::array<int, 6>, 6> face_count{};

    SampleSchedule()
    {
        for (int i = 0; i < kSurfaceSamples; ++i)
        {
            u[i] = 2.0 * halton(unsigned(i), 2) - 1.0;
            v[i] = 2.0 * halton(unsigned(i), 3) - 1.0;
            ++face_count[i % 6][(i / 6) % 6];
        }
    }
};

SampleSchedule const& schedule()
{
    static SampleSchedule const s;
    return s;
}

template <typename T>
T sigmoid_t(T const& x)
{
    return T(1.0) / (T(1.0) + exp(-x));
}

template <typename T>
std::array<T, kLatentDim> decode_t(std::array<T, kLatentDim> const& z)
{
    auto const& ranges = param_ranges();
    std::array<T, kLatentDim> p;
    for (int i = 0; i < kLatentDim; ++i)
    {
        p[i] = T(ranges[i].lo) + T(ranges[i].hi - ranges[i].lo) * sigmoid_t(z[i]);
    }
    return p;
}

//! One cuboid with a rotation about +x: local (x, y, z) maps to
//! (x, c*y + s*z, -s*y + c*z), which is the matrix of angle -recline.
template <typename T>
struct CuboidT
{
    std::array<T, 3> center{T(0), T(0), T(0)};
    std::array<T, 3> half{T(0), T(0), T(0)};
    T c{1.0}, s{0.0};
};

//! Parameter order: width, depth, height, seat thickness, back height,
//! recline, back thickness, leg inset (ChairParams field order).
template <typename T>
std::array<CuboidT<T>, 6> assemble_t(std::array<T, kLatentDim> const& p)
{
    T const w2 = p[0] / T(2.0);
    T const d2 = p[1] / T(2.0);
    T const& h = p[2];
    T const& ts = p[3];
    T const hb2 = p[4] / T(2.0);
    T const& theta = p[5];
    T const tb2 = p[6] / T(2.0);
    T const& inset = p[7];

    std::array<CuboidT<T>, 6> cubs;
    // Seat slab, top face at y = h.
    cubs[0].center = {T(0.0), h - ts / T(2.0), T(0.0)};
    cubs[0].half = {w2, ts / T(2.0), d2};
    // Backrest slab anchored on the seat-top back edge (0, h, -d/2) and
    // leaned back by theta; its inner face stays flush with that edge.
    T const c = cos(theta);
    T const s = sin(theta);
    cubs[1].center = {T(0.0), h + c * hb2 + s * tb2, -d2 - s * hb2 + c * tb2};
    cubs[1].half = {w2, hb2, tb2};
    cubs[1].c = c;
    cubs[1].s = s;
    // Four square legs, floor to seat underside, inset from the corners.
    T const lx = w2 - inset - T(kLegHalf);
    T const lz = d2 - inset - T(kLegHalf);
    T const hy = (h - ts) / T(2.0);
    for (int leg = 0; leg < 4; ++leg)
    {
        double const sx = leg % 2 ? -1.0 : 1.0;
        double const sz = leg / 2 ? -1.0 : 1.0;
        cubs[2 + leg].center = {T(sx) * lx, hy, T(sz) * lz};
        cubs[2 + leg].half = {T(kLegHalf), hy, T(kLegHalf)};
    }
    return cubs;
}

//! Descriptor layout: [0,8) parameters; [8,11) position mean; [11,14)
//! position variance (population); [14,17) position min; [17,20) position
//! max; [20,32) the same four moments of the sample normals.
template <typename T>
std::array<T, kDescriptorDim> descriptor_from_params_t(std::array<T, kLatentDim> const& p)
{
    auto const cubs = assemble_t(p);
    auto const& sched = schedule();

    std::array<T, 3> sum{T(0), T(0), T(0)};
    std::array<T, 3> sq{T(0), T(0), T(0)};
    std::array<T, 3> lo{T(1e300), T(1e300), T(1e300)};
    std::array<T, 3> hi{T(-1e300), T(-1e300), T(-1e300)};
    auto accumulate = [](std::array<T, 3>* s,
                         std::array<T, 3>* q,
                         std::array<T, 3>* mn,
                         std::array<T, 3>* mx,
                         std::array<T, 3> const& pt,
                         double weight) {
        for (int a = 0; a < 3; ++a)
        {
            (*s)[a] += T(weight) * pt[a];
            (*q)[a] += T(weight) * pt[a] * pt[a];
            (*mn)[a] = min((*mn)[a], pt[a]);
            (*mx)[a] = max((*mx)[a], pt[a]);
        }
    };

    for (int i = 0; i < kSurfaceSamples; ++i)
    {
        CuboidT<T> const& cu = cubs[i % 6];
        int const face = (i / 6) % 6;
        int const axis = face / 2;
        double const sgn = face % 2 ? -1.0 : 1.0;
        std::array<T, 3> local;
        local[axis] = T(sgn) * cu.half[axis];
        local[(axis + 1) % 3] = T(sched.u[i]) * cu.half[(axis + 1) % 3];
        local[(axis + 2) % 3] = T(sched.v[i]) * cu.half[(axis + 2) % 3];
        std::array<T, 3> const pt{cu.center[0] + local[0],
                                  cu.center[1] + cu.c * local[1] + cu.s * local[2],
                                  cu.center[2] - cu.s * local[1] + cu.c * local[2]};
        accumulate(&sum, &sq, &lo, &hi, pt, 1.0);
    }

    // Normals are constant per (cuboid, face): walk the 36 faces weighted by
    // their sample counts.
    std::array<T, 3> nsum{T(0), T(0), T(0)};
    std::array<T, 3> nsq{T(0), T(0), T(0)};
    std::array<T, 3> nlo{T(1e300), T(1e300), T(1e300)};
    std::array<T, 3> nhi{T(-1e300), T(-1e300), T(-1e300)};
    for (int cub = 0; cub < 6; ++cub)
    {
        for (int face = 0; face < 6; ++face)
        {
            int const count = sched.face_count[cub][face];
            if (count == 0)
            {
                continue;
            }
            CuboidT<T> const& cu = cubs[cub];
            int const axis = face / 2;
            T const sgn(face % 2 ? -1.0 : 1.0);
            std::array<T, 3> n{T(0), T(0), T(0)};
            if (axis == 0)
            {
                n = {sgn, T(0), T(0)};
            }
            else if (axis == 1)
            {
                n = {T(0), sgn * cu.c, -(sgn * cu.s)};
            }
            else
            {
                n = {T(0), sgn * cu.s, sgn * cu.c};
            }
            accumulate(&nsum, &nsq, &nlo, &nhi, n, double(count));
        }
    }

    double const inv_n = 1.0 / double(kSurfaceSamples);
    std::array<T, kDescriptorDim> out;
    for (int i = 0; i < kLatentDim; ++i)
    {
        out[i] = p[i];
    }
    for (int a = 0; a < 3; ++a)
    {
        T const mean = sum[a] * T(inv_n);
        out[8 + a] = mean;
        out[11 + a] = sq[a] * T(inv_n) - mean * mean;
        out[14 + a] = lo[a];
        out[17 + a] = hi[a];
        T const nmean = nsum[a] * T(inv_n);
        out[20 + a] = nmean;
        out[23 + a] = nsq[a] * T(inv_n) - nmean * nmean;
        out[26 + a] = nlo[a];
        out[29 + a] = nhi[a];
    }
    return out;
}

std::array<double, kLatentDim> params_array(ChairParams const& p)
{
    return {p.seat_width,
            p.seat_depth,
            p.seat_height,
            p.seat_thickness,
            p.back_height,
            p.recline,
            p.back_thickness,
            p.leg_inset};
}

VecX draw_latent(Rng& rng)
{
    VecX z(kLatentDim);
    for (int i = 0; i < kLatentDim; ++i)
    {
        z[i] = rng.normal();
    }
    return z;
}

body::ShapeVec shape_from_vec(VecX const& c)
{
    SITFIT_REQUIRE(c.size() == 18, "shape condition must have 18 entries, got " << c.size());
    body::ShapeVec s;
    for (int i = 0; i < 18; ++i)
    {
        s.v[std::size_t(i)] = c[i];
    }
    return s;
}

}  // namespace

Vec8 ChairParams::to_vec() const
{
    auto const a = params_array(*this);
    Vec8 v;
    for (int i = 0; i < kLatentDim; ++i)
    {
        v[i] = a[std::size_t(i)];
    }
    return v;
}

std::array<ParamRange, kLatentDim> const& param_ranges()
{
    static std::array<ParamRange, kLatentDim> const ranges{{
        {0.35, 0.70},   // seat width
        {0.35, 0.60},   // seat depth
        {0.30, 0.60},   // seat height
        {0.18, 0.30},   // seat thickness
        {0.30, 0.60},   // back height
        {0.0, 0.4363},  // recline (0 to 25 degrees)
        {0.12, 0.20},   // back thickness
        {0.00, 0.08},   // leg inset
    }};
    return ranges;
}

ChairParams decode_params(Vec8 const& z)
{
    SITFIT_REQUIRE(z.allFinite(), "latent code must be finite");
    std::array<double, kLatentDim> za;
    for (int i = 0; i < kLatentDim; ++i)
    {
        za[std::size_t(i)] = z[i];
    }
    auto const p = decode_t(za);
    ChairParams out;
    out.seat_width = p[0];
    out.seat_depth = p[1];
    out.seat_height = p[2];
    out.seat_thickness = p[3];
    out.back_height = p[4];
    out.recline = p[5];
    out.back_thickness = p[6];
    out.leg_inset = p[7];
    return out;
}

geom::ChairAsm assemble(ChairParams const& p)
{
    auto const cubs = assemble_t(params_array(p));
    std::vector<geom::Cuboid> out(6);
    for (int i = 0; i < 6; ++i)
    {
        out[std::size_t(i)].center =
            Vec3(cubs[i].center[0], cubs[i].center[1], cubs[i].center[2]);
        out[std::size_t(i)].half_extents = Vec3(cubs[i].half[0], cubs[i].half[1], cubs[i].half[2]);
        out[std::size_t(i)].rotation = Quat::Identity();
    }
    out[1].rotation = Quat(Eigen::AngleAxisd(-p.recline, Vec3::UnitX()));
    return geom::make_chair(std::move(out));
}

geom::ChairAsm decode(Vec8 const& z)
{
    return assemble(decode_params(z));
}

VecX descriptor(ChairParams const& p)
{
    auto const d = descriptor_from_params_t(params_array(p));
    VecX out(kDescriptorDim);
    for (int i = 0; i < kDescriptorDim; ++i)
    {
        out[i] = d[std::size_t(i)];
    }
    return out;
}

VecX descriptor_with_jacobian(Vec8 const& z, MatX* jac)
{
    SITFIT_REQUIRE(z.allFinite(), "latent code must be finite");
    using D = Dual<kLatentDim>;
    std::array<D, kLatentDim> zd;
    for (int i = 0; i < kLatentDim; ++i)
    {
        zd[std::size_t(i)] = D::var(z[i], i);
    }
    auto const d = descriptor_from_params_t(decode_t(zd));
    VecX out(kDescriptorDim);
    if (jac)
    {
        jac->resize(kDescriptorDim, kLatentDim);
    }
    for (int i = 0; i < kDescriptorDim; ++i)
    {
        out[i] = d[std::size_t(i)].v;
        if (jac)
        {
            jac->row(i) = d[std::size_t(i)].d.transpose();
        }
    }
    return out;
}

Mapper Mapper::init(int cond_dim, Rng& rng)
{
    SITFIT_REQUIRE(cond_dim >= 1, "mapper condition dimension must be positive");
    Mapper m;
    m.cond_dim = cond_dim;
    int const film_out = 2 * (64 + 64);
    m.net = nn::FilmMlp::init({kLatentDim, 64, 64, kLatentDim}, {cond_dim, 32, film_out}, rng);
    // Zero final layer + the skip connection in map_latent make the fresh
    // mapper the exact identity.
    m.net.target.w.back().setZero();
    m.net.target.b.back().setZero();
    return m;
}

VecX map_latent(Mapper const& mapper, VecX const& z, VecX const& c)
{
    SITFIT_REQUIRE(z.size() == kLatentDim,
                   "latent must have " << kLatentDim << " entries, got " << z.size());
    SITFIT_REQUIRE(c.size() == mapper.cond_dim,
                   "condition must have " << mapper.cond_dim << " entries, got " << c.size());
    return z + nn::film_forward(mapper.net, z, c);
}

CondSampler shape_sampler()
{
    return [](Rng& rng) {
        VecX c(18);
        for (int i = 0; i < 16; ++i)
        {
            c[i] = rng.normal();
        }
        bool const male = rng.uniform() < 0.5;
        c[16] = male ? 0.0 : 1.0;
        c[17] = male ? 1.0 : 0.0;
        return c;
    };
}

Mapper finetune(Mapper mapper,
                ProxyFn const& proxy,
                CondSampler const& cond,
                FinetuneConfig const& config,
                FinetuneLog* log)
{
    SITFIT_REQUIRE(config.epochs >= 1 && config.iters >= 1 && config.batch >= 1,
                   "fine-tune config must have positive epochs/iters/batch");
    SITFIT_REQUIRE(proxy && cond, "fine-tune needs a proxy and a condition sampler");

    Rng rng(config.seed);
    VecX params = mapper.net.params();
    nn::AdamState adam(params.size());

    for (int epoch = 0; epoch < config.epochs; ++epoch)
    {
        double ep_loss = 0;
        double ep_drift = 0;
        for (int iter = 0; iter < config.iters; ++iter)
        {
            nn::FilmMlp grad{nn::Mlp::zeros(mapper.net.target.sizes),
                             nn::Mlp::zeros(mapper.net.cond.sizes)};
            double sum_loss = 0;
            for (int k = 0; k < config.batch; ++k)
            {
                VecX const z = draw_latent(rng);
                VecX const c = cond(rng);
                nn::FilmCache cache;
                VecX const out = nn::film_forward(mapper.net, z, c, &cache);
                Vec8 const zp = z + out;
                MatX jac;
                VecX const desc = descriptor_with_jacobian(zp, &jac);
                VecX d_desc = VecX::Zero(kDescriptorDim);
                double const ploss = proxy(desc, c, &d_desc);
                sum_loss += ploss + config.lambda * out.squaredNorm();
                ep_loss += ploss;
                ep_drift += out.norm();
                VecX const dout = jac.transpose() * d_desc + 2.0 * config.lambda * out;
                nn::film_backward(mapper.net, cache, dout, &grad);
            }
            SITFIT_REQUIRE(std::isfinite(sum_loss),
                           "non-finite fine-tune loss at epoch " << epoch << " iteration "
                                                                 << iter);
            VecX const g = grad.params() / double(config.batch);
            nn::adam_step(&params, g, &adam, config.lr);
            mapper.net.set_params(params);
        }
        if (log)
        {
            double const denom = double(config.iters) * double(config.batch);
            log->proxy_loss.push_back(ep_loss / denom);
            log->drift.push_back(ep_drift / denom);
        }
    }
    return mapper;
}

double frechet_distance(MatX const& a, MatX const& b)
{
    SITFIT_REQUIRE(a.rows() >= 2 && b.rows() >= 2,
                   "Frechet distance needs at least 2 samples per set (covariance undefined)");
    SITFIT_REQUIRE(a.cols() == b.cols(),
                   "descriptor dimensions differ: " << a.cols() << " vs " << b.cols());

    auto fit = [](MatX const& x, VecX* mu, MatX* sigma) {
        *mu = x.colwise().mean().transpose();
        MatX const centered = x.rowwise() - mu->transpose();
        *sigma = centered.transpose() * centered / double(x.rows() - 1);
    };
    VecX mu1, mu2;
    MatX s1, s2;
    fit(a, &mu1, &s1);
    fit(b, &mu2, &s2);

    // tr((S1 S2)^1/2) = tr((S2^1/2 S1 S2^1/2)^1/2), the latter symmetric
    // PSD; eigenvalues clamped at zero against roundoff.
    Eigen::SelfAdjointEigenSolver<MatX> es2(s2);
    VecX const ev2 = es2.eigenvalues().cwiseMax(0.0);
    MatX const s2half =
        es2.eigenvectors() * ev2.cwiseSqrt().asDiagonal() * es2.eigenvectors().transpose();
    Eigen::SelfAdjointEigenSolver<MatX> esm(s2half * s1 * s2half);
    double const tr_sqrt = esm.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    double const fd = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
    return std::max(0.0, fd);  // clamp the roundoff of an exact zero
}

GenReport evaluate_generator(Mapper const* mapper,
                             CondKind kind,
                             CondSampler const& cond,
                             EvalConfig const& config,
                             PredictFn const& predict)
{
    SITFIT_REQUIRE(config.n >= 2,
                   "generator evaluation needs n >= 2 (descriptor covariance undefined)");
    bool const true_losses = config.true_losses || config.oracle_k > 0;
    SITFIT_REQUIRE(true_losses || predict,
                   "no loss source: pass a predictor or request true losses");
    SITFIT_REQUIRE(cond, "generator evaluation needs a condition sampler");

    struct Slot
    {
        VecX desc_gen, desc_ref;
        double comfort{0}, pose{0}, drift{0};
        bool ok{true};
    };
    std::vector<Slot> slots(std::size_t(config.n));

    // True pipeline for one chair: optimize the body in, then measure.
    auto run_true = [&](Vec8 const& zlat, VecX const& c, std::uint64_t seed, Slot* slot) {
        geom::ChairAsm const chair = decode(zlat);
        body::BodyModel const body = body::build_body(
            kind == CondKind::kShape ? shape_from_vec(c) : body::ShapeVec::female());
        sitopt::SitConfig sit;
        sit.seed = seed;
        try
        {
            sitopt::SitResult const res = sitopt::optimize_sit(body, chair, sit);
            statics::ComfortReport const rep = statics::comfort_report(body, res.pose, chair);
            if (rep.airborne)
            {
                return false;
            }
            slot->comfort = rep.loss_kpa;
            if (kind == CondKind::kPose)
            {
                slot->pose = metrics::pose_loss(body, res.pose, body::Pose(c));
            }
            return true;
        }
        catch (std::exception const&)
        {
            return false;
        }
    };

    parallel_for(
        std::size_t(config.n),
        [&](std::size_t i) {
            Slot& slot = slots[i];
            Rng rng(derive_seed(config.seed, i));
            if (config.oracle_k > 0)
            {
                // Sampling baseline: best of k unwarped draws by true loss.
                std::vector<VecX> zs(std::size_t(config.oracle_k));
                for (auto& z : zs)
                {
                    z = draw_latent(rng);
                }
                VecX const c = cond(rng);
                bool any = false;
                Slot best;
                Vec8 best_z;
                for (int k = 0; k < config.oracle_k; ++k)
                {
                    Slot trial;
                    Vec8 const zk = zs[std::size_t(k)];
                    if (!run_true(zk, c, derive_seed(config.seed, (i << 8) + std::size_t(k) + 1),
                                  &trial))
                    {
                        continue;
                    }
                    double const score = kind == CondKind::kPose ? trial.pose : trial.comfort;
                    double const best_score = kind == CondKind::kPose ? best.pose : best.comfort;
                    if (!any || score < best_score)
                    {
                        best = trial;
                        best_z = zk;
                        any = true;
                    }
                }
                if (!any)
                {
                    slot.ok = false;
                    return;
                }
                slot = best;
                slot.drift = 0;
                slot.desc_gen = descriptor(decode_params(best_z));
                slot.desc_ref = descriptor(decode_params(Vec8(zs[0])));
                return;
            }

            VecX const z = draw_latent(rng);
            VecX const c = cond(rng);
            VecX const zp = mapper ? map_latent(*mapper, z, c) : z;
            slot.drift = (zp - z).norm();
            slot.desc_gen = descriptor(decode_params(Vec8(zp)));
            slot.desc_ref = descriptor(decode_params(Vec8(z)));
            if (true_losses)
            {
                slot.ok = run_true(Vec8(zp), c, derive_seed(config.seed, (i << 8) + 1), &slot);
            }
            else
            {
                double const value = predict(slot.desc_gen, c);
                if (kind == CondKind::kPose)
                {
                    slot.pose = value;
                }
                else
                {
                    slot.comfort = value;
                }
                slot.ok = std::isfinite(value);
            }
        },
        config.jobs);

    GenReport report;
    report.mean_pose_cm = std::numeric_limits<double>::quiet_NaN();
    int ok = 0;
    double comfort = 0, pose = 0, drift = 0;
    std::vector<VecX> gen, ref;
    for (Slot const& slot : slots)
    {
        if (!slot.ok)
        {
            ++report.failed;
            continue;
        }
        ++ok;
        comfort += slot.comfort;
        pose += slot.pose;
        drift += slot.drift;
        gen.push_back(slot.desc_gen);
        ref.push_back(slot.desc_ref);
    }
    SITFIT_REQUIRE(ok >= 2, "fewer than 2 evaluation slots succeeded (" << ok << " of "
                                                                        << config.n << ")");
    report.mean_comfort_kpa = comfort / ok;
    if (kind == CondKind::kPose)
    {
        report.mean_pose_cm = pose / ok;
    }
    report.mean_drift = drift / ok;
    MatX gen_m(ok, kDescriptorDim), ref_m(ok, kDescriptorDim);
    for (int i = 0; i < ok; ++i)
    {
        gen_m.row(i) = gen[std::size_t(i)].transpose();
        ref_m.row(i) = ref[std::size_t(i)].transpose();
    }
    report.frechet = frechet_distance(gen_m, ref_m);
    return report;
}

}  // namespace sitfit::chairgen
