//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file chairgen.hpp  Procedural chair generator over an 8-d latent, the
//! body-conditional latent mapper, fine-tuning against frozen proxies, and
//! generator evaluation (losses, drift, descriptor Frechet distance).
//---------------------------------------------------------------------------//
#pragma once

#include <array>
#include <functional>
#include <vector>

#include "sitfit/body.hpp"
#include "sitfit/geometry.hpp"
#include "sitfit/nn.hpp"
#include "sitfit/rng.hpp"

namespace sitfit::chairgen
{

int constexpr kLatentDim = 8;
int constexpr kSurfaceSamples = 2048;
//! Descriptor: the 8 decoded parameters, then per-axis mean/variance/min/max
//! of the surface-sample positions (12) and of the sample normals (12).
int constexpr kDescriptorDim = kLatentDim + 24;

using Vec8 = Eigen::Matrix<double, kLatentDim, 1>;

//! Decoded chair parameters; every value lies in its range, strictly in the
//! interior until the sigmoid saturates in double precision (|z| above ~36).
struct ChairParams
{
    double seat_width{0};      //!< [0.35, 0.70] m, x extent of the seat
    double seat_depth{0};      //!< [0.35, 0.60] m, z extent of the seat
    double seat_height{0};     //!< [0.30, 0.60] m, height of the seat top
    double seat_thickness{0};  //!< [0.18, 0.30] m, seat slab thickness
    double back_height{0};     //!< [0.30, 0.60] m, backrest length
    double recline{0};         //!< [0, 0.4363] rad, backrest lean
    double back_thickness{0};  //!< [0.12, 0.20] m, backrest slab thickness
    double leg_inset{0};       //!< [0.00, 0.08] m, legs in from the corners

    Vec8 to_vec() const;
};

struct ParamRange
{
    double lo{0}, hi{0};
};

//! The fixed decode ranges, in ChairParams field order.
std::array<ParamRange, kLatentDim> const& param_ranges();

//! Squash the latent into parameter ranges: p_i = lo_i + (hi_i - lo_i) *
//! sigmoid(z_i). Infinitely differentiable; z = 0 decodes the mid-range
//! chair, and |dp_i/dz_i| <= (hi_i - lo_i) / 4 everywhere.
ChairParams decode_params(Vec8 const& z);

//! Assemble the six cuboids: seat slab, backrest slab reclined about +x and
//! anchored flush on the seat's back edge, and four square legs running from
//! the floor (y = 0) to the seat underside.
geom::ChairAsm assemble(ChairParams const& p);

//! assemble(decode_params(z)).
geom::ChairAsm decode(Vec8 const& z);

//! 32-d chair descriptor of decoded parameters: the parameter vector plus
//! position and normal moments of 2048 deterministic surface samples (Halton
//! (u, v) over a fixed cuboid/face schedule, so the descriptor is a smooth
//! function of the parameters except for the min/max entries, which are
//! piecewise smooth).
VecX descriptor(ChairParams const& p);

//! Descriptor straight from the latent; when jac is non-null it receives the
//! 32 x 8 Jacobian d descriptor / d z, propagated with dual numbers through
//! the same kernel (values agree bitwise with descriptor(decode_params(z))).
VecX descriptor_with_jacobian(Vec8 const& z, MatX* jac = nullptr);

//! Body-conditional latent mapper: F(z) = z + net(z | c), a FiLM-conditioned
//! MLP 8 -> 64 -> 64 -> 8 whose condition branch projects c through one
//! 32-wide layer. The final layer starts at zero, so a fresh mapper is the
//! identity map exactly.
struct Mapper
{
    nn::FilmMlp net;
    int cond_dim{0};

    static Mapper init(int cond_dim, Rng& rng);
};

VecX map_latent(Mapper const& mapper, VecX const& z, VecX const& c);

//! Differentiable scalar loss over (descriptor, condition). Implementations
//! must write d loss / d descriptor into *d_desc when it is non-null.
using ProxyFn =
    std::function<double(VecX const& desc, VecX const& cond, VecX* d_desc)>;

//! Draws one condition vector (e.g. an 18-d shape or a packed 69-d pose).
using CondSampler = std::function<VecX(Rng&)>;

//! Standard-normal shape coefficients with a fair random one-hot sex pair.
CondSampler shape_sampler();

struct FinetuneConfig
{
    int epochs{20};
    int iters{200};
    int batch{16};
    double lr{1e-4};
    double lambda{1e-3};  //!< weight of the z-drift penalty |F(z) - z|^2
    std::uint64_t seed{0};
};

//! Per-epoch means: the proxy loss and the drift norm |F(z) - z|.
struct FinetuneLog
{
    std::vector<double> proxy_loss;
    std::vector<double> drift;
};

//! Minimize E[ proxy(descriptor(decode(F(z))), c) + lambda |F(z) - z|^2 ]
//! over the mapper parameters by Adam; z standard normal, c from `cond`.
//! Gradients flow through the descriptor Jacobian into the FiLM net. Aborts
//! on a non-finite loss, naming the epoch and iteration.
Mapper finetune(Mapper mapper,
                ProxyFn const& proxy,
                CondSampler const& cond,
                FinetuneConfig const& config,
                FinetuneLog* log = nullptr);

//! Closed-form Frechet distance |mu_a - mu_b|^2 + tr(Sa + Sb - 2(Sa Sb)^1/2)
//! between Gaussians fitted to the rows of a and b (unbiased covariance;
//! each needs at least 2 rows).
double frechet_distance(MatX const& a, MatX const& b);

enum class CondKind
{
    kShape,  //!< condition is an 18-d shape vector; comfort is the loss
    kPose,   //!< condition is a packed 69-d target pose; adds the pose loss
};

//! Predicts a raw loss (comfort kPa or pose cm) from (descriptor, condition)
//! without gradients — the fast stand-in for the true pipeline.
using PredictFn = std::function<double(VecX const& desc, VecX const& cond)>;

struct EvalConfig
{
    int n{50};
    bool true_losses{false};
    //! > 0: the sampling baseline — per slot, draw this many latents from
    //! the unwarped generator and keep the one with the best true loss (the
    //! mapper is ignored). Implies true losses.
    int oracle_k{0};
    std::uint64_t seed{0};
    int jobs{1};
};

struct GenReport
{
    double mean_comfort_kpa{0};
    double mean_pose_cm{0};  //!< NaN unless kind == kPose
    //! Descriptor-space Frechet distance of the produced chairs against the
    //! unwarped decode of the same latent batch (0 for the identity mapper).
    double frechet{0};
    double mean_drift{0};  //!< mean |F(z) - z|
    int failed{0};         //!< slots dropped (airborne / failed optimization)
};

//! Sample n (z, c), decode through the mapper (null = identity), and score.
//! With true_losses (or oracle_k), each slot runs the full optimize-and-
//! measure pipeline, parallelized across slots with bit-stable results for
//! any jobs value; otherwise `predict` supplies the losses.
GenReport evaluate_generator(Mapper const* mapper,
                             CondKind kind,
                             CondSampler const& cond,
                             EvalConfig const& config,
                             PredictFn const& predict = {});

}  // namespace sitfit::chairgen
