//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file proxy.hpp  Loss-proxy regressors: dataset generation through the
//! full optimize-and-measure pipeline, log + whitening target transforms,
//! L1 training, and pairwise ordering-accuracy evaluation.
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sitfit/chairgen.hpp"
#include "sitfit/nn.hpp"

namespace sitfit::proxy
{

//! Chair descriptors are the generator's: parameters + surface moments.
int constexpr kDescriptorDim = chairgen::kDescriptorDim;

enum class Kind
{
    kComfort,  //!< condition: 18-d shape vector; raw loss in kPa
    kPose,     //!< condition: packed 69-d target pose; raw loss in cm
};

//! One training example. `target` is the whitened transformed loss and is
//! only meaningful once a Whitening has been applied.
struct Sample
{
    int chair_id{0};
    std::uint64_t body_seed{0};  //!< seed that generated the paired body
    VecX desc;                   //!< kDescriptorDim chair descriptor
    VecX cond;                   //!< 18-d shape or 69-d packed pose
    double raw{0};               //!< untransformed loss
    double target{0};            //!< whitened transformed loss
};

//! Train/test split of one sample kind (deterministic 95/5 shuffle).
struct Dataset
{
    std::vector<Sample> train, test;
};

struct GenConfig
{
    int bodies_per_chair{8};  //!< k: shared body shapes scored on every chair
    int poses_per_chair{2};   //!< q: 1 self-pose + (q - 1) negatives per chair
    std::uint64_t seed{0};
    int jobs{1};
};

//! Both sample sets from one generation run, plus failure accounting over
//! the chair x body optimization tasks.
struct DatasetPair
{
    Dataset comfort, pose;
    int attempted{0};
    int failed{0};  //!< thrown, airborne, or non-positive comfort
};

//! Optimize every (chair, body) pair with the full pipeline and assemble
//! comfort samples (per pair) and pose samples (per chair: its first body's
//! optimized pose at loss zero, plus negatives drawn from other chairs'
//! optimized poses, scored against this chair's pose). Bodies are drawn once
//! (standard-normal coefficients, fair one-hot sex) and shared across all
//! chairs, so held-out samples share conditions for pairwise ordering.
//! Parallel across tasks, bit-identical for any jobs value. Errors when more
//! than 20% of the tasks fail.
DatasetPair gen_dataset(std::vector<chairgen::ChairParams> const& chairs, GenConfig const& config);

//! Pre-whitening transform: comfort -> log(raw) (raw must be positive),
//! pose -> log(1 + raw).
double transform_raw(Kind kind, double raw);

struct Whitening
{
    double mean{0};
    double std{1};  //!< always > 0; degenerate spreads clamp to 1
};

//! Fit whitening on the training samples' transformed raws and write every
//! sample's `target`; a spread below 1e-12 stores std = 1 (constant targets
//! whiten to zero rather than dividing by zero).
Whitening fit_whitening(Kind kind, std::vector<Sample>* train);

//! Apply an existing whitening (e.g. the training-set one to test samples).
void apply_whitening(Kind kind, Whitening const& w, std::vector<Sample>* samples);

//! A trained proxy: FiLM-conditioned MLP for comfort (descriptor trunk
//! 256-256-128 -> 1, modulated by the shape vector), plain MLP on the
//! concatenated (descriptor, pose) for pose, plus the training whitening.
struct ProxyModel
{
    Kind kind{Kind::kComfort};
    nn::FilmMlp film;  //!< comfort variant
    nn::Mlp mlp;       //!< pose variant
    Whitening whitening;

    //! Prediction in whitened units.
    double predict(VecX const& desc, VecX const& cond) const;
    //! De-whitened prediction on the raw loss scale (kPa or cm).
    double predict_raw(VecX const& desc, VecX const& cond) const;
};

struct TrainConfig
{
    int epochs{60};
    double lr{1e-3};
    int batch{32};
    std::uint64_t seed{0};
};

//! Mean L1 in whitened units, per epoch.
struct TrainLog
{
    std::vector<double> train_l1, test_l1;
};

//! Minimize mean |prediction - target| with Adam over shuffled mini-batches,
//! the step size decaying linearly to lr/10 across the epochs; deterministic
//! in the seed. Aborts on a non-finite loss, naming the epoch.
ProxyModel train_proxy(Dataset const& data,
                       Kind kind,
                       TrainConfig const& config,
                       TrainLog* log = nullptr);

//! Fraction (in percent) of held-out pairs sharing an identical condition
//! where the scorer orders the two samples like their raw losses. Ties with
//! |raw_a - raw_b| < 1e-9 are excluded; errors if no scorable pair exists.
double ordering_accuracy(std::function<double(Sample const&)> const& scorer,
                         std::vector<Sample> const& held_out);

//! Ordering accuracy of a trained proxy (scores with predict).
double ordering_accuracy(ProxyModel const& model, std::vector<Sample> const& held_out);

//! JSON-lines serialization: one sample per line, provenance included;
//! exact double round-trip.
void save_samples(std::string const& path, std::vector<Sample> const& samples);
std::vector<Sample> load_samples(std::string const& path);

}  // namespace sitfit::proxy
