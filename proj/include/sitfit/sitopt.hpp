//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file sitopt.hpp  Sitting-pose optimization: init, Adam descent, batching.
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sitfit/body.hpp"
#include "sitfit/energies.hpp"
#include "sitfit/geometry.hpp"

namespace sitfit::sitopt
{

//! Optimizer settings for one sitting-pose fit.
struct SitConfig
{
    energy::EnergyWeights weights{};
    double learning_rate{0.01};
    //! Terminal step size of the cosine decay from learning_rate. The L1
    //! terms make Adam ring at an amplitude proportional to the step, so a
    //! constant 0.01 leaves the symmetry/penetration terms oscillating well
    //! above their attainable minima; annealing to 1e-3 settles them without
    //! slowing the initial descent onto the chair.
    double lr_final{0.001};
    int iterations{400};
    double beta1{0.9};
    double beta2{0.999};
    double eps{1e-8};
    std::uint64_t seed{0};

    //! Parse {"weights": {...}, "learning_rate": ..., "iterations": ...,
    //! "beta1": ..., "beta2": ..., "eps": ..., "seed": ...}; every key
    //! optional, unknown keys error.
    static SitConfig from_json(std::string const& text);
    std::string to_json() const;
};

//! Outcome of one optimization. `trace` holds the energy breakdown of every
//! iterate including the initial and final points; `pose` is the best-total
//! iterate encountered (so its total never exceeds the initial total).
struct SitResult
{
    body::Pose pose;
    energy::EnergyBreakdown best{};
    int best_iteration{0};
    bool converged{false};
    double wall_seconds{0.0};  //!< never serialized into result payloads
    std::vector<energy::EnergyBreakdown> trace;
};

//! One batch entry: either a result or the error message of a failed task.
struct SitOutcome
{
    bool ok{false};
    std::string error;
    SitResult result;
};

//! Canonical seated start: hips and knees flexed 90 degrees, arms relaxed at
//! the sides, spine upright, pelvis suspended over the chair at
//! (0, y_max + 0.2, (z_min + z_max)/2) with identity global rotation.
body::Pose init_pose(geom::ChairAsm const& chair);

//! Adam descent of the total energy over all 69 pose parameters starting
//! from init_pose(chair). Deterministic for fixed config; throws
//! std::runtime_error naming the offending term if any energy turns
//! non-finite.
SitResult optimize_sit(body::BodyModel const& body,
                       geom::ChairAsm const& chair,
                       SitConfig const& config);

//! Independent per-pair optimizations (bodies.size() == chairs.size());
//! task i runs with seed derived from (config.seed, i). Results are
//! bit-identical for every jobs value; per-task failures are captured in the
//! outcome list instead of aborting the batch.
std::vector<SitOutcome> batch_optimize(std::vector<body::BodyModel> const& bodies,
                                       std::vector<geom::ChairAsm> const& chairs,
                                       SitConfig const& config,
                                       int jobs);

//! Result JSON: pose, convergence, best breakdown, and the trace. Wall time
//! is deliberately excluded so payloads are byte-stable across runs.
std::string sit_result_to_json(SitResult const& result);

}  // namespace sitfit::sitopt
