//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file sitopt.cpp  Sitting-pose optimization.
//---------------------------------------------------------------------------//
#include "sitfit/sitopt.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sitfit/nn.hpp"
#include "sitfit/parallel.hpp"
#include "sitfit/rng.hpp"

namespace sitfit::sitopt
{

namespace
{

using body::Pose;
using energy::EnergyBreakdown;

//! Throw if any term of the breakdown (or its weighted total) is non-finite,
//! naming the first offender for the diagnostic.
void require_finite(EnergyBreakdown const& e, int iteration)
{
    struct Named
    {
        char const* name;
        double value;
    };
    Named const terms[] = {{"gravity", e.e_grav},
                           {"penetration", e.e_pen},
                           {"self-penetration", e.e_self},
                           {"feasibility", e.e_feas},
                           {"spine", e.e_spine},
                           {"z-gravity", e.e_zgrav},
                           {"sit-contact", e.e_sit},
                           {"symmetry", e.e_sym},
                           {"total", e.total}};
    for (auto const& [name, value] : terms)
    {
        if (!std::isfinite(value))
        {
            throw std::runtime_error("non-finite energy term '"
                                     + std::string(name) + "' at iteration "
                                     + std::to_string(iteration));
        }
    }
}

}  // namespace

SitConfig SitConfig::from_json(std::string const& text)
{
    nlohmann::json const doc = nlohmann::json::parse(text);
    SITFIT_REQUIRE(doc.is_object(), "sit config must be a JSON object");
    SitConfig cfg;
    for (auto const& [key, value] : doc.items())
    {
        if (key == "weights")
        {
            cfg.weights = energy::EnergyWeights::from_json(value.dump());
        }
        else if (key == "learning_rate")
        {
            cfg.learning_rate = value.get<double>();
        }
        else if (key == "lr_final")
        {
            cfg.lr_final = value.get<double>();
        }
        else if (key == "iterations")
        {
            cfg.iterations = value.get<int>();
        }
        else if (key == "beta1")
        {
            cfg.beta1 = value.get<double>();
        }
        else if (key == "beta2")
        {
            cfg.beta2 = value.get<double>();
        }
        else if (key == "eps")
        {
            cfg.eps = value.get<double>();
        }
        else if (key == "seed")
        {
            cfg.seed = value.get<std::uint64_t>();
        }
        else
        {
            throw std::runtime_error("unknown sit config key: " + key);
        }
    }
    SITFIT_REQUIRE(cfg.iterations > 0, "iterations must be positive");
    SITFIT_REQUIRE(cfg.learning_rate > 0.0, "learning_rate must be positive");
    SITFIT_REQUIRE(cfg.lr_final > 0.0 && cfg.lr_final <= cfg.learning_rate,
                   "lr_final must lie in (0, learning_rate]");
    return cfg;
}

std::string SitConfig::to_json() const
{
    nlohmann::json doc;
    doc["weights"] = nlohmann::json::parse(weights.to_json());
    doc["learning_rate"] = learning_rate;
    doc["lr_final"] = lr_final;
    doc["iterations"] = iterations;
    doc["beta1"] = beta1;
    doc["beta2"] = beta2;
    doc["eps"] = eps;
    doc["seed"] = seed;
    return doc.dump(2) + "\n";
}

Pose init_pose(geom::ChairAsm const& chair)
{
    Pose pose;
    // Hips flexed forward 90 degrees, knees bent back 90 degrees: thighs
    // horizontal, shins vertical.
    pose.bone_rot[body::kLHip - 1] = Vec3{-M_PI / 2.0, 0.0, 0.0};
    pose.bone_rot[body::kRHip - 1] = Vec3{-M_PI / 2.0, 0.0, 0.0};
    pose.bone_rot[body::kLKnee - 1] = Vec3{M_PI / 2.0, 0.0, 0.0};
    pose.bone_rot[body::kRKnee - 1] = Vec3{M_PI / 2.0, 0.0, 0.0};
    // Arms dropped from the T-pose to hang at the sides (mirror pair about z).
    pose.bone_rot[body::kLShoulder - 1] = Vec3{0.0, 0.0, -1.22};
    pose.bone_rot[body::kRShoulder - 1] = Vec3{0.0, 0.0, 1.22};
    pose.t_glob = Vec3{0.0,
                       chair.bbox.y_max + 0.2,
                       0.5 * (chair.bbox.z_min + chair.bbox.z_max)};
    return pose;
}

SitResult optimize_sit(body::BodyModel const& body,
                       geom::ChairAsm const& chair,
                       SitConfig const& config)
{
    SITFIT_REQUIRE(config.iterations > 0, "iterations must be positive");
    SITFIT_REQUIRE(config.learning_rate > 0.0, "learning_rate must be positive");
    auto const start = std::chrono::steady_clock::now();

    Pose const init = init_pose(chair);
    VecX params = init.to_vector();
    VecX best_params = params;

    nn::AdamState adam(params.size());
    adam.beta1 = config.beta1;
    adam.beta2 = config.beta2;
    adam.eps = config.eps;

    SitResult out;
    out.trace.reserve(std::size_t(config.iterations) + 1);
    VecX grad(params.size());
    for (int iter = 0; iter <= config.iterations; ++iter)
    {
        Pose const pose{params};
        bool const last = iter == config.iterations;
        EnergyBreakdown const e = energy::total_energy(
            body, chair, pose, config.weights, init, last ? nullptr : &grad);
        require_finite(e, iter);
        out.trace.push_back(e);
        if (iter == 0 || e.total < out.best.total)
        {
            out.best = e;
            out.best_iteration = iter;
            best_params = params;
        }
        if (!last)
        {
            // Cosine anneal from learning_rate to lr_final across the run.
            double const frac = double(iter) / double(config.iterations);
            double const lr =
                config.lr_final
                + (config.learning_rate - config.lr_final)
                      * 0.5 * (1.0 + std::cos(M_PI * frac));
            nn::adam_step(&params, grad, &adam, lr);
        }
    }

    // Convergence: the best total moved less than 1e-5 over the final 20
    // iterations.
    int const window = 20;
    if (int(out.trace.size()) > window)
    {
        double best_before = out.trace[0].total;
        for (std::size_t i = 0; i + window < out.trace.size(); ++i)
        {
            best_before = std::min(best_before, out.trace[i].total);
        }
        out.converged = best_before - out.best.total < 1e-5;
    }

    out.pose = Pose{best_params};
    out.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return out;
}

std::vector<SitOutcome> batch_optimize(std::vector<body::BodyModel> const& bodies,
                                       std::vector<geom::ChairAsm> const& chairs,
                                       SitConfig const& config,
                                       int jobs)
{
    SITFIT_REQUIRE(bodies.size() == chairs.size(),
                   "batch_optimize needs one body per chair");
    std::vector<SitOutcome> outcomes(bodies.size());
    parallel_for(
        bodies.size(),
        [&](std::size_t i)
        {
            SitConfig task = config;
            task.seed = derive_seed(config.seed, i);
            try
            {
                outcomes[i].result = optimize_sit(bodies[i], chairs[i], task);
                outcomes[i].ok = true;
            }
            catch (std::exception const& ex)
            {
                outcomes[i].ok = false;
                outcomes[i].error = ex.what();
            }
        },
        jobs);
    return outcomes;
}

std::string sit_result_to_json(SitResult const& result)
{
    nlohmann::json doc;
    doc["pose"] = nlohmann::json::parse(body::pose_to_json(result.pose));
    doc["converged"] = result.converged;
    doc["best_iteration"] = result.best_iteration;
    auto breakdown = [](EnergyBreakdown const& e)
    {
        nlohmann::json j;
        j["e_grav"] = e.e_grav;
        j["e_pen"] = e.e_pen;
        j["e_self"] = e.e_self;
        j["e_feas"] = e.e_feas;
        j["e_spine"] = e.e_spine;
        j["e_zgrav"] = e.e_zgrav;
        j["e_sit"] = e.e_sit;
        j["e_sym"] = e.e_sym;
        j["total"] = e.total;
        return j;
    };
    doc["best"] = breakdown(result.best);
    nlohmann::json trace = nlohmann::json::array();
    for (EnergyBreakdown const& e : result.trace)
    {
        trace.push_back(breakdown(e));
    }
    doc["trace"] = std::move(trace);
    return doc.dump(2) + "\n";
}

}  // namespace sitfit::sitopt
