//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file proxy.cpp  Loss-proxy dataset generation, target transforms,
//! L1 training, and ordering-accuracy evaluation.
//---------------------------------------------------------------------------//
#include "sitfit/proxy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "sitfit/body.hpp"
#include "sitfit/metrics.hpp"
#include "sitfit/parallel.hpp"
#include "sitfit/sitopt.hpp"
#include "sitfit/statics.hpp"

namespace sitfit::proxy
{
namespace
{

// Disjoint id spaces for the derived seed streams.
std::uint64_t constexpr kBodySpace = 1ull << 32;
std::uint64_t constexpr kNegativeSpace = 2ull << 32;
std::uint64_t constexpr kSitSpace = 3ull << 32;
std::uint64_t constexpr kSplitSpace = 4ull << 32;

int constexpr kShapeDim = 18;
int constexpr kPoseDim = 69;

//! Deterministic 95/5 split by seeded shuffle; at least one test sample
//! whenever there are two or more samples.
Dataset split_samples(std::vector<Sample> samples, Rng rng)
{
    for (std::size_t i = samples.size(); i > 1; --i)
    {
        std::swap(samples[i - 1], samples[std::size_t(rng.uniform_index(i))]);
    }
    std::size_t const n = samples.size();
    std::size_t const n_test =
        n >= 2 ? std::max<std::size_t>(1, std::size_t(std::lround(0.05 * double(n)))) : 0;
    Dataset out;
    out.train.assign(samples.begin(), samples.end() - long(n_test));
    out.test.assign(samples.end() - long(n_test), samples.end());
    return out;
}

double sample_l1(ProxyModel const& model, std::vector<Sample> const& samples)
{
    if (samples.empty())
    {
        return 0.0;
    }
    double sum = 0;
    for (Sample const& s : samples)
    {
        sum += std::abs(model.predict(s.desc, s.cond) - s.target);
    }
    return sum / double(samples.size());
}

}  // namespace

DatasetPair gen_dataset(std::vector<chairgen::ChairParams> const& chairs, GenConfig const& config)
{
    int const n_chairs = int(chairs.size());
    int const k = config.bodies_per_chair;
    int const q = config.poses_per_chair;
    SITFIT_REQUIRE(n_chairs >= 2, "dataset needs at least 2 chairs, got " << n_chairs);
    SITFIT_REQUIRE(k >= 1, "bodies_per_chair must be >= 1, got " << k);
    SITFIT_REQUIRE(q >= 2, "poses_per_chair must be >= 2, got " << q);

    // Shared bodies: the same k shapes are scored on every chair so held-out
    // samples can share a condition.
    chairgen::CondSampler const sampler = chairgen::shape_sampler();
    std::size_t const nk = static_cast<std::size_t>(k);
    std::size_t const nc = static_cast<std::size_t>(n_chairs);
    std::vector<std::uint64_t> body_seed(nk);
    std::vector<VecX> shape(nk);
    std::vector<body::BodyModel> bodies(nk);
    for (int b = 0; b < k; ++b)
    {
        body_seed[std::size_t(b)] = derive_seed(config.seed, kBodySpace + std::uint64_t(b));
        Rng rng(body_seed[std::size_t(b)]);
        shape[std::size_t(b)] = sampler(rng);
        body::ShapeVec sv;
        for (int i = 0; i < kShapeDim; ++i)
        {
            sv.v[std::size_t(i)] = shape[std::size_t(b)][i];
        }
        bodies[std::size_t(b)] = body::build_body(sv);
    }

    std::vector<VecX> desc(nc);
    std::vector<geom::ChairAsm> assembled(nc);
    std::vector<char> chair_ok(nc, 1);
    for (int c = 0; c < n_chairs; ++c)
    {
        desc[std::size_t(c)] = chairgen::descriptor(chairs[std::size_t(c)]);
        try
        {
            assembled[std::size_t(c)] = chairgen::assemble(chairs[std::size_t(c)]);
        }
        catch (std::exception const&)
        {
            chair_ok[std::size_t(c)] = 0;  // its tasks count as failures
        }
    }

    // One optimization task per (chair, body), parallel, bit-stable.
    struct Task
    {
        bool ok{false};
        double comfort{0};
        body::Pose pose;
    };
    std::vector<Task> tasks(nc * nk);
    parallel_for(
        tasks.size(),
        [&](std::size_t t) {
            int const c = int(t) / k;
            int const b = int(t) % k;
            Task& task = tasks[t];
            if (!chair_ok[std::size_t(c)])
            {
                return;
            }
            sitopt::SitConfig sit;
            sit.seed = derive_seed(config.seed, kSitSpace + t);
            try
            {
                sitopt::SitResult const res =
                    sitopt::optimize_sit(bodies[std::size_t(b)], assembled[std::size_t(c)], sit);
                statics::ComfortReport const rep =
                    statics::comfort_report(bodies[std::size_t(b)], res.pose,
                                            assembled[std::size_t(c)]);
                // Airborne bodies and non-positive aggregates (tension-
                // dominated contact) have no physical comfort reading.
                if (!rep.airborne && rep.loss_kpa > 0.0)
                {
                    task.ok = true;
                    task.comfort = rep.loss_kpa;
                    task.pose = res.pose;
                }
            }
            catch (std::exception const&)
            {
                task.ok = false;
            }
        },
        config.jobs);

    DatasetPair out;
    out.attempted = int(tasks.size());
    for (Task const& t : tasks)
    {
        out.failed += t.ok ? 0 : 1;
    }
    SITFIT_REQUIRE(out.failed * 5 <= out.attempted,
                   "more than 20% of dataset optimizations failed ("
                       << out.failed << " of " << out.attempted << ")");

    std::vector<Sample> comfort_samples;
    comfort_samples.reserve(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t)
    {
        if (!tasks[t].ok)
        {
            continue;
        }
        int const c = int(t) / k;
        int const b = int(t) % k;
        Sample s;
        s.chair_id = c;
        s.body_seed = body_seed[std::size_t(b)];
        s.desc = desc[std::size_t(c)];
        s.cond = shape[std::size_t(b)];
        s.raw = tasks[t].comfort;
        comfort_samples.push_back(std::move(s));
    }

    // Pose samples score each chair's canonical pose (first body's) against
    // itself (loss zero) and against other chairs' canonical poses.
    auto canonical = [&](int c) -> Task const& { return tasks[std::size_t(c) * std::size_t(k)]; };
    std::vector<int> valid_chairs;
    for (int c = 0; c < n_chairs; ++c)
    {
        if (canonical(c).ok)
        {
            valid_chairs.push_back(c);
        }
    }
    std::vector<Sample> pose_samples;
    for (int c : valid_chairs)
    {
        Sample self;
        self.chair_id = c;
        self.body_seed = body_seed[0];
        self.desc = desc[std::size_t(c)];
        self.cond = canonical(c).pose.to_vector();
        self.raw = 0.0;  // a chair accommodates its own optimized pose
        pose_samples.push_back(std::move(self));
        if (valid_chairs.size() < 2)
        {
            continue;  // no other chair can supply negatives
        }
        Rng rng(derive_seed(config.seed, kNegativeSpace + std::uint64_t(c)));
        for (int neg = 0; neg < q - 1; ++neg)
        {
            int other = c;
            while (other == c)
            {
                other = valid_chairs[std::size_t(rng.uniform_index(valid_chairs.size()))];
            }
            Sample s;
            s.chair_id = c;
            s.body_seed = body_seed[0];
            s.desc = desc[std::size_t(c)];
            s.cond = canonical(other).pose.to_vector();
            s.raw = metrics::pose_loss(bodies[0], canonical(c).pose, canonical(other).pose);
            pose_samples.push_back(std::move(s));
        }
    }

    out.comfort = split_samples(std::move(comfort_samples), Rng(derive_seed(config.seed, kSplitSpace)));
    out.pose = split_samples(std::move(pose_samples), Rng(derive_seed(config.seed, kSplitSpace + 1)));
    return out;
}

double transform_raw(Kind kind, double raw)
{
    SITFIT_REQUIRE(std::isfinite(raw), "loss value must be finite");
    if (kind == Kind::kComfort)
    {
        SITFIT_REQUIRE(raw > 0.0, "non-positive comfort loss is unphysical: " << raw);
        return std::log(raw);
    }
    SITFIT_REQUIRE(raw >= 0.0, "negative pose loss: " << raw);
    return std::log1p(raw);
}

Whitening fit_whitening(Kind kind, std::vector<Sample>* train)
{
    SITFIT_REQUIRE(train && !train->empty(), "cannot fit whitening on an empty training set");
    double sum = 0, sq = 0;
    for (Sample const& s : *train)
    {
        double const t = transform_raw(kind, s.raw);
        sum += t;
        sq += t * t;
    }
    double const n = double(train->size());
    Whitening w;
    w.mean = sum / n;
    double const var = std::max(0.0, sq / n - w.mean * w.mean);
    double const std_dev = std::sqrt(var);
    w.std = std_dev < 1e-12 ? 1.0 : std_dev;  // constant targets whiten to 0
    apply_whitening(kind, w, train);
    return w;
}

void apply_whitening(Kind kind, Whitening const& w, std::vector<Sample>* samples)
{
    SITFIT_REQUIRE(samples, "null sample vector");
    SITFIT_REQUIRE(w.std > 0.0, "whitening std must be positive");
    for (Sample& s : *samples)
    {
        s.target = (transform_raw(kind, s.raw) - w.mean) / w.std;
    }
}

double ProxyModel::predict(VecX const& desc, VecX const& cond) const
{
    SITFIT_REQUIRE(desc.size() == kDescriptorDim,
                   "descriptor must have " << kDescriptorDim << " entries, got " << desc.size());
    if (kind == Kind::kComfort)
    {
        SITFIT_REQUIRE(cond.size() == kShapeDim,
                       "comfort condition must have " << kShapeDim << " entries, got "
                                                      << cond.size());
        return nn::film_forward(film, desc, cond)[0];
    }
    SITFIT_REQUIRE(cond.size() == kPoseDim,
                   "pose condition must have " << kPoseDim << " entries, got " << cond.size());
    VecX x(kDescriptorDim + kPoseDim);
    x << desc, cond;
    return nn::forward(mlp, x)[0];
}

double ProxyModel::predict_raw(VecX const& desc, VecX const& cond) const
{
    double const t = whitening.mean + whitening.std * predict(desc, cond);
    return kind == Kind::kComfort ? std::exp(t) : std::expm1(t);
}

ProxyModel train_proxy(Dataset const& data, Kind kind, TrainConfig const& config, TrainLog* log)
{
    SITFIT_REQUIRE(!data.train.empty(), "cannot train a proxy on an empty training set");
    SITFIT_REQUIRE(config.epochs >= 1 && config.batch >= 1 && config.lr > 0.0,
                   "training config must have positive epochs/batch/lr");

    ProxyModel model;
    model.kind = kind;
    std::vector<Sample> train = data.train;
    std::vector<Sample> test = data.test;
    model.whitening = fit_whitening(kind, &train);
    apply_whitening(kind, model.whitening, &test);

    Rng init_rng(derive_seed(config.seed, 0));
    int const cond_dim = kind == Kind::kComfort ? kShapeDim : kPoseDim;
    for (Sample const& s : train)
    {
        SITFIT_REQUIRE(s.desc.size() == kDescriptorDim && s.cond.size() == cond_dim,
                       "sample dimensions do not match the proxy kind");
    }
    std::vector<int> const trunk{kDescriptorDim, 256, 256, 128, 1};
    if (kind == Kind::kComfort)
    {
        int const film_out = 2 * (256 + 256 + 128);
        model.film = nn::FilmMlp::init(trunk, {kShapeDim, 64, film_out}, init_rng);
    }
    else
    {
        model.mlp = nn::Mlp::init({kDescriptorDim + kPoseDim, 256, 256, 128, 1}, init_rng);
    }

    VecX params = kind == Kind::kComfort ? model.film.params() : model.mlp.params();
    nn::AdamState adam(params.size());

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < config.epochs; ++epoch)
    {
        // Linear decay to lr/10 over the run: escapes the initial
        // mean-prediction plateau quickly, then settles the L1 floor low.
        double const frac = config.epochs > 1 ? double(epoch) / double(config.epochs - 1) : 0.0;
        double const lr = config.lr * (1.0 - 0.9 * frac);
        Rng shuffle_rng(derive_seed(config.seed, std::uint64_t(epoch) + 1));
        for (std::size_t i = order.size(); i > 1; --i)
        {
            std::swap(order[i - 1], order[std::size_t(shuffle_rng.uniform_index(i))]);
        }
        double epoch_abs = 0;
        for (std::size_t start = 0; start < order.size(); start += std::size_t(config.batch))
        {
            std::size_t const stop = std::min(order.size(), start + std::size_t(config.batch));
            double const inv = 1.0 / double(stop - start);
            nn::FilmMlp film_grad;
            nn::Mlp mlp_grad;
            if (kind == Kind::kComfort)
            {
                film_grad = nn::FilmMlp{nn::Mlp::zeros(model.film.target.sizes),
                                        nn::Mlp::zeros(model.film.cond.sizes)};
            }
            else
            {
                mlp_grad = nn::Mlp::zeros(model.mlp.sizes);
            }
            for (std::size_t idx = start; idx < stop; ++idx)
            {
                Sample const& s = train[order[idx]];
                double err = 0;
                if (kind == Kind::kComfort)
                {
                    nn::FilmCache cache;
                    err = nn::film_forward(model.film, s.desc, s.cond, &cache)[0] - s.target;
                    VecX upstream(1);
                    upstream[0] = (err > 0 ? 1.0 : err < 0 ? -1.0 : 0.0) * inv;
                    nn::film_backward(model.film, cache, upstream, &film_grad);
                }
                else
                {
                    VecX x(kDescriptorDim + kPoseDim);
                    x << s.desc, s.cond;
                    nn::ForwardCache cache;
                    err = nn::forward(model.mlp, x, &cache)[0] - s.target;
                    VecX upstream(1);
                    upstream[0] = (err > 0 ? 1.0 : err < 0 ? -1.0 : 0.0) * inv;
                    nn::backward(model.mlp, cache, upstream, &mlp_grad);
                }
                epoch_abs += std::abs(err);
            }
            VecX const g = kind == Kind::kComfort ? film_grad.params() : mlp_grad.params();
            nn::adam_step(&params, g, &adam, lr);
            if (kind == Kind::kComfort)
            {
                model.film.set_params(params);
            }
            else
            {
                model.mlp.set_params(params);
            }
        }
        double const train_l1 = epoch_abs / double(train.size());
        SITFIT_REQUIRE(std::isfinite(train_l1),
                       "non-finite proxy training loss at epoch " << epoch);
        if (log)
        {
            log->train_l1.push_back(train_l1);
            log->test_l1.push_back(sample_l1(model, test));
        }
    }
    return model;
}

double ordering_accuracy(std::function<double(Sample const&)> const& scorer,
                         std::vector<Sample> const& held_out)
{
    SITFIT_REQUIRE(scorer, "ordering accuracy needs a scorer");
    std::vector<double> score(held_out.size());
    for (std::size_t i = 0; i < held_out.size(); ++i)
    {
        score[i] = scorer(held_out[i]);
    }
    long total = 0, correct = 0;
    for (std::size_t i = 0; i < held_out.size(); ++i)
    {
        for (std::size_t j = i + 1; j < held_out.size(); ++j)
        {
            Sample const& a = held_out[i];
            Sample const& b = held_out[j];
            if (a.cond.size() != b.cond.size() || !(a.cond.array() == b.cond.array()).all())
            {
                continue;  // only pairs sharing the exact condition compare
            }
            if (std::abs(a.raw - b.raw) < 1e-9)
            {
                continue;  // tie on the true loss
            }
            ++total;
            double const ds = score[i] - score[j];
            double const dt = a.raw - b.raw;
            if ((ds > 0 && dt > 0) || (ds < 0 && dt < 0))
            {
                ++correct;
            }
        }
    }
    SITFIT_REQUIRE(total > 0, "no held-out pair shares a condition with distinct losses");
    return 100.0 * double(correct) / double(total);
}

double ordering_accuracy(ProxyModel const& model, std::vector<Sample> const& held_out)
{
    return ordering_accuracy(
        [&model](Sample const& s) { return model.predict(s.desc, s.cond); }, held_out);
}

void save_samples(std::string const& path, std::vector<Sample> const& samples)
{
    std::ofstream out(path);
    SITFIT_REQUIRE(out.good(), "cannot open " << path << " for writing");
    for (Sample const& s : samples)
    {
        nlohmann::json line;
        line["chair"] = s.chair_id;
        line["body_seed"] = s.body_seed;
        line["desc"] = std::vector<double>(s.desc.data(), s.desc.data() + s.desc.size());
        line["cond"] = std::vector<double>(s.cond.data(), s.cond.data() + s.cond.size());
        line["raw"] = s.raw;
        line["target"] = s.target;
        out << line.dump() << '\n';
    }
    SITFIT_REQUIRE(out.good(), "write to " << path << " failed");
}

std::vector<Sample> load_samples(std::string const& path)
{
    std::ifstream in(path);
    SITFIT_REQUIRE(in.good(), "cannot open " << path);
    std::vector<Sample> samples;
    std::string line;
    while (std::getline(in, line))
    {
        if (line.empty())
        {
            continue;
        }
        nlohmann::json const doc = nlohmann::json::parse(line);
        Sample s;
        s.chair_id = doc.at("chair").get<int>();
        s.body_seed = doc.at("body_seed").get<std::uint64_t>();
        auto const d = doc.at("desc").get<std::vector<double>>();
        auto const c = doc.at("cond").get<std::vector<double>>();
        s.desc = Eigen::Map<VecX const>(d.data(), long(d.size()));
        s.cond = Eigen::Map<VecX const>(c.data(), long(c.size()));
        s.raw = doc.at("raw").get<double>();
        s.target = doc.at("target").get<double>();
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace sitfit::proxy
