//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file nn.cpp  Dense networks, FiLM, Adam, and model files.
//---------------------------------------------------------------------------//
#include "sitfit/nn.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace sitfit::nn
{

namespace
{

char const kMagic[8] = {'S', 'I', 'T', 'F', 'I', 'T', 'N', 'N'};

std::vector<int> hidden_widths(std::vector<int> const& sizes)
{
    return {sizes.begin() + 1, sizes.end() - 1};
}

int film_output_dim(std::vector<int> const& target_sizes)
{
    int total = 0;
    for (int wdt : hidden_widths(target_sizes))
    {
        total += 2 * wdt;
    }
    return total;
}

//! Shared reverse pass; when d_gamma/d_beta are non-null the cache must hold
//! modulation vectors and the per-layer FiLM gradients are written there.
VecX backward_impl(Mlp const& net,
                   ForwardCache const& cache,
                   VecX const& upstream,
                   Mlp* grad,
                   std::vector<VecX>* d_gamma,
                   std::vector<VecX>* d_beta)
{
    int const layers = net.layer_count();
    bool const modulated = !cache.gamma.empty();
    VecX dh = upstream;
    for (int l = layers - 1; l >= 0; --l)
    {
        VecX dz;
        if (l == layers - 1)
        {
            dz = dh;  // linear output layer
        }
        else
        {
            VecX dzm = dh;
            for (int i = 0; i < dzm.size(); ++i)
            {
                dzm[i] *= sigmoid(cache.z[l][i]);
            }
            if (modulated)
            {
                if (d_gamma != nullptr)
                {
                    (*d_gamma)[l] = dzm.cwiseProduct(cache.z_raw[l]);
                    (*d_beta)[l] = dzm;
                }
                dz = dzm.cwiseProduct(cache.gamma[l]);
            }
            else
            {
                dz = dzm;
            }
        }
        if (grad != nullptr)
        {
            grad->w[l] += dz * cache.h[l].transpose();
            grad->b[l] += dz;
        }
        dh = net.w[l].transpose() * dz;
    }
    return dh;
}

}  // namespace

double softplus(double x)
{
    if (x > 30.0)
    {
        return x;
    }
    if (x < -30.0)
    {
        return std::exp(x);
    }
    return std::log1p(std::exp(x));
}

double sigmoid(double x)
{
    if (x >= 0.0)
    {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double const e = std::exp(x);
    return e / (1.0 + e);
}

Mlp Mlp::init(std::vector<int> const& sizes, Rng& rng)
{
    SITFIT_REQUIRE(sizes.size() >= 2, "an MLP needs at least one layer");
    Mlp net;
    net.sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
    {
        int const fan_in = sizes[l];
        int const fan_out = sizes[l + 1];
        SITFIT_REQUIRE(fan_in > 0 && fan_out > 0, "layer sizes must be positive");
        double const bound = std::sqrt(6.0 / double(fan_in + fan_out));
        MatX w(fan_out, fan_in);
        for (int c = 0; c < fan_in; ++c)
        {
            for (int r = 0; r < fan_out; ++r)
            {
                w(r, c) = rng.uniform(-bound, bound);
            }
        }
        net.w.push_back(std::move(w));
        net.b.push_back(VecX::Zero(fan_out));
    }
    return net;
}

Mlp Mlp::zeros(std::vector<int> const& sizes)
{
    Mlp net;
    net.sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
    {
        net.w.push_back(MatX::Zero(sizes[l + 1], sizes[l]));
        net.b.push_back(VecX::Zero(sizes[l + 1]));
    }
    return net;
}

long Mlp::param_count() const
{
    long n = 0;
    for (std::size_t l = 0; l < w.size(); ++l)
    {
        n += w[l].size() + b[l].size();
    }
    return n;
}

VecX Mlp::params() const
{
    VecX p(param_count());
    long off = 0;
    for (std::size_t l = 0; l < w.size(); ++l)
    {
        std::memcpy(p.data() + off, w[l].data(), sizeof(double) * w[l].size());
        off += w[l].size();
        std::memcpy(p.data() + off, b[l].data(), sizeof(double) * b[l].size());
        off += b[l].size();
    }
    return p;
}

void Mlp::set_params(VecX const& p)
{
    SITFIT_REQUIRE(p.size() == param_count(), "parameter vector size mismatch");
    long off = 0;
    for (std::size_t l = 0; l < w.size(); ++l)
    {
        std::memcpy(w[l].data(), p.data() + off, sizeof(double) * w[l].size());
        off += w[l].size();
        std::memcpy(b[l].data(), p.data() + off, sizeof(double) * b[l].size());
        off += b[l].size();
    }
}

void Mlp::add_scaled(Mlp const& other, double s)
{
    for (std::size_t l = 0; l < w.size(); ++l)
    {
        w[l] += s * other.w[l];
        b[l] += s * other.b[l];
    }
}

VecX forward(Mlp const& net, VecX const& x, ForwardCache* cache)
{
    SITFIT_REQUIRE(x.size() == net.sizes.front(), "input dimension mismatch");
    int const layers = net.layer_count();
    if (cache != nullptr)
    {
        cache->h.assign(std::size_t(layers) + 1, VecX{});
        cache->z.assign(layers, VecX{});
        cache->z_raw.assign(layers, VecX{});
        cache->gamma.clear();
        cache->beta.clear();
        cache->h[0] = x;
    }
    VecX h = x;
    for (int l = 0; l < layers; ++l)
    {
        VecX z = net.w[l] * h + net.b[l];
        if (l < layers - 1)
        {
            VecX a(z.size());
            for (int i = 0; i < z.size(); ++i)
            {
                a[i] = softplus(z[i]);
            }
            h = std::move(a);
        }
        else
        {
            h = z;
        }
        if (cache != nullptr)
        {
            cache->z_raw[l] = z;
            cache->z[l] = std::move(z);
            cache->h[l + 1] = h;
        }
    }
    return h;
}

VecX backward(Mlp const& net,
              ForwardCache const& cache,
              VecX const& upstream,
              Mlp* grad)
{
    return backward_impl(net, cache, upstream, grad, nullptr, nullptr);
}

FilmMlp FilmMlp::init(std::vector<int> const& target_sizes,
                      std::vector<int> const& cond_sizes,
                      Rng& rng)
{
    SITFIT_REQUIRE(cond_sizes.back() == film_output_dim(target_sizes),
                   "conditioning output must be twice the hidden width sum");
    FilmMlp net;
    net.target = Mlp::init(target_sizes, rng);
    net.cond = Mlp::init(cond_sizes, rng);
    return net;
}

long FilmMlp::param_count() const
{
    return target.param_count() + cond.param_count();
}

VecX FilmMlp::params() const
{
    VecX p(param_count());
    p.head(target.param_count()) = target.params();
    p.tail(cond.param_count()) = cond.params();
    return p;
}

void FilmMlp::set_params(VecX const& p)
{
    SITFIT_REQUIRE(p.size() == param_count(), "parameter vector size mismatch");
    target.set_params(p.head(target.param_count()));
    cond.set_params(p.tail(cond.param_count()));
}

VecX film_forward(FilmMlp const& net, VecX const& x, VecX const& c, FilmCache* cache)
{
    FilmCache local;
    FilmCache* cc = cache != nullptr ? cache : &local;
    VecX const mod = forward(net.cond, c, &cc->cond_cache);

    Mlp const& t = net.target;
    int const layers = t.layer_count();
    ForwardCache& tc = cc->target_cache;
    tc.h.assign(std::size_t(layers) + 1, VecX{});
    tc.z.assign(layers, VecX{});
    tc.z_raw.assign(layers, VecX{});
    tc.gamma.assign(layers, VecX{});
    tc.beta.assign(layers, VecX{});
    tc.h[0] = x;

    VecX h = x;
    long off = 0;
    for (int l = 0; l < layers; ++l)
    {
        VecX z_raw = t.w[l] * h + t.b[l];
        if (l < layers - 1)
        {
            int const wdt = int(z_raw.size());
            VecX const gamma = VecX::Ones(wdt) + mod.segment(off, wdt);
            VecX const beta = mod.segment(off + wdt, wdt);
            off += 2 * wdt;
            VecX const z = gamma.cwiseProduct(z_raw) + beta;
            VecX a(wdt);
            for (int i = 0; i < wdt; ++i)
            {
                a[i] = softplus(z[i]);
            }
            tc.z_raw[l] = std::move(z_raw);
            tc.z[l] = z;
            tc.gamma[l] = gamma;
            tc.beta[l] = beta;
            h = std::move(a);
        }
        else
        {
            tc.z_raw[l] = z_raw;
            tc.z[l] = z_raw;
            h = std::move(z_raw);
        }
        tc.h[l + 1] = h;
    }
    return h;
}

VecX film_backward(FilmMlp const& net,
                   FilmCache const& cache,
                   VecX const& upstream,
                   FilmMlp* grad,
                   VecX* d_cond)
{
    int const layers = net.target.layer_count();
    std::vector<VecX> d_gamma(layers), d_beta(layers);
    VecX const dx = backward_impl(net.target,
                                  cache.target_cache,
                                  upstream,
                                  grad != nullptr ? &grad->target : nullptr,
                                  &d_gamma,
                                  &d_beta);

    // Assemble the upstream for the conditioning net: raw-scale gradients
    // equal the gamma gradients (gamma = 1 + raw).
    VecX d_mod(net.cond.sizes.back());
    long off = 0;
    for (int l = 0; l + 1 < layers; ++l)
    {
        int const wdt = int(d_gamma[l].size());
        d_mod.segment(off, wdt) = d_gamma[l];
        d_mod.segment(off + wdt, wdt) = d_beta[l];
        off += 2 * wdt;
    }
    VecX const dc = backward(net.cond,
                             cache.cond_cache,
                             d_mod,
                             grad != nullptr ? &grad->cond : nullptr);
    if (d_cond != nullptr)
    {
        *d_cond = dc;
    }
    return dx;
}

void adam_step(VecX* params, VecX const& grad, AdamState* state, double lr)
{
    SITFIT_REQUIRE(params->size() == grad.size()
                       && params->size() == state->m.size(),
                   "Adam buffer size mismatch");
    state->t += 1;
    state->m = state->beta1 * state->m + (1.0 - state->beta1) * grad;
    state->v =
        state->beta2 * state->v + (1.0 - state->beta2) * grad.cwiseProduct(grad);
    double const bc1 = 1.0 - std::pow(state->beta1, double(state->t));
    double const bc2 = 1.0 - std::pow(state->beta2, double(state->t));
    for (long i = 0; i < params->size(); ++i)
    {
        double const m_hat = state->m[i] / bc1;
        double const v_hat = state->v[i] / bc2;
        (*params)[i] -= lr * m_hat / (std::sqrt(v_hat) + state->eps);
    }
}

void save_model(std::string const& path,
                std::string const& header_json,
                VecX const& params)
{
    // Validate the header is well-formed JSON before committing it to disk.
    auto const parsed = nlohmann::json::parse(header_json);
    (void)parsed;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    SITFIT_REQUIRE(out.good(), "cannot open model file for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    std::uint64_t const len = header_json.size();
    out.write(reinterpret_cast<char const*>(&len), sizeof(len));
    out.write(header_json.data(), std::streamsize(len));
    out.write(reinterpret_cast<char const*>(params.data()),
              std::streamsize(sizeof(double) * params.size()));
    SITFIT_REQUIRE(out.good(), "failed writing model file: " + path);
}

std::pair<std::string, VecX> load_model(std::string const& path)
{
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    SITFIT_REQUIRE(in.good(), "cannot open model file: " + path);
    auto const file_size = static_cast<std::uint64_t>(in.tellg());
    in.seekg(0);
    char magic[8];
    std::uint64_t len = 0;
    in.read(magic, sizeof(magic));
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    SITFIT_REQUIRE(in.good() && std::memcmp(magic, kMagic, sizeof(magic)) == 0,
                   "not a model file: " + path);
    SITFIT_REQUIRE(sizeof(magic) + sizeof(len) + len <= file_size,
                   "truncated model header: " + path);
    std::string header(len, '\0');
    in.read(header.data(), std::streamsize(len));
    std::uint64_t const blob = file_size - sizeof(magic) - sizeof(len) - len;
    SITFIT_REQUIRE(blob % sizeof(double) == 0,
                   "model parameter block is not a multiple of 8 bytes");
    VecX params(blob / sizeof(double));
    in.read(reinterpret_cast<char*>(params.data()), std::streamsize(blob));
    SITFIT_REQUIRE(in.good(), "truncated model file: " + path);
    return {std::move(header), std::move(params)};
}

}  // namespace sitfit::nn
