//---------------------------------------------------------------------------//
// SPDX-License-Identifier: Apache-2.0
//! \file nn.hpp  Minimal dense-network stack: MLPs, FiLM modulation,
//! reverse-mode gradients, Adam, and model-file serialization.
//---------------------------------------------------------------------------//
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sitfit/common.hpp"
#include "sitfit/rng.hpp"

namespace sitfit::nn
{

double softplus(double x);
double sigmoid(double x);

//! Fully-connected network: softplus hidden activations, linear output.
//! Layer l maps sizes[l] -> sizes[l+1] via h W_l + b_l (W_l is
//! sizes[l+1] x sizes[l]).
struct Mlp
{
    std::vector<int> sizes;
    std::vector<MatX> w;
    std::vector<VecX> b;

    //! Seeded init: weights uniform in +-sqrt(6 / (fan_in + fan_out)),
    //! biases zero. Draw order is layer-major, then column-major per matrix.
    static Mlp init(std::vector<int> const& sizes, Rng& rng);
    //! All-zero parameters (used for gradient accumulators).
    static Mlp zeros(std::vector<int> const& sizes);

    int layer_count() const { return int(w.size()); }
    long param_count() const;
    VecX params() const;
    void set_params(VecX const& p);
    void add_scaled(Mlp const& other, double s);  //!< this += s * other
};

//! Cached activations of one forward pass (needed by backward).
struct ForwardCache
{
    std::vector<VecX> h;      //!< h[0] = input, ..., h[L] = output
    std::vector<VecX> z;      //!< post-modulation pre-activations per layer
    std::vector<VecX> z_raw;  //!< W h + b per layer (== z unmodulated)
    std::vector<VecX> gamma;  //!< per hidden layer; empty when unconditioned
    std::vector<VecX> beta;
};

VecX forward(Mlp const& net, VecX const& x, ForwardCache* cache = nullptr);

//! Reverse-mode pass: accumulates parameter gradients into *grad (same
//! shapes as net, caller-zeroed) and returns dL/dx.
VecX backward(Mlp const& net,
              ForwardCache const& cache,
              VecX const& upstream,
              Mlp* grad);

//! FiLM-conditioned MLP: a conditioning net maps the condition vector to
//! per-hidden-layer (raw scale, shift) pairs; the modulated forward is
//! h_{l+1} = act((1 + raw_l) .* (W_l h_l + b_l) + beta_l). The output layer
//! is never modulated. The conditioning output is laid out layer by layer,
//! raw scales first then shifts.
struct FilmMlp
{
    Mlp target;
    Mlp cond;

    //! cond_sizes.back() must equal 2 * sum(hidden widths of target_sizes).
    static FilmMlp init(std::vector<int> const& target_sizes,
                        std::vector<int> const& cond_sizes,
                        Rng& rng);
    long param_count() const;
    VecX params() const;
    void set_params(VecX const& p);
};

struct FilmCache
{
    ForwardCache target_cache;
    ForwardCache cond_cache;
};

VecX film_forward(FilmMlp const& net,
                  VecX const& x,
                  VecX const& c,
                  FilmCache* cache = nullptr);

//! Returns dL/dx; accumulates parameter gradients into *grad and, when
//! d_cond is non-null, writes dL/dc.
VecX film_backward(FilmMlp const& net,
                   FilmCache const& cache,
                   VecX const& upstream,
                   FilmMlp* grad,
                   VecX* d_cond = nullptr);

//! Adam with bias correction over a flat parameter vector.
struct AdamState
{
    VecX m, v;
    long t{0};
    double beta1{0.9}, beta2{0.999}, eps{1e-8};

    explicit AdamState(long n) : m(VecX::Zero(n)), v(VecX::Zero(n)) {}
};

void adam_step(VecX* params, VecX const& grad, AdamState* state, double lr);

//! Model container: 8-byte magic, little-endian u64 header length, JSON
//! header text, then the raw little-endian f64 parameter block.
void save_model(std::string const& path,
                std::string const& header_json,
                VecX const& params);
std::pair<std::string, VecX> load_model(std::string const& path);

}  // namespace sitfit::nn
