#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "dccc/core.hpp"

namespace dccc {

// A single linear map followed by L2 normalization. Small enough that the
// backward pass is written out by hand and checked against finite differences.
struct EncoderParams {
    Matrix weight; // out_dim x in_dim
    std::vector<double> bias; // out_dim

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }

    static EncoderParams random_init(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
        if (out_dim < 2) throw ConfigError("EncoderParams: out_dim must be >= 2");
        EncoderParams p;
        p.weight = Matrix(out_dim, in_dim);
        p.bias.assign(out_dim, 0.0);
        // Scaled Gaussian init keeps pre-normalization activations O(1).
        std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(in_dim)));
        for (auto& w : p.weight.data()) w = gauss(rng);
        return p;
    }
};

inline bool same_shape(const EncoderParams& a, const EncoderParams& b) {
    return a.weight.same_shape(b.weight) && a.bias.size() == b.bias.size();
}

// Everything backward() needs from the matching forward() call.
struct ForwardCache {
    Matrix input;       // B x in_dim
    Matrix pre_norm;    // B x out_dim, W*x + b before normalization
    std::vector<double> norms; // per-row Euclidean norm of pre_norm
};

struct EncoderGradients {
    Matrix weight;  // out_dim x in_dim
    std::vector<double> bias;
    Matrix input;   // B x in_dim
};

// Forward pass: row i of the output is (W*x_i + b) / ||W*x_i + b||.
inline FeatureMatrix forward(const EncoderParams& p, const Matrix& batch, ForwardCache* cache = nullptr) {
    if (batch.cols() != p.in_dim())
        throw ContractError("forward: batch column count does not match encoder in_dim");

    const std::size_t b = batch.rows();
    const std::size_t dout = p.out_dim();
    const std::size_t din = p.in_dim();

    Matrix pre(b, dout);
    for (std::size_t i = 0; i < b; ++i) {
        auto x = batch.row(i);
        auto y = pre.row(i);
        for (std::size_t o = 0; o < dout; ++o) {
            double s = p.bias[o];
            auto w = p.weight.row(o);
            for (std::size_t j = 0; j < din; ++j) s += w[j] * x[j];
            y[o] = s;
        }
    }

    FeatureMatrix out(b, dout);
    std::vector<double> norms(b);
    for (std::size_t i = 0; i < b; ++i) {
        const double n = norm2(pre.row(i));
        if (!(n > 1e-12))
            throw NumericalError("forward: zero pre-normalization norm at sample " + std::to_string(i));
        norms[i] = n;
        auto src = pre.row(i);
        auto dst = out.row(i);
        for (std::size_t o = 0; o < dout; ++o) dst[o] = src[o] / n;
    }

    if (cache) {
        cache->input = batch;
        cache->pre_norm = std::move(pre);
        cache->norms = std::move(norms);
    }
    return out;
}

// Backward pass through normalization and the linear map. For each row,
// the normalization Jacobian is (I - y*y^T) / ||v|| applied to the incoming
// gradient, then the linear layer contributes W^T for the input gradient and
// outer products for the parameter gradients.
inline EncoderGradients backward(const EncoderParams& p, const ForwardCache& cache,
                                 const Matrix& grad_wrt_output) {
    const std::size_t b = cache.input.rows();
    const std::size_t dout = p.out_dim();
    const std::size_t din = p.in_dim();
    if (grad_wrt_output.rows() != b || grad_wrt_output.cols() != dout)
        throw ContractError("backward: gradient shape does not match cached forward pass");
    if (cache.pre_norm.rows() != b || cache.pre_norm.cols() != dout || cache.norms.size() != b)
        throw ContractError("backward: cache is inconsistent");

    EncoderGradients g;
    g.weight = Matrix(dout, din);
    g.bias.assign(dout, 0.0);
    g.input = Matrix(b, din);

    std::vector<double> dv(dout);
    for (std::size_t i = 0; i < b; ++i) {
        auto go = grad_wrt_output.row(i);
        auto v = cache.pre_norm.row(i);
        const double n = cache.norms[i];

        // dL/dv = (g - y*(y.g)) / n with y = v/n
        double y_dot_g = 0.0;
        for (std::size_t o = 0; o < dout; ++o) y_dot_g += (v[o] / n) * go[o];
        for (std::size_t o = 0; o < dout; ++o) dv[o] = (go[o] - (v[o] / n) * y_dot_g) / n;

        auto x = cache.input.row(i);
        auto gx = g.input.row(i);
        for (std::size_t o = 0; o < dout; ++o) {
            g.bias[o] += dv[o];
            auto gw = g.weight.row(o);
            auto w = p.weight.row(o);
            for (std::size_t j = 0; j < din; ++j) {
                gw[j] += dv[o] * x[j];
                gx[j] += dv[o] * w[j];
            }
        }
    }
    return g;
}

struct AdamState {
    Matrix m_weight, v_weight;
    std::vector<double> m_bias, v_bias;
    std::size_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 5e-4;

    static AdamState init(const EncoderParams& p, double weight_decay = 5e-4) {
        AdamState s;
        s.m_weight = Matrix(p.out_dim(), p.in_dim());
        s.v_weight = Matrix(p.out_dim(), p.in_dim());
        s.m_bias.assign(p.bias.size(), 0.0);
        s.v_bias.assign(p.bias.size(), 0.0);
        s.weight_decay = weight_decay;
        return s;
    }
};

// One Adam step with decoupled weight decay on the weight matrix only.
// Throws before touching any state if the gradients are not finite.
inline void adam_step(AdamState& state, EncoderParams& p, const EncoderGradients& grads, double lr) {
    if (lr < 0.0) throw ContractError("adam_step: lr must be >= 0");
    if (!grads.weight.same_shape(p.weight) || grads.bias.size() != p.bias.size())
        throw ContractError("adam_step: gradient shapes do not match parameters");
    if (!all_finite(grads.weight) || !all_finite(grads.bias))
        throw NumericalError("adam_step: non-finite gradients");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    auto update = [&](double& param, double& m, double& v, double g, bool decay) {
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        double delta = mhat / (std::sqrt(vhat) + state.eps);
        if (decay) delta += state.weight_decay * param;
        param -= lr * delta;
    };

    for (std::size_t i = 0; i < p.weight.size(); ++i)
        update(p.weight.data()[i], state.m_weight.data()[i], state.v_weight.data()[i],
               grads.weight.data()[i], true);
    for (std::size_t i = 0; i < p.bias.size(); ++i)
        update(p.bias[i], state.m_bias[i], state.v_bias[i], grads.bias[i], false);
}

// Linear warmup: lr grows to base_lr over warmup_epochs, constant afterwards.
inline double warmup_lr(std::size_t epoch, double base_lr, std::size_t warmup_epochs) {
    if (warmup_epochs < 1) throw ContractError("warmup_lr: warmup_epochs must be >= 1");
    const double ramp = static_cast<double>(epoch + 1) / static_cast<double>(warmup_epochs);
    return base_lr * std::min(1.0, ramp);
}

struct EmaConfig {
    double lambda = 0.999;

    void validate() const {
        if (lambda < 0.0 || lambda > 1.0) throw ConfigError("EmaConfig: lambda must be in [0, 1]");
    }
};

// teacher <- lambda * teacher + (1 - lambda) * student, elementwise.
inline void ema_update(EncoderParams& teacher, const EncoderParams& student, const EmaConfig& cfg) {
    cfg.validate();
    if (!same_shape(teacher, student))
        throw ContractError("ema_update: teacher and student shapes do not match");
    const double l = cfg.lambda;
    for (std::size_t i = 0; i < teacher.weight.size(); ++i)
        teacher.weight.data()[i] = l * teacher.weight.data()[i] + (1.0 - l) * student.weight.data()[i];
    for (std::size_t i = 0; i < teacher.bias.size(); ++i)
        teacher.bias[i] = l * teacher.bias[i] + (1.0 - l) * student.bias[i];
}

} // namespace dccc
