// fatesim/mlp.hpp - dense 2x64 MLP with backprop, Adam, and a finite
// difference gradient checker
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace fatesim {

enum class OutputHead {
    Linear,
    Tanh,
    // Output is [mean | log_std] halves; log_std is clamped to [-20, 2].
    Gaussian
};

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

struct LayerShape {
    int in = 0;
    int out = 0;
};

struct MlpGradients {
    // Same layout as the parameters: per layer, row-major weights then biases.
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;
};

struct ForwardCache {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;   // pre-activations per layer
    std::vector<std::vector<double>> post;  // activations per layer (last = head output)
};

class Mlp {
public:
    Mlp(int input_size, int output_size, OutputHead head, std::uint64_t seed, int hidden = 64)
        : head_(head) {
        if (input_size <= 0 || output_size <= 0 || hidden <= 0)
            throw std::invalid_argument("layer sizes must be positive");
        if (head == OutputHead::Gaussian && output_size % 2 != 0)
            throw std::invalid_argument("gaussian head needs an even output size");
        shapes_ = {{input_size, hidden}, {hidden, hidden}, {hidden, output_size}};
        std::mt19937_64 rng(seed);
        for (const LayerShape& s : shapes_) {
            double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            std::vector<double> w(static_cast<std::size_t>(s.in) * static_cast<std::size_t>(s.out));
            for (double& x : w) x = dist(rng);
            std::vector<double> b(static_cast<std::size_t>(s.out));
            for (double& x : b) x = dist(rng);
            w_.push_back(std::move(w));
            b_.push_back(std::move(b));
        }
    }

    int input_size() const { return shapes_.front().in; }
    int output_size() const { return shapes_.back().out; }
    OutputHead head() const { return head_; }
    const std::vector<LayerShape>& shapes() const { return shapes_; }

    std::vector<double> forward(std::span<const double> input, ForwardCache* cache = nullptr) const {
        if (cache) return forward_cached(input, *cache);
        ForwardCache scratch;
        return forward_cached(input, scratch);
    }

    // Same pass, reusing the cache's buffers; the reference stays valid
    // until the next forward into the same cache.
    const std::vector<double>& forward_cached(std::span<const double> input,
                                              ForwardCache& cache) const {
        if (static_cast<int>(input.size()) != input_size())
            throw std::invalid_argument("input size mismatch: expected " +
                                        std::to_string(input_size()) + ", got " +
                                        std::to_string(input.size()));
        cache.input.assign(input.begin(), input.end());
        if (cache.pre.size() != shapes_.size()) {
            cache.pre.resize(shapes_.size());
            cache.post.resize(shapes_.size());
        }
        const std::vector<double>* below = &cache.input;
        for (std::size_t layer = 0; layer < shapes_.size(); ++layer) {
            const LayerShape& s = shapes_[layer];
            std::vector<double>& z = cache.pre[layer];
            z.resize(static_cast<std::size_t>(s.out));
            const double* w = w_[layer].data();
            const double* in = below->data();
            for (int o = 0; o < s.out; ++o) {
                const double* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(s.in);
                double sum = b_[layer][static_cast<std::size_t>(o)];
                for (int i = 0; i < s.in; ++i) sum += row[i] * in[i];
                z[static_cast<std::size_t>(o)] = sum;
            }
            std::vector<double>& a = cache.post[layer];
            a = z;
            if (layer + 1 != shapes_.size()) {
                for (double& x : a) x = x > 0.0 ? x : 0.0;  // rectifier
            } else {
                apply_head(a);
            }
            below = &a;
        }
        return cache.post.back();
    }

    // Gradients of a scalar loss w.r.t. every parameter given dL/d(output).
    // Optionally also yields dL/d(input), used to differentiate a critic
    // with respect to the action part of its input.
    MlpGradients backward(const ForwardCache& cache, std::span<const double> output_grad,
                          std::vector<double>* input_grad = nullptr) const {
        MlpGradients g;
        zero_like(g);
        backward_into(cache, output_grad, g, input_grad);
        return g;
    }

    // Adds this sample's gradients into an accumulator shaped by zero_like.
    void backward_into(const ForwardCache& cache, std::span<const double> output_grad,
                       MlpGradients& acc, std::vector<double>* input_grad = nullptr) const {
        if (cache.pre.size() != shapes_.size() || cache.post.size() != shapes_.size())
            throw std::invalid_argument("stale or incomplete forward cache");
        if (static_cast<int>(output_grad.size()) != output_size())
            throw std::invalid_argument("output gradient size mismatch");

        std::vector<double> delta = head_backward(cache, output_grad);
        std::vector<double> down;
        for (std::size_t layer = shapes_.size(); layer-- > 0;) {
            const LayerShape& s = shapes_[layer];
            const std::vector<double>& below =
                layer == 0 ? cache.input : cache.post[layer - 1];
            double* gw = acc.w[layer].data();
            double* gb = acc.b[layer].data();
            const double* in = below.data();
            for (int o = 0; o < s.out; ++o) {
                double d = delta[static_cast<std::size_t>(o)];
                gb[o] += d;
                double* row = gw + static_cast<std::size_t>(o) * static_cast<std::size_t>(s.in);
                for (int i = 0; i < s.in; ++i) row[i] += d * in[i];
            }
            if (layer == 0 && !input_grad) break;
            // Propagate to the layer below.
            down.assign(static_cast<std::size_t>(s.in), 0.0);
            const double* w = w_[layer].data();
            for (int o = 0; o < s.out; ++o) {
                double d = delta[static_cast<std::size_t>(o)];
                const double* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(s.in);
                for (int i = 0; i < s.in; ++i) down[static_cast<std::size_t>(i)] += d * row[i];
            }
            if (layer == 0) {
                if (input_grad) *input_grad = down;
                break;
            }
            // Through the rectifier of the layer below.
            const std::vector<double>& z = cache.pre[layer - 1];
            for (std::size_t i = 0; i < down.size(); ++i)
                if (z[i] <= 0.0) down[i] = 0.0;
            std::swap(delta, down);
        }
    }

    // dL/d(input) only, skipping parameter gradients.
    void input_gradient(const ForwardCache& cache, std::span<const double> output_grad,
                        std::vector<double>& input_grad) const {
        if (cache.pre.size() != shapes_.size() || cache.post.size() != shapes_.size())
            throw std::invalid_argument("stale or incomplete forward cache");
        std::vector<double> delta = head_backward(cache, output_grad);
        std::vector<double> down;
        for (std::size_t layer = shapes_.size(); layer-- > 0;) {
            const LayerShape& s = shapes_[layer];
            down.assign(static_cast<std::size_t>(s.in), 0.0);
            const double* w = w_[layer].data();
            for (int o = 0; o < s.out; ++o) {
                double d = delta[static_cast<std::size_t>(o)];
                const double* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(s.in);
                for (int i = 0; i < s.in; ++i) down[static_cast<std::size_t>(i)] += d * row[i];
            }
            if (layer == 0) {
                input_grad = down;
                return;
            }
            const std::vector<double>& z = cache.pre[layer - 1];
            for (std::size_t i = 0; i < down.size(); ++i)
                if (z[i] <= 0.0) down[i] = 0.0;
            std::swap(delta, down);
        }
    }

    void zero_like(MlpGradients& g) const {
        if (g.w.size() != shapes_.size()) {
            g.w.resize(shapes_.size());
            g.b.resize(shapes_.size());
        }
        for (std::size_t l = 0; l < shapes_.size(); ++l) {
            g.w[l].assign(w_[l].size(), 0.0);
            g.b[l].assign(b_[l].size(), 0.0);
        }
    }

    // Flat parameter view (layer by layer, weights then biases).
    std::size_t param_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < w_.size(); ++l) n += w_[l].size() + b_[l].size();
        return n;
    }

    double get_param(std::size_t index) const { return *param_ptr(index); }
    void set_param(std::size_t index, double value) { *const_cast<double*>(param_ptr(index)) = value; }

    std::vector<std::vector<double>>& weights() { return w_; }
    std::vector<std::vector<double>>& biases() { return b_; }
    const std::vector<std::vector<double>>& weights() const { return w_; }
    const std::vector<std::vector<double>>& biases() const { return b_; }

    bool finite() const {
        for (std::size_t l = 0; l < w_.size(); ++l) {
            for (double x : w_[l])
                if (!std::isfinite(x)) return false;
            for (double x : b_[l])
                if (!std::isfinite(x)) return false;
        }
        return true;
    }

private:
    void apply_head(std::vector<double>& z) const {
        switch (head_) {
            case OutputHead::Linear:
                break;
            case OutputHead::Tanh:
                for (double& x : z) x = std::tanh(x);
                break;
            case OutputHead::Gaussian: {
                std::size_t half = z.size() / 2;
                for (std::size_t i = half; i < z.size(); ++i) {
                    if (z[i] < kLogStdMin) z[i] = kLogStdMin;
                    else if (z[i] > kLogStdMax) z[i] = kLogStdMax;
                }
                break;
            }
        }
    }

    std::vector<double> head_backward(const ForwardCache& cache,
                                      std::span<const double> output_grad) const {
        std::vector<double> delta(output_grad.begin(), output_grad.end());
        const std::vector<double>& pre = cache.pre.back();
        const std::vector<double>& out = cache.post.back();
        switch (head_) {
            case OutputHead::Linear:
                break;
            case OutputHead::Tanh:
                for (std::size_t i = 0; i < delta.size(); ++i)
                    delta[i] *= 1.0 - out[i] * out[i];
                break;
            case OutputHead::Gaussian: {
                std::size_t half = delta.size() / 2;
                for (std::size_t i = half; i < delta.size(); ++i)
                    if (pre[i] < kLogStdMin || pre[i] > kLogStdMax) delta[i] = 0.0;
                break;
            }
        }
        return delta;
    }

    const double* param_ptr(std::size_t index) const {
        for (std::size_t l = 0; l < w_.size(); ++l) {
            if (index < w_[l].size()) return &w_[l][index];
            index -= w_[l].size();
            if (index < b_[l].size()) return &b_[l][index];
            index -= b_[l].size();
        }
        throw std::out_of_range("parameter index out of range");
    }

    OutputHead head_;
    std::vector<LayerShape> shapes_;
    std::vector<std::vector<double>> w_;  // row-major [out][in]
    std::vector<std::vector<double>> b_;
};

struct AdamState {
    explicit AdamState(const Mlp& net, double learning_rate)
        : lr(learning_rate) {
        for (std::size_t l = 0; l < net.weights().size(); ++l) {
            mw.emplace_back(net.weights()[l].size(), 0.0);
            vw.emplace_back(net.weights()[l].size(), 0.0);
            mb.emplace_back(net.biases()[l].size(), 0.0);
            vb.emplace_back(net.biases()[l].size(), 0.0);
        }
    }

    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> mw, vw, mb, vb;
};

// Bias-corrected Adam update. A non-finite gradient is an error and leaves
// the parameters untouched.
inline void adam_step(Mlp& net, AdamState& state, const MlpGradients& grads) {
    for (std::size_t l = 0; l < grads.w.size(); ++l) {
        for (double g : grads.w[l])
            if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient");
        for (double g : grads.b[l])
            if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient");
    }
    ++state.step;
    double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    auto update = [&](std::vector<double>& p, std::vector<double>& m, std::vector<double>& v,
                      const std::vector<double>& g) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            double mhat = m[i] / c1;
            double vhat = v[i] / c2;
            p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    };
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        update(net.weights()[l], state.mw[l], state.vw[l], grads.w[l]);
        update(net.biases()[l], state.mb[l], state.vb[l], grads.b[l]);
    }
}

// target <- (1 - tau) * target + tau * online
inline void soft_update(Mlp& target, const Mlp& online, double tau) {
    for (std::size_t l = 0; l < target.weights().size(); ++l) {
        for (std::size_t i = 0; i < target.weights()[l].size(); ++i)
            target.weights()[l][i] =
                (1.0 - tau) * target.weights()[l][i] + tau * online.weights()[l][i];
        for (std::size_t i = 0; i < target.biases()[l].size(); ++i)
            target.biases()[l][i] =
                (1.0 - tau) * target.biases()[l][i] + tau * online.biases()[l][i];
    }
}

struct GradCheckReport {
    double max_relative_error = 0.0;
    int checked = 0;
    int skipped_nonsmooth = 0;
    bool pass = false;
};

// A loss over the net output: returns the scalar and fills d(loss)/d(output).
using LossFn = std::function<double(std::span<const double> output, std::vector<double>* grad)>;

// Compares analytic gradients against central finite differences on randomly
// sampled parameters. Samples whose perturbation flips a rectifier or clamp
// region are skipped: the finite difference is not valid across a kink.
inline GradCheckReport gradient_check(Mlp& net, std::span<const double> input, const LossFn& loss,
                                      std::mt19937_64& rng, int samples = 100,
                                      double tolerance = 1e-4, double h = 1e-5) {
    ForwardCache cache;
    std::vector<double> out = net.forward(input, &cache);
    std::vector<double> dout;
    loss(out, &dout);
    MlpGradients analytic = net.backward(cache, dout);

    // Flatten analytic gradients in parameter order.
    std::vector<double> flat;
    for (std::size_t l = 0; l < analytic.w.size(); ++l) {
        flat.insert(flat.end(), analytic.w[l].begin(), analytic.w[l].end());
        flat.insert(flat.end(), analytic.b[l].begin(), analytic.b[l].end());
    }

    auto region_signature = [&](const ForwardCache& c) {
        std::vector<std::uint8_t> sig;
        for (std::size_t layer = 0; layer + 1 < c.pre.size(); ++layer)
            for (double z : c.pre[layer]) sig.push_back(z > 0.0 ? 1 : 0);
        if (net.head() == OutputHead::Gaussian) {
            const std::vector<double>& z = c.pre.back();
            for (std::size_t i = z.size() / 2; i < z.size(); ++i)
                sig.push_back(z[i] < kLogStdMin ? 0 : (z[i] > kLogStdMax ? 2 : 1));
        }
        return sig;
    };

    GradCheckReport report;
    std::uniform_int_distribution<std::size_t> pick(0, net.param_count() - 1);
    int attempts = 0;
    while (report.checked < samples && attempts < samples * 20) {
        ++attempts;
        std::size_t idx = pick(rng);
        double original = net.get_param(idx);

        ForwardCache cp, cm;
        net.set_param(idx, original + h);
        double lp = loss(net.forward(input, &cp), nullptr);
        net.set_param(idx, original - h);
        double lm = loss(net.forward(input, &cm), nullptr);
        net.set_param(idx, original);

        if (region_signature(cp) != region_signature(cm)) {
            ++report.skipped_nonsmooth;
            continue;
        }
        double fd = (lp - lm) / (2.0 * h);
        double denom = std::max(std::abs(flat[idx]) + std::abs(fd), 1e-5);
        double rel = std::abs(flat[idx] - fd) / denom;
        report.max_relative_error = std::max(report.max_relative_error, rel);
        ++report.checked;
    }
    report.pass = report.checked > 0 && report.max_relative_error < tolerance;
    return report;
}

}  // namespace fatesim
