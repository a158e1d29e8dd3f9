#ifndef CORENET_TENSORNET_LAYERS_HPP
#define CORENET_TENSORNET_LAYERS_HPP

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "corenet/tensornet/tensor.hpp"

namespace corenet::tensornet {

// Channel axis is dim 1 for both [N,C] and [N,C,H,W] tensors.
inline size_t channels_of(const Tensor& x) {
    if (x.rank() < 2) throw ShapeMismatch("expected a batched tensor, got " + x.shape_str());
    return x.shape[1];
}

inline size_t spatial_of(const Tensor& x) {
    size_t s = 1;
    for (size_t d = 2; d < x.rank(); ++d) s *= x.shape[d];
    return s;
}

// y = x for x >= 0 (the positive branch also covers x == 0), slope * x
// otherwise, with one slope per channel.
inline Tensor prelu_apply(const Tensor& x, const std::vector<double>& slopes) {
    const size_t channels = channels_of(x);
    if (slopes.size() != channels)
        throw ShapeMismatch("prelu: " + std::to_string(slopes.size()) + " slopes for " +
                            std::to_string(channels) + " channels");
    const size_t batch = x.shape[0];
    const size_t spatial = spatial_of(x);
    Tensor y = Tensor::zeros_like(x);
    for (size_t n = 0; n < batch; ++n)
        for (size_t c = 0; c < channels; ++c) {
            const double slope = slopes[c];
            const size_t base = (n * channels + c) * spatial;
            for (size_t s = 0; s < spatial; ++s) {
                const double v = x.data[base + s];
                y.data[base + s] = v >= 0.0 ? v : slope * v;
            }
        }
    return y;
}

// Returns (dx, dslopes); dslope[c] accumulates upstream * min(0, x) over
// every position in channel c.
inline std::pair<Tensor, std::vector<double>> prelu_backward(const Tensor& x,
                                                             const std::vector<double>& slopes,
                                                             const Tensor& upstream) {
    const size_t channels = channels_of(x);
    if (slopes.size() != channels)
        throw ShapeMismatch("prelu backward: slope count mismatch");
    check_same_shape(x, upstream, "prelu backward");
    const size_t batch = x.shape[0];
    const size_t spatial = spatial_of(x);
    Tensor dx = Tensor::zeros_like(x);
    std::vector<double> dslopes(channels, 0.0);
    for (size_t n = 0; n < batch; ++n)
        for (size_t c = 0; c < channels; ++c) {
            const size_t base = (n * channels + c) * spatial;
            for (size_t s = 0; s < spatial; ++s) {
                const double v = x.data[base + s];
                const double g = upstream.data[base + s];
                if (v >= 0.0) {
                    dx.data[base + s] = g;
                } else {
                    dx.data[base + s] = g * slopes[c];
                    dslopes[c] += g * v;
                }
            }
        }
    return {std::move(dx), std::move(dslopes)};
}

class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<Parameter*> parameters() { return {}; }
};

class Dense : public Layer {
public:
    Dense(std::string name, size_t in_features, size_t out_features)
        : in_(in_features),
          out_(out_features),
          weight_(name + ".W", Tensor({out_features, in_features})),
          bias_(name + ".b", Tensor({out_features})) {}

    std::string kind() const override { return "dense"; }
    size_t in_features() const { return in_; }
    size_t out_features() const { return out_; }
    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }

    Tensor forward(const Tensor& x, bool) override {
        if (x.rank() != 2 || x.shape[1] != in_)
            throw ShapeMismatch("dense expects [N," + std::to_string(in_) + "], got " +
                                x.shape_str());
        last_x_ = x;
        const size_t batch = x.shape[0];
        Tensor y({batch, out_});
        for (size_t n = 0; n < batch; ++n)
            for (size_t o = 0; o < out_; ++o) {
                double acc = bias_.value.data[o];
                const double* w = &weight_.value.data[o * in_];
                const double* xi = &x.data[n * in_];
                for (size_t i = 0; i < in_; ++i) acc += w[i] * xi[i];
                y.data[n * out_ + o] = acc;
            }
        return y;
    }

    Tensor backward(const Tensor& g) override {
        const size_t batch = last_x_.shape[0];
        if (g.rank() != 2 || g.shape[0] != batch || g.shape[1] != out_)
            throw ShapeMismatch("dense backward shape");
        Tensor dx({batch, in_});
        for (size_t n = 0; n < batch; ++n)
            for (size_t o = 0; o < out_; ++o) {
                const double go = g.data[n * out_ + o];
                bias_.grad.data[o] += go;
                const double* xi = &last_x_.data[n * in_];
                double* wg = &weight_.grad.data[o * in_];
                const double* w = &weight_.value.data[o * in_];
                double* dxn = &dx.data[n * in_];
                for (size_t i = 0; i < in_; ++i) {
                    wg[i] += go * xi[i];
                    dxn[i] += go * w[i];
                }
            }
        return dx;
    }

    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

private:
    size_t in_, out_;
    Parameter weight_, bias_;
    Tensor last_x_;
};

class Conv2d : public Layer {
public:
    Conv2d(std::string name, size_t in_ch, size_t out_ch, size_t kernel, size_t stride,
           size_t padding)
        : in_(in_ch),
          out_(out_ch),
          k_(kernel),
          stride_(stride),
          pad_(padding),
          weight_(name + ".W", Tensor({out_ch, in_ch, kernel, kernel})),
          bias_(name + ".b", Tensor({out_ch})) {
        if (stride != 1 && stride != 2) throw InvalidSpec("conv stride must be 1 or 2");
    }

    std::string kind() const override { return "conv2d"; }
    size_t in_channels() const { return in_; }
    size_t out_channels() const { return out_; }
    Parameter& weight() { return weight_; }
    Parameter& bias() { return bias_; }

    Tensor forward(const Tensor& x, bool) override {
        if (x.rank() != 4 || x.shape[1] != in_)
            throw ShapeMismatch("conv expects [N," + std::to_string(in_) + ",H,W], got " +
                                x.shape_str());
        last_x_ = x;
        const size_t batch = x.shape[0], h = x.shape[2], w = x.shape[3];
        if (h + 2 * pad_ < k_ || w + 2 * pad_ < k_)
            throw ShapeMismatch("conv kernel larger than padded input");
        const size_t oh = (h + 2 * pad_ - k_) / stride_ + 1;
        const size_t ow = (w + 2 * pad_ - k_) / stride_ + 1;
        Tensor y({batch, out_, oh, ow});
        for (size_t n = 0; n < batch; ++n)
            for (size_t o = 0; o < out_; ++o)
                for (size_t yh = 0; yh < oh; ++yh)
                    for (size_t yw = 0; yw < ow; ++yw) {
                        double acc = bias_.value.data[o];
                        for (size_t i = 0; i < in_; ++i)
                            for (size_t kh = 0; kh < k_; ++kh)
                                for (size_t kw = 0; kw < k_; ++kw) {
                                    const long ih = static_cast<long>(yh * stride_ + kh) -
                                                    static_cast<long>(pad_);
                                    const long iw = static_cast<long>(yw * stride_ + kw) -
                                                    static_cast<long>(pad_);
                                    if (ih < 0 || iw < 0 || ih >= static_cast<long>(h) ||
                                        iw >= static_cast<long>(w))
                                        continue;
                                    acc += x.data[((n * in_ + i) * h + ih) * w + iw] *
                                           weight_.value.data[((o * in_ + i) * k_ + kh) * k_ + kw];
                                }
                        y.data[((n * out_ + o) * oh + yh) * ow + yw] = acc;
                    }
        return y;
    }

    Tensor backward(const Tensor& g) override {
        const size_t batch = last_x_.shape[0], h = last_x_.shape[2], w = last_x_.shape[3];
        const size_t oh = g.shape[2], ow = g.shape[3];
        Tensor dx = Tensor::zeros_like(last_x_);
        for (size_t n = 0; n < batch; ++n)
            for (size_t o = 0; o < out_; ++o)
                for (size_t yh = 0; yh < oh; ++yh)
                    for (size_t yw = 0; yw < ow; ++yw) {
                        const double go = g.data[((n * out_ + o) * oh + yh) * ow + yw];
                        bias_.grad.data[o] += go;
                        for (size_t i = 0; i < in_; ++i)
                            for (size_t kh = 0; kh < k_; ++kh)
                                for (size_t kw = 0; kw < k_; ++kw) {
                                    const long ih = static_cast<long>(yh * stride_ + kh) -
                                                    static_cast<long>(pad_);
                                    const long iw = static_cast<long>(yw * stride_ + kw) -
                                                    static_cast<long>(pad_);
                                    if (ih < 0 || iw < 0 || ih >= static_cast<long>(h) ||
                                        iw >= static_cast<long>(w))
                                        continue;
                                    const size_t xi = ((n * in_ + i) * h + ih) * w + iw;
                                    const size_t wi = ((o * in_ + i) * k_ + kh) * k_ + kw;
                                    weight_.grad.data[wi] += go * last_x_.data[xi];
                                    dx.data[xi] += go * weight_.value.data[wi];
                                }
                    }
        return dx;
    }

    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

private:
    size_t in_, out_, k_, stride_, pad_;
    Parameter weight_, bias_;
    Tensor last_x_;
};

class Relu : public Layer {
public:
    explicit Relu(size_t channels) : channels_(channels) {}

    std::string kind() const override { return "relu"; }
    size_t channels() const { return channels_; }
    const Tensor& last_input() const { return last_x_; }

    Tensor forward(const Tensor& x, bool) override {
        if (channels_of(x) != channels_) throw ShapeMismatch("relu channel mismatch");
        last_x_ = x;
        Tensor y = x;
        for (double& v : y.data) v = v >= 0.0 ? v : 0.0;
        return y;
    }

    Tensor backward(const Tensor& g) override {
        Tensor dx = g;
        for (size_t i = 0; i < dx.data.size(); ++i)
            if (last_x_.data[i] < 0.0) dx.data[i] = 0.0;
        return dx;
    }

private:
    size_t channels_;
    Tensor last_x_;
};

// Channel-wise PReLU. Channels flagged inactive have slope exactly 1 (an
// identity map) and their slope entries are element-frozen.
class ChannelPRelu : public Layer {
public:
    ChannelPRelu(std::string name, size_t channels, double initial_slope)
        : slopes_(name + ".slope", Tensor({channels})), active_(channels, 1) {
        slopes_.decay_exempt = true;
        slopes_.value.fill(initial_slope);
    }

    std::string kind() const override { return "prelu"; }
    size_t channels() const { return active_.size(); }
    Parameter& slopes() { return slopes_; }
    const Parameter& slopes() const { return slopes_; }
    const std::vector<uint8_t>& channel_active() const { return active_; }
    bool channel_is_active(size_t c) const { return active_.at(c) != 0; }
    const Tensor& last_input() const { return last_x_; }

    void deactivate_channel(size_t c) {
        slopes_.value.data.at(c) = 1.0;
        slopes_.grad.data[c] = 0.0;
        slopes_.freeze_element(c);
        active_.at(c) = 0;
    }

    // Restore flags from a checkpointed mask; slope values must already
    // honor the inactive => slope 1 invariant.
    void set_active_flags(const std::vector<uint8_t>& flags) {
        if (flags.size() != active_.size()) throw ShapeMismatch("prelu mask width mismatch");
        for (size_t c = 0; c < flags.size(); ++c) {
            if (!flags[c] && slopes_.value.data[c] != 1.0)
                throw InvalidSpec("inactive channel with slope != 1 in checkpoint");
        }
        active_ = flags;
    }

    Tensor forward(const Tensor& x, bool) override {
        last_x_ = x;
        return prelu_apply(x, std::vector<double>(slopes_.value.data.begin(),
                                                  slopes_.value.data.end()));
    }

    Tensor backward(const Tensor& g) override {
        auto [dx, dslopes] = prelu_backward(
            last_x_, std::vector<double>(slopes_.value.data.begin(), slopes_.value.data.end()),
            g);
        for (size_t c = 0; c < dslopes.size(); ++c)
            if (!slopes_.element_frozen(c)) slopes_.grad.data[c] += dslopes[c];
        return dx;
    }

    std::vector<Parameter*> parameters() override { return {&slopes_}; }

private:
    Parameter slopes_;
    std::vector<uint8_t> active_;
    Tensor last_x_;
};

class BatchNorm : public Layer {
public:
    BatchNorm(std::string name, size_t channels, double eps = 1e-5, double momentum = 0.1)
        : name_(std::move(name)),
          channels_(channels),
          eps_(eps),
          momentum_(momentum),
          gamma_(name_ + ".gamma", Tensor({channels})),
          beta_(name_ + ".beta", Tensor({channels})),
          running_mean_({channels}),
          running_var_({channels}) {
        gamma_.value.fill(1.0);
        running_var_.fill(1.0);
    }

    std::string kind() const override { return "batchnorm"; }
    const std::string& name() const { return name_; }
    size_t channels() const { return channels_; }
    Parameter& gamma() { return gamma_; }
    Parameter& beta() { return beta_; }
    Tensor& running_mean() { return running_mean_; }
    Tensor& running_var() { return running_var_; }

    Tensor forward(const Tensor& x, bool training) override {
        if (channels_of(x) != channels_) throw ShapeMismatch("batchnorm channel mismatch");
        training_ = training;
        const size_t batch = x.shape[0];
        const size_t spatial = spatial_of(x);
        const size_t m = batch * spatial;

        if (training) {
            if (m < 2) throw ShapeMismatch("batchnorm needs reduction size >= 2 in training");
            mean_.assign(channels_, 0.0);
            var_.assign(channels_, 0.0);
            for (size_t n = 0; n < batch; ++n)
                for (size_t c = 0; c < channels_; ++c) {
                    const size_t base = (n * channels_ + c) * spatial;
                    for (size_t s = 0; s < spatial; ++s) mean_[c] += x.data[base + s];
                }
            for (auto& v : mean_) v /= static_cast<double>(m);
            for (size_t n = 0; n < batch; ++n)
                for (size_t c = 0; c < channels_; ++c) {
                    const size_t base = (n * channels_ + c) * spatial;
                    for (size_t s = 0; s < spatial; ++s) {
                        const double d = x.data[base + s] - mean_[c];
                        var_[c] += d * d;
                    }
                }
            for (auto& v : var_) v /= static_cast<double>(m);
            for (size_t c = 0; c < channels_; ++c) {
                const double unbiased = var_[c] * static_cast<double>(m) /
                                        static_cast<double>(m - 1);
                running_mean_.data[c] =
                    (1.0 - momentum_) * running_mean_.data[c] + momentum_ * mean_[c];
                running_var_.data[c] =
                    (1.0 - momentum_) * running_var_.data[c] + momentum_ * unbiased;
            }
        } else {
            mean_.assign(running_mean_.data.begin(), running_mean_.data.end());
            var_.assign(running_var_.data.begin(), running_var_.data.end());
        }

        inv_std_.resize(channels_);
        for (size_t c = 0; c < channels_; ++c) inv_std_[c] = 1.0 / std::sqrt(var_[c] + eps_);

        xhat_ = Tensor::zeros_like(x);
        Tensor y = Tensor::zeros_like(x);
        for (size_t n = 0; n < batch; ++n)
            for (size_t c = 0; c < channels_; ++c) {
                const size_t base = (n * channels_ + c) * spatial;
                for (size_t s = 0; s < spatial; ++s) {
                    const double xh = (x.data[base + s] - mean_[c]) * inv_std_[c];
                    xhat_.data[base + s] = xh;
                    y.data[base + s] = gamma_.value.data[c] * xh + beta_.value.data[c];
                }
            }
        return y;
    }

    Tensor backward(const Tensor& g) override {
        const size_t batch = g.shape[0];
        const size_t spatial = spatial_of(g);
        const size_t m = batch * spatial;
        Tensor dx = Tensor::zeros_like(g);

        std::vector<double> sum_g(channels_, 0.0), sum_gx(channels_, 0.0);
        for (size_t n = 0; n < batch; ++n)
            for (size_t c = 0; c < channels_; ++c) {
                const size_t base = (n * channels_ + c) * spatial;
                for (size_t s = 0; s < spatial; ++s) {
                    sum_g[c] += g.data[base + s];
                    sum_gx[c] += g.data[base + s] * xhat_.data[base + s];
                }
            }
        for (size_t c = 0; c < channels_; ++c) {
            if (!gamma_.frozen) gamma_.grad.data[c] += sum_gx[c];
            if (!beta_.frozen) beta_.grad.data[c] += sum_g[c];
        }

        if (training_) {
            for (size_t n = 0; n < batch; ++n)
                for (size_t c = 0; c < channels_; ++c) {
                    const size_t base = (n * channels_ + c) * spatial;
                    const double scale = gamma_.value.data[c] * inv_std_[c];
                    const double mg = sum_g[c] / static_cast<double>(m);
                    const double mgx = sum_gx[c] / static_cast<double>(m);
                    for (size_t s = 0; s < spatial; ++s)
                        dx.data[base + s] = scale * (g.data[base + s] - mg -
                                                     xhat_.data[base + s] * mgx);
                }
        } else {
            // eval mode is a fixed affine map per channel
            for (size_t n = 0; n < batch; ++n)
                for (size_t c = 0; c < channels_; ++c) {
                    const size_t base = (n * channels_ + c) * spatial;
                    const double scale = gamma_.value.data[c] * inv_std_[c];
                    for (size_t s = 0; s < spatial; ++s) dx.data[base + s] = scale * g.data[base + s];
                }
        }
        return dx;
    }

    std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }

private:
    std::string name_;
    size_t channels_;
    double eps_, momentum_;
    Parameter gamma_, beta_;
    Tensor running_mean_, running_var_;
    std::vector<double> mean_, var_, inv_std_;
    Tensor xhat_;
    bool training_ = true;
};

// Global average pool over the spatial dims: [N,C,H,W] -> [N,C].
class AvgPool : public Layer {
public:
    std::string kind() const override { return "avgpool"; }

    Tensor forward(const Tensor& x, bool) override {
        if (x.rank() != 4) throw ShapeMismatch("avgpool expects [N,C,H,W]");
        in_shape_ = x.shape;
        const size_t batch = x.shape[0], ch = x.shape[1], spatial = x.shape[2] * x.shape[3];
        Tensor y({batch, ch});
        for (size_t n = 0; n < batch; ++n)
            for (size_t c = 0; c < ch; ++c) {
                double acc = 0.0;
                const size_t base = (n * ch + c) * spatial;
                for (size_t s = 0; s < spatial; ++s) acc += x.data[base + s];
                y.data[n * ch + c] = acc / static_cast<double>(spatial);
            }
        return y;
    }

    Tensor backward(const Tensor& g) override {
        const size_t batch = in_shape_[0], ch = in_shape_[1], spatial = in_shape_[2] * in_shape_[3];
        Tensor dx(in_shape_);
        for (size_t n = 0; n < batch; ++n)
            for (size_t c = 0; c < ch; ++c) {
                const double v = g.data[n * ch + c] / static_cast<double>(spatial);
                const size_t base = (n * ch + c) * spatial;
                for (size_t s = 0; s < spatial; ++s) dx.data[base + s] = v;
            }
        return dx;
    }

private:
    std::vector<size_t> in_shape_;
};

class Flatten : public Layer {
public:
    std::string kind() const override { return "flatten"; }

    Tensor forward(const Tensor& x, bool) override {
        in_shape_ = x.shape;
        return x.reshaped({x.shape[0], x.numel() / x.shape[0]});
    }

    Tensor backward(const Tensor& g) override { return g.reshaped(in_shape_); }

private:
    std::vector<size_t> in_shape_;
};

// Marker pair for a residual block; the Network routes the skip tensor.
// The End optionally projects the skip input (needed when the main path
// changes shape).
class ResidualBegin : public Layer {
public:
    std::string kind() const override { return "residual_begin"; }
    Tensor forward(const Tensor& x, bool) override { return x; }
    Tensor backward(const Tensor& g) override { return g; }
};

class ResidualEnd : public Layer {
public:
    ResidualEnd() = default;
    explicit ResidualEnd(std::unique_ptr<Dense> projection) : projection_(std::move(projection)) {}

    std::string kind() const override { return "residual_end"; }
    Dense* projection() { return projection_.get(); }
    const Dense* projection() const { return projection_.get(); }

    Tensor combine(const Tensor& main, const Tensor& skip, bool training) {
        Tensor shortcut = projection_ ? projection_->forward(skip, training) : skip;
        check_same_shape(main, shortcut, "residual add");
        Tensor y = main;
        for (size_t i = 0; i < y.data.size(); ++i) y.data[i] += shortcut.data[i];
        return y;
    }

    // Gradient toward the skip input; main-path gradient is g unchanged.
    Tensor skip_grad(const Tensor& g) {
        return projection_ ? projection_->backward(g) : g;
    }

    Tensor forward(const Tensor& x, bool) override { return x; }
    Tensor backward(const Tensor& g) override { return g; }

    std::vector<Parameter*> parameters() override {
        return projection_ ? projection_->parameters() : std::vector<Parameter*>{};
    }

private:
    std::unique_ptr<Dense> projection_;
};

}  // namespace corenet::tensornet

#endif  // CORENET_TENSORNET_LAYERS_HPP
