#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "coopdqn/error.hpp"
#include "coopdqn/game.hpp"
#include "coopdqn/rng.hpp"

namespace coopdqn {

inline constexpr std::size_t kNumActions = 2;

using QPair = std::array<double, kNumActions>;

/// Weights of the value network x -> relu(W1 x + b1) -> W2 h + b2, stored flat
/// in the order W1 (row-major, hidden x input), b1, W2 (row-major, 2 x hidden), b2.
/// Gradients use the same type.
class QNetworkParams {
public:
    QNetworkParams() = default;
    QNetworkParams(std::size_t input_dim, std::size_t hidden_dim)
        : input_(input_dim), hidden_(hidden_dim), data_(count_for(input_dim, hidden_dim), 0.0) {
        detail::require(input_dim > 0 && hidden_dim > 0, "network dimensions must be positive");
    }

    static constexpr std::size_t count_for(std::size_t in, std::size_t hid) noexcept {
        return hid * in + hid + kNumActions * hid + kNumActions;
    }

    std::size_t input_dim() const noexcept { return input_; }
    std::size_t hidden_dim() const noexcept { return hidden_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }

    double& w1(std::size_t h, std::size_t i) noexcept { return data_[h * input_ + i]; }
    double w1(std::size_t h, std::size_t i) const noexcept { return data_[h * input_ + i]; }
    double& b1(std::size_t h) noexcept { return data_[b1_off() + h]; }
    double b1(std::size_t h) const noexcept { return data_[b1_off() + h]; }
    double& w2(std::size_t a, std::size_t h) noexcept { return data_[w2_off() + a * hidden_ + h]; }
    double w2(std::size_t a, std::size_t h) const noexcept { return data_[w2_off() + a * hidden_ + h]; }
    double& b2(std::size_t a) noexcept { return data_[b2_off() + a]; }
    double b2(std::size_t a) const noexcept { return data_[b2_off() + a]; }

    bool same_shape(const QNetworkParams& o) const noexcept { return input_ == o.input_ && hidden_ == o.hidden_; }

    void set_zero() noexcept { std::fill(data_.begin(), data_.end(), 0.0); }

    friend bool operator==(const QNetworkParams&, const QNetworkParams&) = default;

private:
    std::size_t b1_off() const noexcept { return hidden_ * input_; }
    std::size_t w2_off() const noexcept { return b1_off() + hidden_; }
    std::size_t b2_off() const noexcept { return w2_off() + kNumActions * hidden_; }

    std::size_t input_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> data_;
};

/// Fan-in uniform initialization: weights in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
inline QNetworkParams init_params(std::size_t input_dim, std::size_t hidden_dim, std::uint64_t seed) {
    QNetworkParams p(input_dim, hidden_dim);
    Rng rng(seed);
    const double b_in = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double b_hid = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (std::size_t h = 0; h < hidden_dim; ++h)
        for (std::size_t i = 0; i < input_dim; ++i) p.w1(h, i) = rng.uniform(-b_in, b_in);
    for (std::size_t a = 0; a < kNumActions; ++a)
        for (std::size_t h = 0; h < hidden_dim; ++h) p.w2(a, h) = rng.uniform(-b_hid, b_hid);
    return p;
}

/// Forward pass writing the post-ReLU hidden layer into `hidden` (size hidden_dim).
inline QPair forward_into(const QNetworkParams& p, std::span<const double> x, std::span<double> hidden) {
    if (x.size() != p.input_dim()) throw ConfigError("forward: input dimension mismatch");
    if (hidden.size() != p.hidden_dim()) throw ConfigError("forward: hidden buffer size mismatch");
    const std::size_t in = p.input_dim();
    const double* w1 = p.flat().data();
    for (std::size_t h = 0; h < p.hidden_dim(); ++h) {
        double z = p.b1(h);
        const double* row = w1 + h * in;
        for (std::size_t i = 0; i < in; ++i) z += row[i] * x[i];
        hidden[h] = z > 0.0 ? z : 0.0;
    }
    QPair q{};
    for (std::size_t a = 0; a < kNumActions; ++a) {
        double z = p.b2(a);
        for (std::size_t h = 0; h < p.hidden_dim(); ++h) z += p.w2(a, h) * hidden[h];
        q[a] = z;
    }
    return q;
}

struct ForwardResult {
    QPair q;
    std::vector<double> hidden;
};

inline ForwardResult forward(const QNetworkParams& p, std::span<const double> x) {
    ForwardResult r{{}, std::vector<double>(p.hidden_dim())};
    r.q = forward_into(p, x, r.hidden);
    return r;
}

/// Forward pass that reuses an internal scratch buffer.
class QEvaluator {
public:
    explicit QEvaluator(const QNetworkParams& p) : p_(&p), hidden_(p.hidden_dim()) {}
    QPair operator()(std::span<const double> x) { return forward_into(*p_, x, hidden_); }
    QPair operator()(const AgentState& s) { return (*this)(s.view()); }
    std::span<const double> hidden() const noexcept { return hidden_; }
    const QNetworkParams& params() const noexcept { return *p_; }

private:
    const QNetworkParams* p_;
    std::vector<double> hidden_;
};

enum class LossKind { Huber, MSE };

struct LossConfig {
    LossKind kind = LossKind::Huber;
    double delta = 1.0;
};

inline std::string to_string(LossKind k) { return k == LossKind::Huber ? "huber" : "mse"; }

inline LossKind loss_kind_from_string(const std::string& s) {
    if (s == "huber" || s == "smooth_l1") return LossKind::Huber;
    if (s == "mse") return LossKind::MSE;
    throw ConfigError("unknown loss '" + s + "'");
}

/// Elementwise loss of residual r = prediction - target.
inline double elementwise_loss(double r, const LossConfig& cfg) noexcept {
    if (cfg.kind == LossKind::MSE) return r * r;
    const double a = std::abs(r);
    return a <= cfg.delta ? 0.5 * r * r : cfg.delta * (a - 0.5 * cfg.delta);
}

/// d(elementwise_loss)/dr.
inline double elementwise_loss_grad(double r, const LossConfig& cfg) noexcept {
    if (cfg.kind == LossKind::MSE) return 2.0 * r;
    return std::clamp(r, -cfg.delta, cfg.delta);
}

struct Sample {
    std::span<const double> x;
    Action action;
    double target;
};

/// Mean loss over the batch on the taken action's output, and its exact gradient
/// written into `grads` (same shape as p). The untaken head receives no gradient.
inline double loss_and_grad_into(const QNetworkParams& p, std::span<const Sample> batch, const LossConfig& cfg,
                                 QNetworkParams& grads) {
    if (batch.empty()) throw ConfigError("loss_and_grad: empty batch");
    detail::require(cfg.delta > 0.0, "loss delta must be positive");
    if (!grads.same_shape(p)) grads = QNetworkParams(p.input_dim(), p.hidden_dim());
    grads.set_zero();
    const std::size_t in = p.input_dim(), hid = p.hidden_dim();
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    std::vector<double> hidden(hid);
    double total = 0.0;
    for (const auto& s : batch) {
        if (!std::isfinite(s.target)) throw NumericFault("loss_and_grad: non-finite target");
        const QPair q = forward_into(p, s.x, hidden);
        const auto a = static_cast<std::size_t>(encode(s.action));
        const double r = q[a] - s.target;
        total += elementwise_loss(r, cfg);
        const double g = elementwise_loss_grad(r, cfg) * inv_n;
        if (g == 0.0) continue;
        grads.b2(a) += g;
        for (std::size_t h = 0; h < hid; ++h) {
            grads.w2(a, h) += g * hidden[h];
            if (hidden[h] <= 0.0) continue;
            const double dz = g * p.w2(a, h);
            grads.b1(h) += dz;
            for (std::size_t i = 0; i < in; ++i) grads.w1(h, i) += dz * s.x[i];
        }
    }
    return total * inv_n;
}

struct LossAndGrad {
    double loss;
    QNetworkParams grads;
};

inline LossAndGrad loss_and_grad(const QNetworkParams& p, std::span<const Sample> batch, const LossConfig& cfg) {
    LossAndGrad out{0.0, QNetworkParams(p.input_dim(), p.hidden_dim())};
    out.loss = loss_and_grad_into(p, batch, cfg, out.grads);
    return out;
}

inline double global_norm(const QNetworkParams& g) noexcept {
    double s = 0.0;
    for (double v : g.flat()) s += v * v;
    return std::sqrt(s);
}

/// Rescales in place so the l2 norm is at most max_norm. Returns the norm before clipping.
inline double clip_global_norm_inplace(QNetworkParams& g, double max_norm = 0.5) noexcept {
    const double norm = global_norm(g);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& v : g.flat()) v *= scale;
    }
    return norm;
}

inline QNetworkParams clip_global_norm(QNetworkParams g, double max_norm = 0.5) {
    clip_global_norm_inplace(g, max_norm);
    return g;
}

enum class OptimizerKind { AdamW, Adam, RMSprop };

inline std::string to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::AdamW: return "adamw";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::RMSprop: return "rmsprop";
    }
    return "?";
}

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "adamw") return OptimizerKind::AdamW;
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "rmsprop") return OptimizerKind::RMSprop;
    throw ConfigError("unknown optimizer '" + s + "'");
}

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::AdamW;
    double lr = 1e-4;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double rms_alpha = 0.99;
};

struct OptimizerState {
    OptimizerConfig config;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t step_count = 0;

    OptimizerState() = default;
    OptimizerState(const OptimizerConfig& cfg, std::size_t n_params)
        : config(cfg), first_moment(n_params, 0.0), second_moment(n_params, 0.0) {}
};

/// One update of `params` in place.
///
/// AdamW: p <- p - lr*wd*p, then p <- p - lr * m_hat / (sqrt(v_hat) + eps).
/// Adam: g <- g + wd*p (coupled L2), then the same bias-corrected step.
/// RMSprop: g <- g + wd*p, v <- alpha*v + (1-alpha)*g^2, p <- p - lr*g/(sqrt(v)+eps).
inline void optimizer_step(QNetworkParams& params, OptimizerState& st, const QNetworkParams& grads) {
    if (!params.same_shape(grads)) throw ConfigError("optimizer_step: gradient shape mismatch");
    const std::size_t n = params.size();
    if (st.first_moment.size() != n || st.second_moment.size() != n)
        throw ConfigError("optimizer_step: optimizer state shape mismatch");
    const auto& c = st.config;
    auto p = params.flat();
    auto g = grads.flat();
    auto& m = st.first_moment;
    auto& v = st.second_moment;
    ++st.step_count;
    switch (c.kind) {
        case OptimizerKind::AdamW:
        case OptimizerKind::Adam: {
            const bool decoupled = c.kind == OptimizerKind::AdamW;
            const double t = static_cast<double>(st.step_count);
            const double bc1 = 1.0 - std::pow(c.beta1, t);
            const double bc2 = 1.0 - std::pow(c.beta2, t);
            for (std::size_t k = 0; k < n; ++k) {
                double gk = g[k];
                if (decoupled) p[k] -= c.lr * c.weight_decay * p[k];
                else gk += c.weight_decay * p[k];
                m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * gk;
                v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * gk * gk;
                const double m_hat = m[k] / bc1;
                const double v_hat = v[k] / bc2;
                p[k] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
            }
            break;
        }
        case OptimizerKind::RMSprop:
            for (std::size_t k = 0; k < n; ++k) {
                const double gk = g[k] + c.weight_decay * p[k];
                v[k] = c.rms_alpha * v[k] + (1.0 - c.rms_alpha) * gk * gk;
                p[k] -= c.lr * gk / (std::sqrt(v[k]) + c.eps);
            }
            break;
    }
}

/// Deep copy; the parameters are a value type, so this is plain copy construction.
inline QNetworkParams copy_params(const QNetworkParams& src) { return src; }

/// FNV-1a over the little-endian bytes of every parameter.
inline std::uint64_t params_hash(const QNetworkParams& p) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint64_t word) {
        for (int b = 0; b < 8; ++b) {
            h ^= (word >> (8 * b)) & 0xFF;
            h *= 0x100000001b3ULL;
        }
    };
    mix(p.input_dim());
    mix(p.hidden_dim());
    for (double v : p.flat()) mix(std::bit_cast<std::uint64_t>(v));
    return h;
}

namespace detail {

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
    char buf[8];
    for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((v >> (8 * b)) & 0xFF);
    os.write(buf, 8);
}

inline std::uint64_t read_u64_le(std::istream& is) {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8)) throw ConfigError("parameter snapshot truncated");
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
    return v;
}

} // namespace detail

/// Snapshot layout: u64 input_dim, u64 hidden_dim, u64 output_dim (=2), u64 count,
/// then `count` IEEE-754 doubles, all little-endian, in QNetworkParams flat order.
inline void write_params(std::ostream& os, const QNetworkParams& p) {
    detail::write_u64_le(os, p.input_dim());
    detail::write_u64_le(os, p.hidden_dim());
    detail::write_u64_le(os, kNumActions);
    detail::write_u64_le(os, p.size());
    for (double v : p.flat()) detail::write_u64_le(os, std::bit_cast<std::uint64_t>(v));
}

inline QNetworkParams read_params(std::istream& is) {
    const auto in = detail::read_u64_le(is);
    const auto hid = detail::read_u64_le(is);
    const auto out = detail::read_u64_le(is);
    const auto count = detail::read_u64_le(is);
    if (out != kNumActions || in == 0 || hid == 0 || in > (1u << 20) || hid > (1u << 20) ||
        count != QNetworkParams::count_for(in, hid))
        throw ConfigError("parameter snapshot header is inconsistent");
    QNetworkParams p(in, hid);
    for (double& v : p.flat()) v = std::bit_cast<double>(detail::read_u64_le(is));
    return p;
}

} // namespace coopdqn
