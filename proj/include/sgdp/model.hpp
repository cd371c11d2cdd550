#pragma once

// Gated graph neural network over per-stream delta graphs.
//
// Forward pass per stream (states kept as rows of a u x d matrix):
//   X  = S*W_a + 1*b_a'                     (u x 2d)
//   A  = H_in*X[:, :d] + H_out*X[:, d:]     aggregation over fused adjacency
//   Z  = sigmoid(A*W_z' + S*U_z')           update gate
//   R  = sigmoid(A*W_r' + S*U_r')           reset gate
//   C  = tanh(A*W_h' + (R.*S)*U_h')         candidate
//   S' = (1-Z).*S + Z.*C                    applied prop_steps times
// Readout: attention over window positions through the alias map,
//   v_l = state(alias(n)),  a_i = q' sigmoid(W_1 v_l + W_2 s_i + b_g),
//   v_g = sum a_i s_i,      v_h = W_f [v_l; v_g] + b_h.
// Scores are v_h' embed[c] over the full vocabulary 0..K; the loss is the
// summed binary cross-entropy of the softmax against a one-hot target plus
// an l2 penalty over every parameter tensor.
//
// Gradients are exact reverse-mode, written out by hand; train() runs
// mini-batch Adam with a seeded shuffle so results are reproducible.
// Everything is templated on the scalar so tests can run the numerics in
// double while production paths may use float.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgdp/delta.hpp"
#include "sgdp/graph.hpp"

namespace sgdp {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct TrainConfig {
    int k = 1000;            // vocabulary classes beyond class 0
    int d = 200;             // latent width
    double lr0 = 1.5e-3;
    double lr_decay = 0.95;  // multiplier applied every 3 epochs
    int batch = 128;
    int epochs = 10;
    double l2_lambda = 1e-5;
    int prop_steps = 1;
    double w_s = 0.5;        // sequential/full-connect fusion weight
    std::uint64_t seed = 7;
    int window_n = 10;       // echoed into checkpoints for eval-time use
    double tol = 0.0;        // early stop when epoch mean loss < tol; 0 disables

    void validate() const {
        if (k < 1) throw std::invalid_argument("config: k must be >= 1");
        if (d < 1) throw std::invalid_argument("config: d must be >= 1");
        if (!(lr0 > 0.0)) throw std::invalid_argument("config: lr0 must be positive");
        if (!(lr_decay > 0.0 && lr_decay <= 1.0))
            throw std::invalid_argument("config: lr_decay must lie in (0,1]");
        if (batch < 1) throw std::invalid_argument("config: batch must be >= 1");
        if (epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
        if (l2_lambda < 0.0) throw std::invalid_argument("config: l2_lambda must be >= 0");
        if (prop_steps < 0) throw std::invalid_argument("config: prop_steps must be >= 0");
        if (w_s < 0.0 || w_s > 1.0) throw std::invalid_argument("config: w_s must lie in [0,1]");
        if (window_n < 1) throw std::invalid_argument("config: window_n must be >= 1");
        if (tol < 0.0) throw std::invalid_argument("config: tol must be >= 0");
    }
};

template <class T>
struct TensorView {
    const char* name;
    T* data;
    Eigen::Index rows, cols;
    Eigen::Index size() const { return rows * cols; }
};

template <class T>
struct ModelParams {
    int k = 0, d = 0;
    Mat<T> embed;                         // (k+1) x d
    Mat<T> w_a;                           // d x 2d
    Vec<T> b_a;                           // 2d
    Mat<T> w_z, u_z, w_r, u_r, w_h, u_h;  // d x d each
    Mat<T> w_1, w_2;                      // d x d
    Vec<T> q, b_g;                        // d
    Mat<T> w_f;                           // d x 2d
    Vec<T> b_h;                           // d

    static ModelParams shaped(int k, int d) {
        ModelParams p;
        p.k = k;
        p.d = d;
        p.embed = Mat<T>::Zero(k + 1, d);
        p.w_a = Mat<T>::Zero(d, 2 * d);
        p.b_a = Vec<T>::Zero(2 * d);
        p.w_z = Mat<T>::Zero(d, d);
        p.u_z = Mat<T>::Zero(d, d);
        p.w_r = Mat<T>::Zero(d, d);
        p.u_r = Mat<T>::Zero(d, d);
        p.w_h = Mat<T>::Zero(d, d);
        p.u_h = Mat<T>::Zero(d, d);
        p.w_1 = Mat<T>::Zero(d, d);
        p.w_2 = Mat<T>::Zero(d, d);
        p.q = Vec<T>::Zero(d);
        p.b_g = Vec<T>::Zero(d);
        p.w_f = Mat<T>::Zero(d, 2 * d);
        p.b_h = Vec<T>::Zero(d);
        return p;
    }

    // Declared tensor order; serialization, init, and Adam all iterate this.
    std::array<TensorView<T>, 15> views() {
        return {{{"embed", embed.data(), embed.rows(), embed.cols()},
                 {"w_a", w_a.data(), w_a.rows(), w_a.cols()},
                 {"b_a", b_a.data(), b_a.size(), 1},
                 {"w_z", w_z.data(), w_z.rows(), w_z.cols()},
                 {"u_z", u_z.data(), u_z.rows(), u_z.cols()},
                 {"w_r", w_r.data(), w_r.rows(), w_r.cols()},
                 {"u_r", u_r.data(), u_r.rows(), u_r.cols()},
                 {"w_h", w_h.data(), w_h.rows(), w_h.cols()},
                 {"u_h", u_h.data(), u_h.rows(), u_h.cols()},
                 {"w_1", w_1.data(), w_1.rows(), w_1.cols()},
                 {"w_2", w_2.data(), w_2.rows(), w_2.cols()},
                 {"q", q.data(), q.size(), 1},
                 {"b_g", b_g.data(), b_g.size(), 1},
                 {"w_f", w_f.data(), w_f.rows(), w_f.cols()},
                 {"b_h", b_h.data(), b_h.size(), 1}}};
    }
    std::array<TensorView<const T>, 15> views() const {
        auto mut = const_cast<ModelParams*>(this)->views();
        std::array<TensorView<const T>, 15> out;
        for (std::size_t i = 0; i < mut.size(); ++i)
            out[i] = {mut[i].name, mut[i].data, mut[i].rows, mut[i].cols};
        return out;
    }
};

template <class T>
ModelParams<T> init_params(const TrainConfig& cfg) {
    cfg.validate();
    auto p = ModelParams<T>::shaped(cfg.k, cfg.d);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 0.1);
    for (auto& view : p.views()) {
        for (Eigen::Index i = 0; i < view.size(); ++i) view.data[i] = static_cast<T>(gauss(rng));
    }
    return p;
}

template <class T>
double sq_norm(const ModelParams<T>& p) {
    double total = 0.0;
    for (const auto& view : p.views()) {
        for (Eigen::Index i = 0; i < view.size(); ++i)
            total += static_cast<double>(view.data[i]) * static_cast<double>(view.data[i]);
    }
    return total;
}

// Per-stream model input: graph in compact node space plus the alias map.
template <class T>
struct StreamInput {
    std::vector<int> nodes;
    std::vector<int> alias;
    Mat<T> h_in, h_out;  // u x u halves of the fused connection matrix
    int target = 0;
    std::uint64_t anchor_lba = 0;
    std::uint64_t stream_id = 0;
};

template <class T>
StreamInput<T> make_input(std::span<const int> classes, double w_s, int k) {
    if (classes.empty()) throw std::invalid_argument("stream has no classes");
    for (int c : classes) {
        if (c < 0 || c > k) throw std::invalid_argument("stream class id out of vocabulary range");
    }
    StreamGraph g = build_stream_graph(classes, w_s);
    const auto u = static_cast<Eigen::Index>(g.node_count());
    StreamInput<T> in;
    in.nodes = std::move(g.nodes);
    in.alias = std::move(g.alias);
    in.h_in = g.m_h.leftCols(u).template cast<T>();
    in.h_out = g.m_h.rightCols(u).template cast<T>();
    return in;
}

template <class T>
StreamInput<T> make_input(const DeltaStream& s, double w_s, int k) {
    if (s.target_class < 0 || s.target_class > k)
        throw std::invalid_argument("stream target out of vocabulary range");
    StreamInput<T> in = make_input<T>(std::span<const int>(s.classes), w_s, k);
    in.target = s.target_class;
    in.anchor_lba = s.anchor_lba;
    in.stream_id = s.stream_id;
    return in;
}

namespace detail {

template <class Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
    using U = typename Derived::Scalar;
    return U(1) / (U(1) + (-x).exp());
}

}  // namespace detail

template <class T>
struct ForwardTrace {
    std::vector<Mat<T>> s;           // states before each step + final (prop_steps + 1)
    std::vector<Mat<T>> a, z, r, c;  // per-step caches (prop_steps each)
    Mat<T> e;                        // n x d attention sigmoid outputs
    Vec<T> alpha;                    // n attention weights
    Vec<T> v_l, v_g, v_h;
    Vec<T> scores, y_hat;  // k+1 each
};

template <class T>
ForwardTrace<T> forward(const ModelParams<T>& p, const StreamInput<T>& in, int prop_steps) {
    const Eigen::Index d = p.d;
    const auto u = static_cast<Eigen::Index>(in.nodes.size());
    const auto n = static_cast<Eigen::Index>(in.alias.size());
    ForwardTrace<T> t;
    t.s.reserve(prop_steps + 1);

    Mat<T> state(u, d);
    for (Eigen::Index i = 0; i < u; ++i) state.row(i) = p.embed.row(in.nodes[i]);
    t.s.push_back(state);

    for (int step = 0; step < prop_steps; ++step) {
        const Mat<T>& s = t.s.back();
        Mat<T> x = (s * p.w_a).rowwise() + p.b_a.transpose();
        Mat<T> a = in.h_in * x.leftCols(d) + in.h_out * x.rightCols(d);
        Mat<T> z = detail::sigmoid((a * p.w_z.transpose() + s * p.u_z.transpose()).array());
        Mat<T> r = detail::sigmoid((a * p.w_r.transpose() + s * p.u_r.transpose()).array());
        Mat<T> c =
            (a * p.w_h.transpose() + (r.array() * s.array()).matrix() * p.u_h.transpose())
                .array()
                .tanh();
        Mat<T> next =
            ((T(1) - z.array()) * s.array() + z.array() * c.array()).matrix();
        if (!next.allFinite()) throw std::runtime_error("non-finite state in propagation");
        t.a.push_back(std::move(a));
        t.z.push_back(std::move(z));
        t.r.push_back(std::move(r));
        t.c.push_back(std::move(c));
        t.s.push_back(std::move(next));
    }

    const Mat<T>& fin = t.s.back();
    t.v_l = fin.row(in.alias[n - 1]).transpose();
    Vec<T> w1vl = p.w_1 * t.v_l;
    t.e.resize(n, d);
    t.alpha.resize(n);
    t.v_g = Vec<T>::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vec<T> si = fin.row(in.alias[i]).transpose();
        Vec<T> ei = detail::sigmoid((w1vl + p.w_2 * si + p.b_g).array());
        t.alpha(i) = p.q.dot(ei);
        t.v_g += t.alpha(i) * si;
        t.e.row(i) = ei.transpose();
    }
    Vec<T> cat(2 * d);
    cat << t.v_l, t.v_g;
    t.v_h = p.w_f * cat + p.b_h;

    t.scores = p.embed * t.v_h;
    Vec<T> shifted = (t.scores.array() - t.scores.maxCoeff()).exp();
    t.y_hat = shifted / shifted.sum();
    if (!t.y_hat.allFinite()) throw std::runtime_error("non-finite probabilities in forward");
    return t;
}

// Summed binary cross-entropy against a one-hot target (log args clamped).
template <class T>
double data_loss(const Vec<T>& y_hat, int target) {
    if (target < 0 || target >= y_hat.size())
        throw std::invalid_argument("loss: target outside probability vector");
    constexpr double kClamp = 1e-12;
    double loss = 0.0;
    for (Eigen::Index c = 0; c < y_hat.size(); ++c) {
        const double y = static_cast<double>(y_hat(c));
        if (c == target)
            loss -= std::log(std::max(y, kClamp));
        else
            loss -= std::log(std::max(1.0 - y, kClamp));
    }
    return loss;
}

template <class T>
double total_loss(const Vec<T>& y_hat, int target, const ModelParams<T>& p, double l2_lambda) {
    return data_loss(y_hat, target) + l2_lambda * sq_norm(p);
}

// Lowest class id wins ties.
template <class T>
int argmax_class(const Vec<T>& scores) {
    int best = 0;
    for (Eigen::Index c = 1; c < scores.size(); ++c)
        if (scores(c) > scores(best)) best = static_cast<int>(c);
    return best;
}

// Accumulates the gradient of the data loss into `g` (l2 term excluded; the
// training loop adds 2*lambda*theta once per batch).
template <class T>
void backward(const ModelParams<T>& p, const StreamInput<T>& in, const ForwardTrace<T>& t,
              int target, ModelParams<T>& g) {
    if (g.k != p.k || g.d != p.d) throw std::invalid_argument("backward: gradient shape mismatch");
    const Eigen::Index d = p.d;
    const auto u = static_cast<Eigen::Index>(in.nodes.size());
    const auto n = static_cast<Eigen::Index>(in.alias.size());
    const int steps = static_cast<int>(t.a.size());
    constexpr double kClamp = 1e-12;

    // d loss / d scores through the softmax; gc = dL/dy_hat. The probabilities
    // are recomputed from the raw scores in double: in float a confidently
    // wrong class can round to exactly 1, and the clamped quotient then feeds
    // ~1/kClamp into dscores instead of the bounded true value. The quotients
    // stay clamped so a double-saturated class degrades gracefully too.
    Eigen::VectorXd sh = t.scores.template cast<double>();
    sh.array() -= sh.maxCoeff();
    Eigen::VectorXd yd = sh.array().exp();
    yd /= yd.sum();
    Eigen::VectorXd gc(p.k + 1);
    for (Eigen::Index c = 0; c <= p.k; ++c) {
        if (static_cast<int>(c) == target)
            gc(c) = -1.0 / std::max(yd(c), kClamp);
        else
            gc(c) = 1.0 / std::max(1.0 - yd(c), kClamp);
    }
    const double dot = gc.dot(yd);
    Vec<T> dscores = (yd.array() * (gc.array() - dot)).matrix().template cast<T>();

    // Scoring layer: scores = embed * v_h.
    Vec<T> dv_h = p.embed.transpose() * dscores;
    g.embed.noalias() += dscores * t.v_h.transpose();

    // v_h = w_f [v_l; v_g] + b_h.
    Vec<T> cat(2 * d);
    cat << t.v_l, t.v_g;
    g.w_f.noalias() += dv_h * cat.transpose();
    g.b_h += dv_h;
    Vec<T> dcat = p.w_f.transpose() * dv_h;
    Vec<T> dv_l = dcat.head(d);
    Vec<T> dv_g = dcat.tail(d);

    // Attention over positions.
    const Mat<T>& fin = t.s.back();
    Mat<T> dfin = Mat<T>::Zero(u, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vec<T> si = fin.row(in.alias[i]).transpose();
        Vec<T> ei = t.e.row(i).transpose();
        T dalpha = dv_g.dot(si);
        Vec<T> dsi = t.alpha(i) * dv_g;
        g.q += dalpha * ei;
        Vec<T> dpre =
            (dalpha * p.q.array() * ei.array() * (T(1) - ei.array())).matrix();
        g.w_1.noalias() += dpre * t.v_l.transpose();
        g.w_2.noalias() += dpre * si.transpose();
        g.b_g += dpre;
        dv_l.noalias() += p.w_1.transpose() * dpre;
        dsi.noalias() += p.w_2.transpose() * dpre;
        dfin.row(in.alias[i]) += dsi.transpose();
    }
    dfin.row(in.alias[n - 1]) += dv_l.transpose();

    // Back through the propagation steps.
    Mat<T> ds_next = std::move(dfin);
    for (int step = steps - 1; step >= 0; --step) {
        const Mat<T>& s = t.s[step];
        const Mat<T>& a = t.a[step];
        const Mat<T>& z = t.z[step];
        const Mat<T>& r = t.r[step];
        const Mat<T>& c = t.c[step];

        Mat<T> dz = (ds_next.array() * (c.array() - s.array())).matrix();
        Mat<T> dc = (ds_next.array() * z.array()).matrix();
        Mat<T> ds = (ds_next.array() * (T(1) - z.array())).matrix();

        Mat<T> dph = (dc.array() * (T(1) - c.array() * c.array())).matrix();
        Mat<T> rs = (r.array() * s.array()).matrix();
        g.w_h.noalias() += dph.transpose() * a;
        g.u_h.noalias() += dph.transpose() * rs;
        Mat<T> da = dph * p.w_h;
        Mat<T> drs = dph * p.u_h;
        Mat<T> dr = (drs.array() * s.array()).matrix();
        ds.array() += drs.array() * r.array();

        Mat<T> dpr = (dr.array() * r.array() * (T(1) - r.array())).matrix();
        g.w_r.noalias() += dpr.transpose() * a;
        g.u_r.noalias() += dpr.transpose() * s;
        da.noalias() += dpr * p.w_r;
        ds.noalias() += dpr * p.u_r;

        Mat<T> dpz = (dz.array() * z.array() * (T(1) - z.array())).matrix();
        g.w_z.noalias() += dpz.transpose() * a;
        g.u_z.noalias() += dpz.transpose() * s;
        da.noalias() += dpz * p.w_z;
        ds.noalias() += dpz * p.u_z;

        // A = h_in X_in + h_out X_out with X = s w_a + 1 b_a'.
        Mat<T> dx_in = in.h_in.transpose() * da;
        Mat<T> dx_out = in.h_out.transpose() * da;
        g.w_a.leftCols(d).noalias() += s.transpose() * dx_in;
        g.w_a.rightCols(d).noalias() += s.transpose() * dx_out;
        g.b_a.head(d) += dx_in.colwise().sum().transpose();
        g.b_a.tail(d) += dx_out.colwise().sum().transpose();
        ds.noalias() += dx_in * p.w_a.leftCols(d).transpose();
        ds.noalias() += dx_out * p.w_a.rightCols(d).transpose();

        ds_next = std::move(ds);
    }

    // Initial states came from embedding rows.
    for (Eigen::Index i = 0; i < u; ++i) g.embed.row(in.nodes[i]) += ds_next.row(i);
}

struct Prediction {
    int class_id = 0;
    double probability = 0.0;
};

template <class T>
Prediction predict(const ModelParams<T>& p, const StreamInput<T>& in, int prop_steps) {
    ForwardTrace<T> t = forward(p, in, prop_steps);
    int c = argmax_class(t.scores);
    return {c, static_cast<double>(t.y_hat(c))};
}

template <class T>
Prediction predict(const ModelParams<T>& p, const DeltaStream& s, const TrainConfig& cfg) {
    return predict(p, make_input<T>(s, cfg.w_s, cfg.k), cfg.prop_steps);
}

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double mean_loss = 0.0;  // data + l2 term, averaged per sample
    double accuracy = 0.0;   // top-1 over the epoch's training samples
};

template <class T>
struct TrainedModel {
    ModelParams<T> params;
    TrainConfig config;
    std::vector<EpochStats> history;
};

namespace detail {

template <class T>
struct AdamState {
    ModelParams<T> m, v;
    std::int64_t step = 0;

    explicit AdamState(const ModelParams<T>& shape)
        : m(ModelParams<T>::shaped(shape.k, shape.d)),
          v(ModelParams<T>::shaped(shape.k, shape.d)) {}

    void update(ModelParams<T>& params, const ModelParams<T>& grad, double lr) {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        ++step;
        const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(beta1, double(step))));
        const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(beta2, double(step))));
        auto pv = params.views();
        auto gv = grad.views();
        auto mv = m.views();
        auto vv = v.views();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
            Eigen::Map<Arr> pp(pv[i].data, pv[i].size());
            Eigen::Map<const Arr> gg(gv[i].data, gv[i].size());
            Eigen::Map<Arr> mm(mv[i].data, mv[i].size());
            Eigen::Map<Arr> ss(vv[i].data, vv[i].size());
            mm = T(beta1) * mm + T(1.0 - beta1) * gg;
            ss = T(beta2) * ss + T(1.0 - beta2) * gg.square();
            pp -= T(lr) * (mm * c1) / ((ss * c2).sqrt() + T(eps));
        }
    }
};

}  // namespace detail

template <class T>
TrainedModel<T> train(const std::vector<DeltaStream>& streams, const TrainConfig& cfg) {
    cfg.validate();
    if (streams.empty()) throw std::invalid_argument("train: empty training set");

    std::vector<StreamInput<T>> inputs;
    inputs.reserve(streams.size());
    for (const auto& s : streams) inputs.push_back(make_input<T>(s, cfg.w_s, cfg.k));

    TrainedModel<T> model;
    model.config = cfg;
    model.params = init_params<T>(cfg);
    detail::AdamState<T> adam(model.params);

    std::vector<std::size_t> order(inputs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed);

    ModelParams<T> grad = ModelParams<T>::shaped(cfg.k, cfg.d);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.lr0 * std::pow(cfg.lr_decay, epoch / 3);
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch) {
            const std::size_t end = std::min(begin + cfg.batch, order.size());
            const auto count = static_cast<double>(end - begin);
            for (auto& view : grad.views())
                Eigen::Map<Vec<T>>(view.data, view.size()).setZero();

            double batch_loss = 0.0;
            for (std::size_t j = begin; j < end; ++j) {
                const auto& in = inputs[order[j]];
                ForwardTrace<T> trace;
                try {
                    trace = forward(model.params, in, cfg.prop_steps);
                } catch (const std::runtime_error& err) {
                    throw std::runtime_error("train: " + std::string(err.what()) + " (epoch " +
                                             std::to_string(epoch) + ", stream " +
                                             std::to_string(in.stream_id) + ")");
                }
                const double l = data_loss(trace.y_hat, in.target);
                if (!std::isfinite(l))
                    throw std::runtime_error("train: non-finite loss (epoch " +
                                             std::to_string(epoch) + ", batch " +
                                             std::to_string(begin / cfg.batch) + ")");
                batch_loss += l;
                if (argmax_class(trace.scores) == in.target) ++correct;
                backward(model.params, in, trace, in.target, grad);
            }
            const double reg = cfg.l2_lambda * sq_norm(model.params);
            loss_sum += batch_loss + reg * count;

            auto gv = grad.views();
            auto pv = model.params.views();
            for (std::size_t i = 0; i < gv.size(); ++i) {
                using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
                Eigen::Map<Arr> gg(gv[i].data, gv[i].size());
                Eigen::Map<const Arr> pp(pv[i].data, pv[i].size());
                gg = gg / T(count) + T(2.0 * cfg.l2_lambda) * pp;
            }
            adam.update(model.params, grad, lr);
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.mean_loss = loss_sum / static_cast<double>(order.size());
        stats.accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        model.history.push_back(stats);
        if (cfg.tol > 0.0 && stats.mean_loss < cfg.tol) break;
    }
    return model;
}

// ---- Checkpoint serialization -------------------------------------------
//
// Binary layout (little-endian): magic "SGDPCKPT", u32 version, config echo
// (u32 k, d, window_n, prop_steps, batch, epochs; f64 w_s, lr0, lr_decay,
// l2_lambda, tol; u64 seed), u32 tensor count, then per tensor u32 rows,
// u32 cols and rows*cols f32 values in column-major order.  A JSON sidecar
// at <path>.json carries the vocabulary hash so mismatched vocabularies are
// refused at load time.

inline constexpr char kCheckpointMagic[8] = {'S', 'G', 'D', 'P', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_f64(std::ostream& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}
inline void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline double get_f64_or_throw(std::istream& in, const char* what) {
    std::uint64_t v;
    if (!get_u64(in, v)) throw std::runtime_error(std::string("truncated checkpoint: ") + what);
    return std::bit_cast<double>(v);
}
inline std::uint64_t get_u64_or_throw(std::istream& in, const char* what) {
    std::uint64_t v;
    if (!get_u64(in, v)) throw std::runtime_error(std::string("truncated checkpoint: ") + what);
    return v;
}
inline std::uint32_t get_u32_or_throw(std::istream& in, const char* what) {
    std::uint32_t v;
    if (!get_u32(in, v)) throw std::runtime_error(std::string("truncated checkpoint: ") + what);
    return v;
}
inline float get_f32_or_throw(std::istream& in, const char* what) {
    return std::bit_cast<float>(get_u32_or_throw(in, what));
}

}  // namespace detail

template <class T>
void save_checkpoint(const std::string& path, const ModelParams<T>& params,
                     const TrainConfig& cfg, std::uint64_t vocab_hash_value) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.k));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.d));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.window_n));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.prop_steps));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.batch));
    detail::put_u32(out, static_cast<std::uint32_t>(cfg.epochs));
    detail::put_f64(out, cfg.w_s);
    detail::put_f64(out, cfg.lr0);
    detail::put_f64(out, cfg.lr_decay);
    detail::put_f64(out, cfg.l2_lambda);
    detail::put_f64(out, cfg.tol);
    detail::put_u64(out, cfg.seed);
    auto views = params.views();
    detail::put_u32(out, static_cast<std::uint32_t>(views.size()));
    for (const auto& view : views) {
        detail::put_u32(out, static_cast<std::uint32_t>(view.rows));
        detail::put_u32(out, static_cast<std::uint32_t>(view.cols));
        for (Eigen::Index i = 0; i < view.size(); ++i)
            detail::put_f32(out, static_cast<float>(view.data[i]));
    }
    if (!out) throw std::runtime_error("short write to checkpoint: " + path);

    nlohmann::json side;
    side["format"] = "sgdp-checkpoint";
    side["version"] = kCheckpointVersion;
    side["vocab_hash"] = detail::to_hex(vocab_hash_value);
    side["k"] = cfg.k;
    side["d"] = cfg.d;
    side["window_n"] = cfg.window_n;
    side["prop_steps"] = cfg.prop_steps;
    side["w_s"] = cfg.w_s;
    std::ofstream meta(path + ".json", std::ios::trunc);
    if (!meta) throw std::runtime_error("cannot open checkpoint sidecar for writing: " + path);
    meta << side.dump(2) << '\n';
}

template <class T>
struct LoadedCheckpoint {
    ModelParams<T> params;
    TrainConfig config;
    std::string vocab_hash;  // hex, empty if the sidecar was absent
};

template <class T>
LoadedCheckpoint<T> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[sizeof(kCheckpointMagic)];
    if (!in.read(magic, sizeof(magic)) ||
        std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    const std::uint32_t version = detail::get_u32_or_throw(in, "version");
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

    LoadedCheckpoint<T> loaded;
    TrainConfig& cfg = loaded.config;
    cfg.k = static_cast<int>(detail::get_u32_or_throw(in, "k"));
    cfg.d = static_cast<int>(detail::get_u32_or_throw(in, "d"));
    cfg.window_n = static_cast<int>(detail::get_u32_or_throw(in, "window_n"));
    cfg.prop_steps = static_cast<int>(detail::get_u32_or_throw(in, "prop_steps"));
    cfg.batch = static_cast<int>(detail::get_u32_or_throw(in, "batch"));
    cfg.epochs = static_cast<int>(detail::get_u32_or_throw(in, "epochs"));
    cfg.w_s = detail::get_f64_or_throw(in, "w_s");
    cfg.lr0 = detail::get_f64_or_throw(in, "lr0");
    cfg.lr_decay = detail::get_f64_or_throw(in, "lr_decay");
    cfg.l2_lambda = detail::get_f64_or_throw(in, "l2_lambda");
    cfg.tol = detail::get_f64_or_throw(in, "tol");
    cfg.seed = detail::get_u64_or_throw(in, "seed");
    cfg.validate();

    loaded.params = ModelParams<T>::shaped(cfg.k, cfg.d);
    auto views = loaded.params.views();
    const std::uint32_t count = detail::get_u32_or_throw(in, "tensor count");
    if (count != views.size())
        throw std::runtime_error("checkpoint tensor count mismatch: " + path);
    for (auto& view : views) {
        const auto rows = static_cast<Eigen::Index>(detail::get_u32_or_throw(in, view.name));
        const auto cols = static_cast<Eigen::Index>(detail::get_u32_or_throw(in, view.name));
        if (rows != view.rows || cols != view.cols)
            throw std::runtime_error(std::string("checkpoint tensor shape mismatch for ") +
                                     view.name);
        for (Eigen::Index i = 0; i < view.size(); ++i)
            view.data[i] = static_cast<T>(detail::get_f32_or_throw(in, view.name));
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw std::runtime_error("trailing bytes in checkpoint: " + path);

    std::ifstream meta(path + ".json");
    if (meta) {
        nlohmann::json side = nlohmann::json::parse(meta, nullptr, false);
        if (!side.is_discarded() && side.contains("vocab_hash"))
            loaded.vocab_hash = side["vocab_hash"].get<std::string>();
    }
    return loaded;
}

}  // namespace sgdp
