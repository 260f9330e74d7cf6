#pragma once

#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lge/tensor.hpp"
#include "lge/textcodec.hpp"

namespace lge {

template <typename Real>
inline Real sigmoid(Real x) {
    return Real(1) / (Real(1) + std::exp(-x));
}

// out += W x, W is (rows x cols), x has cols entries.
template <typename Real>
inline void matvec_add(const Tensor<Real>& W, const Real* x, Real* out) {
    const std::size_t r = W.rows(), c = W.cols();
    for (std::size_t i = 0; i < r; ++i) {
        const Real* wrow = W.row(i);
        Real acc = 0;
        for (std::size_t j = 0; j < c; ++j) acc += wrow[j] * x[j];
        out[i] += acc;
    }
}

// out += W^T d, d has rows entries, out has cols entries.
template <typename Real>
inline void matvec_t_add(const Tensor<Real>& W, const Real* d, Real* out) {
    const std::size_t r = W.rows(), c = W.cols();
    for (std::size_t i = 0; i < r; ++i) {
        const Real* wrow = W.row(i);
        const Real di = d[i];
        for (std::size_t j = 0; j < c; ++j) out[j] += wrow[j] * di;
    }
}

// dW += d (outer) x.
template <typename Real>
inline void outer_add(Tensor<Real>& dW, const Real* d, const Real* x) {
    const std::size_t r = dW.rows(), c = dW.cols();
    for (std::size_t i = 0; i < r; ++i) {
        Real* wrow = dW.row(i);
        const Real di = d[i];
        for (std::size_t j = 0; j < c; ++j) wrow[j] += di * x[j];
    }
}

// ---------------------------------------------------------------------------
// GRU sequence encoder
//
// Single layer, h_0 = 0, final hidden state is the sequence representation.
// Gate layout per section prefix: Wz/Wr/Wh (H x E), Uz/Ur/Uh (H x H),
// bz/br/bh (H). Update rule:
//   z = sigmoid(Wz x + Uz h_prev + bz)
//   r = sigmoid(Wr x + Ur h_prev + br)
//   hbar = tanh(Wh x + Uh (r . h_prev) + bh)
//   h = (1 - z) . h_prev + z . hbar
// ---------------------------------------------------------------------------

template <typename Real>
void gru_init(ParamStore<Real>& store, const std::string& prefix, std::size_t embed_dim,
              std::size_t hidden_dim) {
    for (const char* g : {"Wz", "Wr", "Wh"})
        store.add(prefix + "." + g, {hidden_dim, embed_dim});
    for (const char* g : {"Uz", "Ur", "Uh"})
        store.add(prefix + "." + g, {hidden_dim, hidden_dim});
    for (const char* g : {"bz", "br", "bh"})
        store.add(prefix + "." + g, {hidden_dim});
}

// Uniform +-1/sqrt(H) for recurrent and linear weights, +-0.05 for the
// embedding table, zero biases.
template <typename Real>
void init_weights(ParamStore<Real>& store, RngStream& rng) {
    for (auto& [name, p] : store) {
        auto pos = name.rfind('.');
        const std::string leaf = pos == std::string::npos ? name : name.substr(pos + 1);
        if (leaf.size() >= 1 && leaf[0] == 'b') {
            p.value.fill(Real(0));
        } else if (name == "embed" || leaf == "embed") {
            for (Real& v : p.value.data) v = static_cast<Real>(rng.uniform(-0.05, 0.05));
        } else {
            const std::size_t h = p.value.rows();
            const double bound = 1.0 / std::sqrt(static_cast<double>(h == 0 ? 1 : h));
            for (Real& v : p.value.data) v = static_cast<Real>(rng.uniform(-bound, bound));
        }
    }
}

// Forward intermediates kept for backpropagation through time.
template <typename Real>
struct GruTrace {
    TokenIds ids;
    // h[0] is the zero initial state; h[t+1] is the state after consuming ids[t].
    std::vector<std::vector<Real>> h, z, r, hbar;

    const std::vector<Real>& output() const { return h.back(); }
};

template <typename Real>
GruTrace<Real> gru_forward(const ParamStore<Real>& store, const std::string& prefix,
                           const Tensor<Real>& embed, const TokenIds& ids) {
    if (ids.empty()) throw std::invalid_argument("gru_forward: empty token sequence");
    const Tensor<Real>& Wz = store.value(prefix + ".Wz");
    const Tensor<Real>& Wr = store.value(prefix + ".Wr");
    const Tensor<Real>& Wh = store.value(prefix + ".Wh");
    const Tensor<Real>& Uz = store.value(prefix + ".Uz");
    const Tensor<Real>& Ur = store.value(prefix + ".Ur");
    const Tensor<Real>& Uh = store.value(prefix + ".Uh");
    const Tensor<Real>& bz = store.value(prefix + ".bz");
    const Tensor<Real>& br = store.value(prefix + ".br");
    const Tensor<Real>& bh = store.value(prefix + ".bh");
    const std::size_t H = Wz.rows();
    const std::size_t E = Wz.cols();
    if (embed.cols() != E) throw std::invalid_argument("gru_forward: embedding width mismatch");

    GruTrace<Real> tr;
    tr.ids = ids;
    tr.h.assign(ids.size() + 1, std::vector<Real>(H, Real(0)));
    tr.z.assign(ids.size(), std::vector<Real>(H));
    tr.r.assign(ids.size(), std::vector<Real>(H));
    tr.hbar.assign(ids.size(), std::vector<Real>(H));

    std::vector<Real> gate(H), rh(H);
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const int id = ids[t];
        if (id < 0 || static_cast<std::size_t>(id) >= embed.rows())
            throw std::out_of_range("gru_forward: token id out of embedding range");
        const Real* x = embed.row(static_cast<std::size_t>(id));
        const Real* hp = tr.h[t].data();

        std::copy(bz.data.begin(), bz.data.end(), gate.begin());
        matvec_add(Wz, x, gate.data());
        matvec_add(Uz, hp, gate.data());
        for (std::size_t i = 0; i < H; ++i) tr.z[t][i] = sigmoid(gate[i]);

        std::copy(br.data.begin(), br.data.end(), gate.begin());
        matvec_add(Wr, x, gate.data());
        matvec_add(Ur, hp, gate.data());
        for (std::size_t i = 0; i < H; ++i) tr.r[t][i] = sigmoid(gate[i]);

        for (std::size_t i = 0; i < H; ++i) rh[i] = tr.r[t][i] * hp[i];
        std::copy(bh.data.begin(), bh.data.end(), gate.begin());
        matvec_add(Wh, x, gate.data());
        matvec_add(Uh, rh.data(), gate.data());
        for (std::size_t i = 0; i < H; ++i) tr.hbar[t][i] = std::tanh(gate[i]);

        for (std::size_t i = 0; i < H; ++i)
            tr.h[t + 1][i] = (Real(1) - tr.z[t][i]) * hp[i] + tr.z[t][i] * tr.hbar[t][i];
    }
    return tr;
}

// Final hidden state of the sequence.
template <typename Real>
std::vector<Real> gru_encode(const ParamStore<Real>& store, const std::string& prefix,
                             const Tensor<Real>& embed, const TokenIds& ids) {
    return gru_forward(store, prefix, embed, ids).output();
}

// Accumulates parameter and embedding gradients for d(loss)/d(final hidden).
template <typename Real>
void gru_backward(ParamStore<Real>& store, const std::string& prefix,
                  const std::string& embed_name, const GruTrace<Real>& tr,
                  const std::vector<Real>& dh_final) {
    const Tensor<Real>& Wz = store.value(prefix + ".Wz");
    const Tensor<Real>& Wr = store.value(prefix + ".Wr");
    const Tensor<Real>& Wh = store.value(prefix + ".Wh");
    const Tensor<Real>& Uz = store.value(prefix + ".Uz");
    const Tensor<Real>& Ur = store.value(prefix + ".Ur");
    const Tensor<Real>& Uh = store.value(prefix + ".Uh");
    Tensor<Real>& dWz = store.grad(prefix + ".Wz");
    Tensor<Real>& dWr = store.grad(prefix + ".Wr");
    Tensor<Real>& dWh = store.grad(prefix + ".Wh");
    Tensor<Real>& dUz = store.grad(prefix + ".Uz");
    Tensor<Real>& dUr = store.grad(prefix + ".Ur");
    Tensor<Real>& dUh = store.grad(prefix + ".Uh");
    Tensor<Real>& dbz = store.grad(prefix + ".bz");
    Tensor<Real>& dbr = store.grad(prefix + ".br");
    Tensor<Real>& dbh = store.grad(prefix + ".bh");
    const Tensor<Real>& embed = store.value(embed_name);
    Tensor<Real>& dembed = store.grad(embed_name);

    const std::size_t H = Wz.rows();
    if (dh_final.size() != H) throw std::invalid_argument("gru_backward: dh size mismatch");

    std::vector<Real> dh(dh_final), dh_prev(H), daz(H), dar(H), dah(H), dq(H), rh(H), dx(Wz.cols());
    for (std::size_t t = tr.ids.size(); t-- > 0;) {
        const Real* hp = tr.h[t].data();
        const Real* z = tr.z[t].data();
        const Real* r = tr.r[t].data();
        const Real* hb = tr.hbar[t].data();
        const Real* x = embed.row(static_cast<std::size_t>(tr.ids[t]));

        std::fill(dh_prev.begin(), dh_prev.end(), Real(0));
        for (std::size_t i = 0; i < H; ++i) {
            const Real dhb = dh[i] * z[i];
            const Real dz = dh[i] * (hb[i] - hp[i]);
            dh_prev[i] += dh[i] * (Real(1) - z[i]);
            dah[i] = dhb * (Real(1) - hb[i] * hb[i]);
            daz[i] = dz * z[i] * (Real(1) - z[i]);
            rh[i] = r[i] * hp[i];
        }
        outer_add(dWh, dah.data(), x);
        outer_add(dUh, dah.data(), rh.data());
        for (std::size_t i = 0; i < H; ++i) dbh.data[i] += dah[i];

        std::fill(dq.begin(), dq.end(), Real(0));
        matvec_t_add(Uh, dah.data(), dq.data());
        for (std::size_t i = 0; i < H; ++i) {
            const Real dr = dq[i] * hp[i];
            dh_prev[i] += dq[i] * r[i];
            dar[i] = dr * r[i] * (Real(1) - r[i]);
        }
        outer_add(dWr, dar.data(), x);
        outer_add(dUr, dar.data(), hp);
        for (std::size_t i = 0; i < H; ++i) dbr.data[i] += dar[i];
        matvec_t_add(Ur, dar.data(), dh_prev.data());

        outer_add(dWz, daz.data(), x);
        outer_add(dUz, daz.data(), hp);
        for (std::size_t i = 0; i < H; ++i) dbz.data[i] += daz[i];
        matvec_t_add(Uz, daz.data(), dh_prev.data());

        std::fill(dx.begin(), dx.end(), Real(0));
        matvec_t_add(Wz, daz.data(), dx.data());
        matvec_t_add(Wr, dar.data(), dx.data());
        matvec_t_add(Wh, dah.data(), dx.data());
        Real* de = dembed.row(static_cast<std::size_t>(tr.ids[t]));
        for (std::size_t j = 0; j < dx.size(); ++j) de[j] += dx[j];

        dh = dh_prev;
    }
}

// ---------------------------------------------------------------------------
// Linear head, softmax, Huber
// ---------------------------------------------------------------------------

// y = W x + b, W is (out x in).
template <typename Real>
std::vector<Real> linear(const Tensor<Real>& W, const Tensor<Real>& b,
                         const std::vector<Real>& x) {
    if (W.cols() != x.size() || W.rows() != b.numel())
        throw std::invalid_argument("linear: dimension mismatch");
    std::vector<Real> y(b.data.begin(), b.data.end());
    matvec_add(W, x.data(), y.data());
    return y;
}

// Accumulates dW, db and returns dx for dy.
template <typename Real>
std::vector<Real> linear_backward(const Tensor<Real>& W, Tensor<Real>& dW, Tensor<Real>& db,
                                  const std::vector<Real>& x, const std::vector<Real>& dy) {
    if (dy.size() != W.rows()) throw std::invalid_argument("linear_backward: dy mismatch");
    outer_add(dW, dy.data(), x.data());
    for (std::size_t i = 0; i < dy.size(); ++i) db.data[i] += dy[i];
    std::vector<Real> dx(W.cols(), Real(0));
    matvec_t_add(W, dy.data(), dx.data());
    return dx;
}

// Max-subtracted softmax; the output sums to 1 within 1e-12 for finite input.
template <typename Real>
std::vector<Real> softmax(const std::vector<Real>& scores) {
    if (scores.empty()) throw std::invalid_argument("softmax: empty input");
    Real mx = scores[0];
    for (Real s : scores) {
        if (!std::isfinite(static_cast<double>(s)))
            throw std::invalid_argument("softmax: non-finite input");
        mx = std::max(mx, s);
    }
    std::vector<Real> p(scores.size());
    Real sum = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - mx);
        sum += p[i];
    }
    for (Real& v : p) v /= sum;
    return p;
}

// 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise.
inline double huber(double delta) {
    const double a = std::abs(delta);
    return a < 1.0 ? 0.5 * delta * delta : a - 0.5;
}

inline double huber_grad(double delta) {
    return std::abs(delta) < 1.0 ? delta : (delta > 0 ? 1.0 : -1.0);
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking
// ---------------------------------------------------------------------------

// loss_fn(true) recomputes the loss and fills the store's gradient slots;
// loss_fn(false) recomputes the loss only. Returns the max relative error
// over up to coords_per_tensor sampled coordinates of every tensor.
template <typename Real>
double grad_check(ParamStore<Real>& params, const std::function<double(bool)>& loss_fn,
                  double eps = 1e-5, std::size_t coords_per_tensor = 200,
                  std::uint64_t seed = 0) {
    static_assert(std::is_same_v<Real, double>, "grad_check requires 64-bit parameters");
    params.zero_grad();
    const double base = loss_fn(true);
    if (!std::isfinite(base)) throw std::runtime_error("grad_check: non-finite loss");

    std::map<std::string, std::vector<double>> analytic;
    for (auto& [name, p] : params) analytic[name] = p.grad.data;

    RngStream rng(seed, "grad_check");
    double max_rel = 0.0;
    for (auto& [name, p] : params) {
        std::vector<std::size_t> coords;
        const std::size_t n = p.value.numel();
        if (n <= coords_per_tensor) {
            coords.resize(n);
            for (std::size_t i = 0; i < n; ++i) coords[i] = i;
        } else {
            std::set<std::size_t> picked;
            while (picked.size() < coords_per_tensor) picked.insert(rng.index(n));
            coords.assign(picked.begin(), picked.end());
        }
        for (std::size_t c : coords) {
            const double saved = static_cast<double>(p.value.data[c]);
            p.value.data[c] = saved + eps;
            const double lp = loss_fn(false);
            p.value.data[c] = saved - eps;
            const double lm = loss_fn(false);
            p.value.data[c] = saved;
            if (!std::isfinite(lp) || !std::isfinite(lm))
                throw std::runtime_error("grad_check: non-finite loss during perturbation");
            const double numeric = (lp - lm) / (2.0 * eps);
            const double a = analytic[name][c];
            const double rel =
                std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace lge
