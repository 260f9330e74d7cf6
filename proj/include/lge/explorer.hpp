#pragma once

#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "lge/nn.hpp"
#include "lge/textcodec.hpp"

namespace lge {

struct ExplorerConfig {
    std::size_t hidden = 128;  // embedding size == hidden size
    double lr = 1e-4;
    std::size_t buffer_capacity = 100'000;
    double priority_fraction = 0.5;
    double discount = 0.9;
    std::size_t batch_size = 64;
    std::size_t max_len = 48;
};

// ---------------------------------------------------------------------------
// DRRN Q-network: three state GRUs (previous observation, inventory, look),
// one action GRU, and a linear head over the 4H concatenation. One network
// per task type; the token embedding table is shared across the four GRUs.
// ---------------------------------------------------------------------------

template <typename Real>
class QNetwork {
public:
    QNetwork(Vocabulary vocab, ExplorerConfig cfg, std::uint64_t seed)
        : vocab_(std::move(vocab)), cfg_(cfg) {
        params_.add("embed", {vocab_.size(), cfg.hidden});
        for (const char* g : {"gru_o", "gru_i", "gru_l", "gru_a"})
            gru_init(params_, g, cfg.hidden, cfg.hidden);
        params_.add("head.W", {1, 4 * cfg.hidden});
        params_.add("head.b", {1});
        RngStream rng(seed, "qnet-init");
        init_weights(params_, rng);
    }

    const ExplorerConfig& config() const { return cfg_; }
    const Vocabulary& vocab() const { return vocab_; }
    ParamStore<Real>& params() { return params_; }
    const ParamStore<Real>& params() const { return params_; }
    std::size_t hidden() const { return cfg_.hidden; }

    TokenIds ids_of(std::string_view text) const {
        TokenIds ids = lge::encode(text, vocab_, cfg_.max_len);
        if (ids.empty()) ids.push_back(Vocabulary::kUnk);
        return ids;
    }

    // h_s = (f_o(o_prev) : f_i(inv) : f_l(look)), length 3H.
    std::vector<Real> encode_state(const std::string& o_prev, const std::string& inv,
                                   const std::string& look) const {
        if (o_prev.empty() || inv.empty() || look.empty())
            throw std::invalid_argument("encode_state: empty component");
        std::vector<Real> h;
        h.reserve(3 * cfg_.hidden);
        for (const auto& [prefix, text] :
             {std::pair<const char*, const std::string&>{"gru_o", o_prev},
              {"gru_i", inv},
              {"gru_l", look}}) {
            auto part = gru_encode(params_, prefix, params_.value("embed"), ids_of(text));
            h.insert(h.end(), part.begin(), part.end());
        }
        return h;
    }

    // Head split: Q(s,a) = W_s . h_s + W_a . h_a + b.
    double state_score(const std::vector<Real>& h_s) const {
        if (h_s.size() != 3 * cfg_.hidden)
            throw std::invalid_argument("state_score: h_s dimension mismatch");
        const Tensor<Real>& W = params_.value("head.W");
        double acc = static_cast<double>(params_.value("head.b").data[0]);
        for (std::size_t i = 0; i < h_s.size(); ++i)
            acc += static_cast<double>(W.data[i]) * static_cast<double>(h_s[i]);
        return acc;
    }

    double action_score(const std::string& action) const {
        const std::vector<Real> h =
            gru_encode(params_, "gru_a", params_.value("embed"), ids_of(action));
        const Tensor<Real>& W = params_.value("head.W");
        double acc = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i)
            acc += static_cast<double>(W.data[3 * cfg_.hidden + i]) *
                   static_cast<double>(h[i]);
        return acc;
    }

    double q_value(const std::vector<Real>& h_s, const std::string& action) const {
        return state_score(h_s) + action_score(action);
    }

    // Q over a candidate list; duplicate action texts are encoded once.
    std::vector<double> q_values(const std::vector<Real>& h_s,
                                 const std::vector<std::string>& actions) const {
        const double base = state_score(h_s);
        std::unordered_map<std::string, double> cache;
        std::vector<double> out(actions.size());
        for (std::size_t i = 0; i < actions.size(); ++i) {
            auto it = cache.find(actions[i]);
            if (it == cache.end()) it = cache.emplace(actions[i], action_score(actions[i])).first;
            out[i] = base + it->second;
        }
        return out;
    }

private:
    Vocabulary vocab_;
    ExplorerConfig cfg_;
    ParamStore<Real> params_;
};

// Stochastic training policy: sample from softmax over candidate Q values.
template <typename Real>
std::size_t select_action_train(const QNetwork<Real>& net, const std::vector<Real>& h_s,
                                const std::vector<std::string>& candidates, RngStream& rng) {
    if (candidates.empty())
        throw std::invalid_argument("select_action_train: no candidates");
    const std::vector<double> probs = softmax(net.q_values(h_s, candidates));
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

// Greedy evaluation policy; ties resolve to the lowest index.
template <typename Real>
std::size_t select_action_greedy(const QNetwork<Real>& net, const std::vector<Real>& h_s,
                                 const std::vector<std::string>& candidates) {
    if (candidates.empty())
        throw std::invalid_argument("select_action_greedy: no candidates");
    const std::vector<double> qs = net.q_values(h_s, candidates);
    std::size_t best = 0;
    for (std::size_t i = 1; i < qs.size(); ++i)
        if (qs[i] > qs[best]) best = i;
    return best;
}

// ---------------------------------------------------------------------------
// Replay storage. Texts are interned in a pool so transitions carry indices.
// ---------------------------------------------------------------------------

class TextPool {
public:
    std::uint32_t intern(const std::string& s) {
        auto it = index_.find(s);
        if (it != index_.end()) return it->second;
        const auto id = static_cast<std::uint32_t>(texts_.size());
        texts_.push_back(s);
        index_.emplace(s, id);
        return id;
    }

    const std::string& text(std::uint32_t id) const {
        return texts_.at(static_cast<std::size_t>(id));
    }

    std::size_t size() const { return texts_.size(); }

private:
    std::vector<std::string> texts_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

struct Transition {
    std::uint64_t id = 0;  // insertion id, for membership auditing
    std::uint32_t obs_prev = 0, inv = 0, look = 0;
    std::uint32_t action = 0;
    double reward = 0.0;
    std::uint32_t next_obs_prev = 0, next_inv = 0, next_look = 0;
    std::shared_ptr<const std::vector<std::uint32_t>> next_valid;  // A'
    bool done = false;
};

// Ring storage with a positive-reward priority partition; FIFO eviction
// within each partition.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, double priority_fraction)
        : capacity_(capacity), rho_(priority_fraction) {
        if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
        if (rho_ < 0.0 || rho_ > 1.0)
            throw std::invalid_argument("ReplayBuffer: priority fraction outside [0,1]");
    }

    void store(Transition t) {
        if (!t.done && (!t.next_valid || t.next_valid->empty()))
            throw std::invalid_argument("ReplayBuffer: non-terminal transition without A'");
        t.id = next_id_++;
        std::deque<Transition>& target = t.reward > 0.0 ? priority_ : regular_;
        if (size() >= capacity_) {
            if (!target.empty()) target.pop_front();
            else if (t.reward > 0.0) regular_.pop_front();
            else priority_.pop_front();
        }
        target.push_back(std::move(t));
    }

    std::size_t size() const { return priority_.size() + regular_.size(); }
    std::size_t priority_size() const { return priority_.size(); }
    std::size_t regular_size() const { return regular_.size(); }

    // ceil(rho * batch) priority draws when both partitions are populated;
    // falls back to the other partition when one is empty. With replacement.
    std::vector<const Transition*> sample(std::size_t batch, RngStream& rng) const {
        if (size() == 0) throw std::runtime_error("ReplayBuffer: empty");
        if (batch == 0) throw std::invalid_argument("ReplayBuffer: zero batch");
        std::size_t n_pri;
        if (priority_.empty()) n_pri = 0;
        else if (regular_.empty()) n_pri = batch;
        else
            n_pri = static_cast<std::size_t>(
                std::ceil(rho_ * static_cast<double>(batch)));
        n_pri = std::min(n_pri, batch);
        std::vector<const Transition*> out;
        out.reserve(batch);
        for (std::size_t i = 0; i < n_pri; ++i)
            out.push_back(&priority_[rng.index(priority_.size())]);
        for (std::size_t i = n_pri; i < batch; ++i)
            out.push_back(&regular_[rng.index(regular_.size())]);
        return out;
    }

private:
    std::size_t capacity_;
    double rho_;
    std::uint64_t next_id_ = 1;
    std::deque<Transition> priority_, regular_;
};

// ---------------------------------------------------------------------------
// TD update: delta = r + discount * max_{a' in A'} Q(s',a') - Q(s,a), with the
// bootstrap term treated as a constant. Huber loss summed over the batch, one
// Adam step.
// ---------------------------------------------------------------------------

// max_{a' in A'} Q(s', a') per transition (0 for terminal), computed without
// gradients. Action head contributions cache by text id, so each distinct
// next-action text is encoded once per call.
template <typename Real>
std::vector<double> td_bootstrap(const QNetwork<Real>& net, const TextPool& pool,
                                 const std::vector<const Transition*>& batch) {
    std::unordered_map<std::uint32_t, double> action_part;
    auto action_contrib = [&](std::uint32_t text_id) {
        auto it = action_part.find(text_id);
        if (it == action_part.end())
            it = action_part.emplace(text_id, net.action_score(pool.text(text_id))).first;
        return it->second;
    };
    std::vector<double> bootstrap(batch.size(), 0.0);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Transition& t = *batch[b];
        if (t.done) continue;
        const std::vector<Real> h_next = net.encode_state(
            pool.text(t.next_obs_prev), pool.text(t.next_inv), pool.text(t.next_look));
        const double base = net.state_score(h_next);
        double best = -std::numeric_limits<double>::infinity();
        for (std::uint32_t a : *t.next_valid) best = std::max(best, action_contrib(a));
        bootstrap[b] = base + best;
    }
    return bootstrap;
}

// Sum of Huber(delta) over the batch with the bootstrap held constant;
// accumulates gradients into the store when asked.
template <typename Real>
double td_loss(QNetwork<Real>& net, const TextPool& pool,
               const std::vector<const Transition*>& batch,
               const std::vector<double>& bootstrap, double discount, bool with_grad) {
    ParamStore<Real>& ps = net.params();
    const std::size_t H = net.hidden();
    const Tensor<Real>& embed = ps.value("embed");
    const Tensor<Real>& W = ps.value("head.W");

    double loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Transition& t = *batch[b];
        const std::array<std::pair<const char*, std::uint32_t>, 4> parts{
            std::pair<const char*, std::uint32_t>{"gru_o", t.obs_prev},
            {"gru_i", t.inv},
            {"gru_l", t.look},
            {"gru_a", t.action}};
        std::array<GruTrace<Real>, 4> traces;
        double q = static_cast<double>(ps.value("head.b").data[0]);
        for (std::size_t p = 0; p < 4; ++p) {
            traces[p] = gru_forward(ps, parts[p].first, embed,
                                    net.ids_of(pool.text(parts[p].second)));
            const auto& h = traces[p].output();
            for (std::size_t i = 0; i < H; ++i)
                q += static_cast<double>(W.data[p * H + i]) * static_cast<double>(h[i]);
        }
        const double delta = t.reward + discount * bootstrap[b] - q;
        loss += huber(delta);
        if (!with_grad) continue;
        const double dq = -huber_grad(delta);

        Tensor<Real>& dW = ps.grad("head.W");
        ps.grad("head.b").data[0] += static_cast<Real>(dq);
        for (std::size_t p = 0; p < 4; ++p) {
            const auto& h = traces[p].output();
            std::vector<Real> dh(H);
            for (std::size_t i = 0; i < H; ++i) {
                dW.data[p * H + i] += static_cast<Real>(dq * static_cast<double>(h[i]));
                dh[i] = static_cast<Real>(dq * static_cast<double>(W.data[p * H + i]));
            }
            gru_backward(ps, parts[p].first, "embed", traces[p], dh);
        }
    }
    return loss;
}

template <typename Real>
double td_update(QNetwork<Real>& net, AdamState<Real>& adam, const TextPool& pool,
                 const std::vector<const Transition*>& batch, double discount) {
    if (batch.empty()) throw std::invalid_argument("td_update: empty batch");
    const std::vector<double> bootstrap = td_bootstrap(net, pool, batch);
    net.params().zero_grad();
    const double loss = td_loss(net, pool, batch, bootstrap, discount, true);
    if (!std::isfinite(loss)) throw std::runtime_error("td_update: non-finite loss");
    adam.step(net.params());
    return loss;
}

}  // namespace lge
