#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lge/nn.hpp"
#include "lge/suite.hpp"
#include "lge/textcodec.hpp"

namespace lge {

// ---------------------------------------------------------------------------
// Guide: one shared text encoder scoring action relevance against the task
// description. The encoder never sees state text; its only inputs are the
// description and candidate action strings.
// ---------------------------------------------------------------------------

struct GuideConfig {
    std::size_t hidden = 32;  // embedding size == hidden size
    double temperature = 0.05;
    double lr = 5e-5;
    std::size_t batch_size = 128;
    int epochs = 10;
    std::size_t max_len = 32;
    int negatives_per_positive = 1;
    double token_dropout = 0.0;  // train-time probability of masking a token to UNK
};

template <typename Real>
struct Guide {
    Vocabulary vocab;
    ParamStore<Real> params;  // "embed" + "enc.*"
    double temperature = 0.05;
    std::size_t max_len = 32;
    std::size_t hidden = 32;

    static Guide init(Vocabulary vocab, const GuideConfig& cfg, std::uint64_t seed) {
        Guide g;
        g.vocab = std::move(vocab);
        g.temperature = cfg.temperature;
        g.max_len = cfg.max_len;
        g.hidden = cfg.hidden;
        if (g.temperature <= 0.0)
            throw std::invalid_argument("Guide: temperature must be positive");
        g.params.add("embed", {g.vocab.size(), cfg.hidden});
        gru_init(g.params, "enc", cfg.hidden, cfg.hidden);
        RngStream rng(seed, "guide-init");
        init_weights(g.params, rng);
        return g;
    }

    TokenIds ids_of(std::string_view text) const {
        TokenIds ids = lge::encode(text, vocab, max_len);
        if (ids.empty()) ids.push_back(Vocabulary::kUnk);
        return ids;
    }

    std::vector<Real> embed(std::string_view text) const {
        return gru_encode(params, "enc", params.value("embed"), ids_of(text));
    }
};

template <typename Real>
double vec_norm(const std::vector<Real>& v) {
    double s = 0.0;
    for (Real x : v) s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
}

template <typename Real>
double vec_dot(const std::vector<Real>& a, const std::vector<Real>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return s;
}

template <typename Real>
double cosine_of(const std::vector<Real>& a, const std::vector<Real>& b) {
    const double na = vec_norm(a), nb = vec_norm(b);
    if (na == 0.0 || nb == 0.0)
        throw std::runtime_error("cosine_of: zero-norm embedding");
    return vec_dot(a, b) / (na * nb);
}

// Cosine in [-1, 1]; the ranking signal with the temperature removed.
template <typename Real>
double guide_cosine(const Guide<Real>& g, std::string_view tau, std::string_view action) {
    if (tau.empty() || action.empty())
        throw std::invalid_argument("guide_cosine: empty text");
    return cosine_of(g.embed(tau), g.embed(action));
}

// s(tau, a) = cos(g(tau), g(a)) / temperature.
template <typename Real>
double similarity(const Guide<Real>& g, std::string_view tau, std::string_view action) {
    return guide_cosine(g, tau, action) / g.temperature;
}

// Scores aligned with the input order; embeddings cached by rendered text
// within the call.
template <typename Real>
std::vector<double> score_actions(const Guide<Real>& g, std::string_view tau,
                                  const std::vector<std::string>& actions) {
    if (actions.empty()) throw std::invalid_argument("score_actions: no actions");
    const std::vector<Real> et = g.embed(tau);
    const double nt = vec_norm(et);
    if (nt == 0.0) throw std::runtime_error("score_actions: zero-norm embedding");
    std::unordered_map<std::string, double> cache;
    std::vector<double> scores(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
        auto it = cache.find(actions[i]);
        if (it == cache.end()) {
            const std::vector<Real> ea = g.embed(actions[i]);
            const double na = vec_norm(ea);
            if (na == 0.0) throw std::runtime_error("score_actions: zero-norm embedding");
            it = cache.emplace(actions[i], vec_dot(et, ea) / (nt * na) / g.temperature).first;
        }
        scores[i] = it->second;
    }
    return scores;
}

// Indices of the k highest scores; ties keep input order. The result is in
// descending score order.
inline std::vector<std::size_t> top_k_indices(const std::vector<double>& scores,
                                              std::size_t k) {
    if (k == 0) throw std::invalid_argument("top_k: k must be >= 1");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(std::min(k, idx.size()));
    return idx;
}

template <typename Real>
std::vector<std::string> top_k(const Guide<Real>& g, std::string_view tau,
                               const std::vector<std::string>& actions, std::size_t k) {
    const std::vector<double> scores = score_actions(g, tau, actions);
    std::vector<std::string> out;
    for (std::size_t i : top_k_indices(scores, k)) out.push_back(actions[i]);
    return out;
}

// Binary relevance at a threshold on the [0,1]-normalized cosine.
template <typename Real>
std::vector<bool> classify_relevant(const Guide<Real>& g, std::string_view tau,
                                    const std::vector<std::string>& actions,
                                    double threshold) {
    if (!std::isfinite(threshold))
        throw std::invalid_argument("classify_relevant: non-finite threshold");
    const std::vector<double> scores = score_actions(g, tau, actions);
    std::vector<bool> labels(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const double normalized = (scores[i] * g.temperature + 1.0) / 2.0;
        labels[i] = normalized >= threshold;
    }
    return labels;
}

// ---------------------------------------------------------------------------
// Training data construction
// ---------------------------------------------------------------------------

struct TrainingTuple {
    int task_type = 0;
    int variation = 0;
    std::string tau, pos, neg;
};

struct NegativePool {
    int task_type = 0;
    std::vector<std::string> actions;  // sorted, unique
};

// Union of valid-action texts along gold replays of up to n_variations
// training variations of one task type.
inline NegativePool build_negative_pool(const Suite& suite, int task_type,
                                        int n_variations = 10) {
    if (task_type < 0 || task_type >= suite.task_count() ||
        suite.by_task[static_cast<std::size_t>(task_type)].empty())
        throw std::invalid_argument("build_negative_pool: unknown task type");
    const auto& train =
        suite.splits[static_cast<std::size_t>(task_type)].train;
    if (train.empty())
        throw std::invalid_argument("build_negative_pool: no training variations");
    const int use = std::min<int>(n_variations, static_cast<int>(train.size()));
    std::set<std::string> pool;
    for (int i = 0; i < use; ++i) {
        const SuiteVariation& var = suite.at(task_type, train[static_cast<std::size_t>(i)]);
        EnvInstance env(var.world);
        env.reset();
        for (const Action& gold_a : var.gold.actions) {
            for (const Action& a : env.valid_actions()) pool.insert(a.text);
            if (env.step(gold_a).done) break;
        }
    }
    NegativePool out;
    out.task_type = task_type;
    out.actions.assign(pool.begin(), pool.end());
    return out;
}

// For every gold action of every training variation, pair the description
// with that action and a sampled hard negative outside the variation's gold
// set. Duplicate (tau, pos, neg) renderings collapse.
inline std::vector<TrainingTuple> build_training_tuples(
    const Suite& suite, const std::vector<NegativePool>& pools, RngStream& rng,
    int negatives_per_positive = 1) {
    std::vector<TrainingTuple> tuples;
    std::set<std::array<std::string, 3>> seen;
    for (int g = 0; g < suite.task_count(); ++g) {
        if (suite.by_task[static_cast<std::size_t>(g)].empty()) continue;
        const NegativePool& pool = pools[static_cast<std::size_t>(g)];
        for (int v : suite.splits[static_cast<std::size_t>(g)].train) {
            const SuiteVariation& var = suite.at(g, v);
            std::unordered_set<std::string> gold_set;
            for (const Action& a : var.gold.actions) gold_set.insert(a.text);
            std::size_t non_gold = 0;
            for (const std::string& a : pool.actions)
                if (!gold_set.count(a)) ++non_gold;
            if (non_gold == 0)
                throw std::runtime_error(
                    "build_training_tuples: pool exhausted of non-gold actions");
            for (const Action& pos : var.gold.actions) {
                for (int n = 0; n < negatives_per_positive; ++n) {
                    std::string neg;
                    do {
                        neg = pool.actions[rng.index(pool.actions.size())];
                    } while (gold_set.count(neg));
                    if (seen.insert({var.spec.description, pos.text, neg}).second)
                        tuples.push_back(TrainingTuple{g, v, var.spec.description, pos.text,
                                                       neg});
                }
            }
        }
    }
    return tuples;
}

// ---------------------------------------------------------------------------
// Contrastive batch loss with in-batch negatives:
//   l = -sum_i log( exp(s(t_i, p_i)) / sum_j [exp(s(t_i, n_j)) + exp(s(t_i, p_j))] )
// ---------------------------------------------------------------------------

// Train-time token masking: each id independently becomes UNK with the given
// probability. Teaches the encoder to tolerate the unknown tokens that
// held-out variations introduce.
inline void apply_token_dropout(TokenIds& ids, double p, RngStream& rng) {
    for (int& id : ids)
        if (rng.uniform() < p) id = Vocabulary::kUnk;
}

template <typename Real>
double batch_loss(Guide<Real>& guide, const std::vector<TrainingTuple>& batch,
                  bool with_grad, double token_dropout = 0.0,
                  RngStream* dropout_rng = nullptr) {
    const std::size_t N = batch.size();
    if (N == 0) throw std::invalid_argument("batch_loss: empty batch");

    // Unique texts: descriptions and actions share the encoder.
    std::vector<std::string> texts;
    std::unordered_map<std::string, std::size_t> text_id;
    auto intern = [&](const std::string& t) {
        auto [it, inserted] = text_id.try_emplace(t, texts.size());
        if (inserted) texts.push_back(t);
        return it->second;
    };
    std::vector<std::size_t> tau_id(N), pos_id(N), neg_id(N);
    for (std::size_t i = 0; i < N; ++i) {
        tau_id[i] = intern(batch[i].tau);
        pos_id[i] = intern(batch[i].pos);
        neg_id[i] = intern(batch[i].neg);
    }

    const std::size_t M = texts.size();
    std::vector<GruTrace<Real>> traces(M);
    std::vector<std::vector<Real>> emb(M);
    std::vector<double> norm(M);
    for (std::size_t m = 0; m < M; ++m) {
        TokenIds ids = guide.ids_of(texts[m]);
        if (dropout_rng && token_dropout > 0.0)
            apply_token_dropout(ids, token_dropout, *dropout_rng);
        traces[m] = gru_forward(guide.params, "enc", guide.params.value("embed"), ids);
        emb[m] = traces[m].output();
        norm[m] = vec_norm(emb[m]);
        if (norm[m] == 0.0) throw std::runtime_error("batch_loss: zero-norm embedding");
    }

    // Row i scores 2N columns: positives first, then negatives.
    auto col_id = [&](std::size_t j) { return j < N ? pos_id[j] : neg_id[j - N]; };
    const double lam = guide.temperature;
    double loss = 0.0;
    std::vector<std::vector<double>> dscore;
    if (with_grad) dscore.assign(N, std::vector<double>(2 * N, 0.0));

    std::vector<double> row(2 * N);
    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t t = tau_id[i];
        for (std::size_t j = 0; j < 2 * N; ++j) {
            const std::size_t c = col_id(j);
            row[j] = vec_dot(emb[t], emb[c]) / (norm[t] * norm[c]) / lam;
        }
        const double mx = *std::max_element(row.begin(), row.end());
        double denom = 0.0;
        for (double s : row) denom += std::exp(s - mx);
        const double lse = mx + std::log(denom);
        loss += lse - row[i];  // column i is this row's own positive
        if (with_grad) {
            for (std::size_t j = 0; j < 2 * N; ++j)
                dscore[i][j] = std::exp(row[j] - mx) / denom;
            dscore[i][i] -= 1.0;
        }
    }

    if (with_grad) {
        // d(cos)/du = (v/(|u||v|) - cos * u/|u|^2); score = cos / lambda.
        std::vector<std::vector<double>> demb(M, std::vector<double>(guide.hidden, 0.0));
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t t = tau_id[i];
            for (std::size_t j = 0; j < 2 * N; ++j) {
                const double w = dscore[i][j];
                if (w == 0.0) continue;
                const std::size_t c = col_id(j);
                const double inv = 1.0 / (norm[t] * norm[c]);
                const double cos_tc = vec_dot(emb[t], emb[c]) * inv;
                for (std::size_t d = 0; d < guide.hidden; ++d) {
                    const double u = static_cast<double>(emb[t][d]);
                    const double v = static_cast<double>(emb[c][d]);
                    demb[t][d] += w / lam * (v * inv - cos_tc * u / (norm[t] * norm[t]));
                    demb[c][d] += w / lam * (u * inv - cos_tc * v / (norm[c] * norm[c]));
                }
            }
        }
        for (std::size_t m = 0; m < M; ++m) {
            bool any = false;
            for (double d : demb[m])
                if (d != 0.0) any = true;
            if (!any) continue;
            std::vector<Real> dh(guide.hidden);
            for (std::size_t d = 0; d < guide.hidden; ++d)
                dh[d] = static_cast<Real>(demb[m][d]);
            gru_backward(guide.params, "enc", "embed", traces[m], dh);
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// Training loop: one common Guide across all task types.
// ---------------------------------------------------------------------------

struct GuideTrainReport {
    std::vector<double> epoch_mean_loss;
    std::size_t tuples_per_epoch = 0;
};

template <typename Real>
GuideTrainReport train_guide(
    Guide<Real>& guide, const GuideConfig& cfg,
    const std::function<std::vector<TrainingTuple>(int epoch)>& tuple_provider,
    std::uint64_t shuffle_seed,
    const std::function<void(int, double)>& on_epoch = nullptr) {
    AdamState<Real> adam(guide.params, {.lr = cfg.lr});
    RngStream rng(shuffle_seed, "guide-shuffle");
    RngStream dropout_rng(shuffle_seed, "guide-dropout");
    GuideTrainReport report;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<TrainingTuple> tuples = tuple_provider(epoch);
        if (tuples.empty()) throw std::invalid_argument("train_guide: no tuples");
        report.tuples_per_epoch = tuples.size();
        std::shuffle(tuples.begin(), tuples.end(), rng.engine());
        double sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t off = 0; off < tuples.size(); off += cfg.batch_size) {
            const std::size_t end = std::min(off + cfg.batch_size, tuples.size());
            std::vector<TrainingTuple> batch(tuples.begin() + static_cast<std::ptrdiff_t>(off),
                                             tuples.begin() + static_cast<std::ptrdiff_t>(end));
            guide.params.zero_grad();
            const double loss =
                batch_loss(guide, batch, true, cfg.token_dropout, &dropout_rng);
            if (!std::isfinite(loss)) throw std::runtime_error("train_guide: loss diverged");
            adam.step(guide.params);
            sum += loss / static_cast<double>(batch.size());
            ++batches;
        }
        const double mean = sum / static_cast<double>(batches);
        report.epoch_mean_loss.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
    }
    return report;
}

// Convenience: train on a suite with per-epoch negative re-sampling.
template <typename Real>
GuideTrainReport train_guide_on_suite(Guide<Real>& guide, const GuideConfig& cfg,
                                      const Suite& suite,
                                      const std::vector<NegativePool>& pools,
                                      std::uint64_t shuffle_seed,
                                      const std::function<void(int, double)>& on_epoch =
                                          nullptr) {
    RngStream neg_rng(shuffle_seed, "guide-negatives");
    auto provider = [&](int) {
        return build_training_tuples(suite, pools, neg_rng, cfg.negatives_per_positive);
    };
    return train_guide(guide, cfg, provider, shuffle_seed, on_epoch);
}

// Frozen-guide scorer with a persistent embedding cache keyed by text.
template <typename Real>
class GuideScorer {
public:
    explicit GuideScorer(const Guide<Real>& guide) : guide_(guide) {}

    double score(const std::string& tau, const std::string& action) {
        const Entry& t = entry(tau);
        const Entry& a = entry(action);
        return vec_dot(t.emb, a.emb) / (t.norm * a.norm) / guide_.temperature;
    }

    std::vector<double> score_all(const std::string& tau,
                                  const std::vector<std::string>& actions) {
        std::vector<double> out(actions.size());
        const Entry t = entry(tau);  // copy: cache may rehash below
        for (std::size_t i = 0; i < actions.size(); ++i) {
            const Entry& a = entry(actions[i]);
            out[i] = vec_dot(t.emb, a.emb) / (t.norm * a.norm) / guide_.temperature;
        }
        return out;
    }

    const Guide<Real>& guide() const { return guide_; }

private:
    struct Entry {
        std::vector<Real> emb;
        double norm = 0.0;
    };

    const Entry& entry(const std::string& text) {
        auto it = cache_.find(text);
        if (it == cache_.end()) {
            Entry e;
            e.emb = guide_.embed(text);
            e.norm = vec_norm(e.emb);
            if (e.norm == 0.0) throw std::runtime_error("GuideScorer: zero-norm embedding");
            it = cache_.emplace(text, std::move(e)).first;
        }
        return it->second;
    }

    const Guide<Real>& guide_;
    std::unordered_map<std::string, Entry> cache_;
};

}  // namespace lge
