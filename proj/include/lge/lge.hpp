#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lge/checkpoint.hpp"
#include "lge/explorer.hpp"
#include "lge/guide.hpp"
#include "lge/suite.hpp"

namespace lge {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Epsilon schedule
// ---------------------------------------------------------------------------

struct EpsilonSchedule {
    enum class Kind { Fixed, Increasing };
    Kind kind = Kind::Fixed;
    double value = 0.1;            // fixed
    std::uint64_t total_steps = 1;  // increasing ramp length

    static EpsilonSchedule fixed(double v) {
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument("EpsilonSchedule: fixed value outside [0,1]");
        return EpsilonSchedule{Kind::Fixed, v, 1};
    }
    static EpsilonSchedule increasing(std::uint64_t total) {
        if (total == 0) throw std::invalid_argument("EpsilonSchedule: zero ramp");
        return EpsilonSchedule{Kind::Increasing, 0.0, total};
    }
};

// Fixed schedules are constant; increasing ramps linearly from 0 to 1.
inline double epsilon_at(const EpsilonSchedule& s, std::uint64_t step) {
    if (s.kind == EpsilonSchedule::Kind::Fixed) return s.value;
    return std::min(1.0, static_cast<double>(step) / static_cast<double>(s.total_steps));
}

// ---------------------------------------------------------------------------
// Candidate choice: with probability 1 - epsilon the Guide's top-k, else the
// full valid set. The pruned subset is returned in the valid-action order, so
// k >= |A| makes pruning a literal no-op.
// ---------------------------------------------------------------------------

template <typename Real>
std::vector<std::size_t> choose_candidates(GuideScorer<Real>* scorer, double eps,
                                           const std::string& tau,
                                           const std::vector<std::string>& valid_texts,
                                           std::size_t k, RngStream& rng) {
    if (valid_texts.empty())
        throw std::invalid_argument("choose_candidates: empty valid set");
    const double u = rng.uniform();
    std::vector<std::size_t> all(valid_texts.size());
    std::iota(all.begin(), all.end(), 0);
    if (!(u > eps) || scorer == nullptr) return all;
    const std::vector<double> scores = scorer->score_all(tau, valid_texts);
    std::vector<std::size_t> picked = top_k_indices(scores, k);
    std::sort(picked.begin(), picked.end());
    return picked;
}

// ---------------------------------------------------------------------------
// JSON-lines sinks. Records carry no timestamps so reruns are byte-identical.
// ---------------------------------------------------------------------------

class JsonlSink {
public:
    JsonlSink() = default;

    explicit JsonlSink(const std::string& path, bool append = false) {
        open(path, append);
    }

    void open(const std::string& path, bool append = false) {
        file_ = std::make_unique<std::ofstream>(
            path, append ? std::ios::app | std::ios::binary
                         : std::ios::trunc | std::ios::binary);
        if (!*file_) throw std::runtime_error("JsonlSink: cannot open " + path);
    }

    void write(const json& record) {
        records_.push_back(record);
        if (file_) *file_ << record.dump() << '\n';
    }

    void flush() {
        if (file_) file_->flush();
    }

    const std::vector<json>& records() const { return records_; }

private:
    std::vector<json> records_;
    std::unique_ptr<std::ofstream> file_;
};

// ---------------------------------------------------------------------------
// Training configuration for one agent run (one task type, one network).
// ---------------------------------------------------------------------------

struct LGEConfig {
    std::size_t k = 20;
    EpsilonSchedule epsilon = EpsilonSchedule::fixed(0.1);
    int workers = 1;                    // env slots, interleaved strictly
    std::uint64_t steps_per_worker = 20'000;
    std::uint64_t eval_every = 1'000;   // total env steps between evaluations
    int eval_variations = 10;
    bool eval_full_action_set = false;
    std::size_t update_every = 1;
    std::uint64_t run_seed = 0;
    std::string config_hash;
    std::string suite_hash;
};

struct EvalResult {
    std::vector<std::pair<int, double>> per_variation;  // (variation, return)
    double mean_return = 0.0;
};

// Greedy evaluation over Guide-pruned candidates (epsilon treated as 0);
// `full_action_set` disables pruning.
template <typename Real>
EvalResult evaluate_policy(const QNetwork<Real>& net, GuideScorer<Real>* scorer,
                           const Suite& suite, int task_type,
                           const std::vector<int>& variations, std::size_t k,
                           bool full_action_set) {
    EvalResult out;
    for (int v : variations) {
        EnvInstance env(suite.at(task_type, v).world);
        Observation obs = env.reset();
        const std::string& tau = env.spec().description;
        double ret = 0.0;
        std::string prev_effect = obs.obs;
        while (!env.done()) {
            const std::vector<Action> valid = env.valid_actions();
            std::vector<std::string> texts;
            texts.reserve(valid.size());
            for (const Action& a : valid) texts.push_back(a.text);
            std::vector<std::size_t> cand(texts.size());
            std::iota(cand.begin(), cand.end(), 0);
            if (scorer && !full_action_set) {
                const std::vector<double> scores = scorer->score_all(tau, texts);
                cand = top_k_indices(scores, k);
                std::sort(cand.begin(), cand.end());
            }
            std::vector<std::string> cand_texts;
            cand_texts.reserve(cand.size());
            for (std::size_t i : cand) cand_texts.push_back(texts[i]);
            const std::vector<Real> h_s =
                net.encode_state(prev_effect, obs.inventory, obs.look);
            const std::size_t pick = select_action_greedy(net, h_s, cand_texts);
            auto r = env.step(valid[cand[pick]]);
            ret += r.reward;
            prev_effect = r.obs.obs;
            obs = r.obs;
        }
        out.per_variation.emplace_back(v, ret);
        out.mean_return += ret;
    }
    if (!out.per_variation.empty())
        out.mean_return /= static_cast<double>(out.per_variation.size());
    return out;
}

// Mean of the last 10% of periodic evaluation scores (at least one).
inline double final_score(const std::vector<double>& eval_scores) {
    if (eval_scores.empty()) throw std::invalid_argument("final_score: no evaluations");
    const std::size_t n = eval_scores.size();
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    double sum = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) sum += eval_scores[i];
    return sum / static_cast<double>(tail);
}

struct TrainAgentResult {
    std::vector<double> eval_scores;
    double final_eval = 0.0;
    std::uint64_t total_steps = 0;
    std::uint64_t episodes = 0;
};

// ---------------------------------------------------------------------------
// The training loop: per-step Guide pruning, epsilon-mixed candidate sets,
// stochastic policy, replay and TD updates. Strictly deterministic for any
// worker count because slots advance in fixed rotation within one thread.
// ---------------------------------------------------------------------------

template <typename Real>
TrainAgentResult train_agent(QNetwork<Real>& net, GuideScorer<Real>* scorer,
                             const Suite& suite, int task_type, const LGEConfig& cfg,
                             JsonlSink* train_log, JsonlSink* trajectory_log,
                             JsonlSink* eval_log) {
    const auto& splits = suite.splits[static_cast<std::size_t>(task_type)];
    if (splits.train.empty()) throw std::invalid_argument("train_agent: empty train split");
    const ExplorerConfig& xcfg = net.config();

    RngStream rollout_rng(cfg.run_seed, "rollout-" + std::to_string(task_type));
    RngStream eval_rng(cfg.run_seed, "eval-" + std::to_string(task_type));

    ReplayBuffer buffer(xcfg.buffer_capacity, xcfg.priority_fraction);
    TextPool pool;
    AdamState<Real> adam(net.params(), {.lr = xcfg.lr});

    auto header = [&](const char* kind) {
        return json{{"type", kind},
                    {"config_hash", cfg.config_hash},
                    {"suite_hash", cfg.suite_hash},
                    {"task_type", task_type}};
    };
    if (train_log) train_log->write(header("train"));
    if (trajectory_log) trajectory_log->write(header("trajectory"));
    if (eval_log) eval_log->write(header("eval"));

    struct Slot {
        EnvInstance env;
        std::string prev_effect;
        Observation obs;
        std::vector<Action> valid;
        double episode_return = 0.0;
        std::uint64_t episode = 0;
    };

    auto sample_variation = [&]() {
        return splits.train[rollout_rng.index(splits.train.size())];
    };
    auto texts_of = [](const std::vector<Action>& acts) {
        std::vector<std::string> out;
        out.reserve(acts.size());
        for (const Action& a : acts) out.push_back(a.text);
        return out;
    };

    std::vector<Slot> slots;
    std::uint64_t episodes = 0;
    for (int wkr = 0; wkr < cfg.workers; ++wkr) {
        Slot s{EnvInstance(suite.at(task_type, sample_variation()).world), "", {}, {}, 0.0,
               ++episodes};
        s.obs = s.env.reset();
        s.prev_effect = s.obs.obs;
        s.valid = s.env.valid_actions();
        slots.push_back(std::move(s));
    }

    TrainAgentResult result;
    const std::uint64_t total_budget =
        static_cast<std::uint64_t>(cfg.workers) * cfg.steps_per_worker;
    std::uint64_t step = 0;
    std::uint64_t next_eval = cfg.eval_every;

    auto run_eval = [&]() {
        const std::vector<int>& test = splits.test;
        std::vector<int> vars;
        if (static_cast<int>(test.size()) <= cfg.eval_variations) {
            vars = test;
        } else {
            std::vector<int> shuffled = test;
            std::shuffle(shuffled.begin(), shuffled.end(), eval_rng.engine());
            vars.assign(shuffled.begin(),
                        shuffled.begin() + cfg.eval_variations);
            std::sort(vars.begin(), vars.end());
        }
        EvalResult ev = evaluate_policy(net, scorer, suite, task_type, vars, cfg.k,
                                        cfg.eval_full_action_set);
        result.eval_scores.push_back(ev.mean_return);
        if (eval_log) {
            json rec{{"step", step}, {"score", ev.mean_return}};
            json per = json::array();
            for (auto [v, r] : ev.per_variation) per.push_back({{"variation", v}, {"ret", r}});
            rec["per_variation"] = per;
            eval_log->write(rec);
        }
    };

    while (step < total_budget) {
        for (Slot& slot : slots) {
            if (step >= total_budget) break;
            const std::string& tau = slot.env.spec().description;
            const double eps = epsilon_at(cfg.epsilon, step);
            const std::vector<std::string> valid_texts = texts_of(slot.valid);
            const std::vector<std::size_t> cand =
                choose_candidates(scorer, eps, tau, valid_texts, cfg.k, rollout_rng);
            std::vector<std::string> cand_texts;
            cand_texts.reserve(cand.size());
            for (std::size_t i : cand) cand_texts.push_back(valid_texts[i]);

            const std::vector<Real> h_s =
                net.encode_state(slot.prev_effect, slot.obs.inventory, slot.obs.look);
            const std::size_t pick = select_action_train(net, h_s, cand_texts, rollout_rng);
            const Action& action = slot.valid[cand[pick]];
            if (!(cand[pick] < slot.valid.size()))
                throw std::logic_error("train_agent: candidate outside the valid set");

            Transition tr;
            tr.obs_prev = pool.intern(slot.prev_effect);
            tr.inv = pool.intern(slot.obs.inventory);
            tr.look = pool.intern(slot.obs.look);
            tr.action = pool.intern(action.text);

            auto sr = slot.env.step(action);
            ++step;
            slot.episode_return += sr.reward;

            tr.reward = sr.reward;
            tr.done = sr.done;
            tr.next_obs_prev = pool.intern(sr.obs.obs);
            tr.next_inv = pool.intern(sr.obs.inventory);
            tr.next_look = pool.intern(sr.obs.look);
            std::vector<Action> next_valid = slot.env.valid_actions();
            auto next_ids = std::make_shared<std::vector<std::uint32_t>>();
            next_ids->reserve(next_valid.size());
            for (const Action& a : next_valid) next_ids->push_back(pool.intern(a.text));
            tr.next_valid = next_ids;
            buffer.store(std::move(tr));

            std::optional<double> loss;
            if (buffer.size() >= xcfg.batch_size && step % cfg.update_every == 0) {
                auto batch = buffer.sample(xcfg.batch_size, rollout_rng);
                loss = td_update(net, adam, pool, batch, xcfg.discount);
            }

            if (trajectory_log)
                trajectory_log->write(json{{"step", step},
                                           {"action_text", action.text},
                                           {"reward", sr.reward},
                                           {"done", sr.done},
                                           {"obs_hash", to_hex(observation_hash(sr.obs))}});
            if (train_log) {
                json rec{{"step", step},
                         {"episode", slot.episode},
                         {"epsilon", eps},
                         {"return", slot.episode_return}};
                rec["loss"] = loss ? json(*loss) : json(nullptr);
                train_log->write(rec);
            }

            if (sr.done) {
                slot.env = EnvInstance(suite.at(task_type, sample_variation()).world);
                slot.obs = slot.env.reset();
                slot.prev_effect = slot.obs.obs;
                slot.valid = slot.env.valid_actions();
                slot.episode_return = 0.0;
                slot.episode = ++episodes;
            } else {
                slot.obs = sr.obs;
                slot.prev_effect = sr.obs.obs;
                slot.valid = std::move(next_valid);
            }

            if (step >= next_eval) {
                run_eval();
                next_eval += cfg.eval_every;
            }
        }
    }
    if (result.eval_scores.empty()) run_eval();
    result.final_eval = final_score(result.eval_scores);
    result.total_steps = step;
    result.episodes = episodes;
    if (train_log) train_log->flush();
    if (trajectory_log) trajectory_log->flush();
    if (eval_log) {
        eval_log->write(json{{"type", "final"}, {"final_score", result.final_eval}});
        eval_log->flush();
    }
    return result;
}

}  // namespace lge
