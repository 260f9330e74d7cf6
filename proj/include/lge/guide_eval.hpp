#pragma once

#include <string>
#include <vector>

#include "lge/guide.hpp"
#include "lge/metrics.hpp"

namespace lge {

// Step evaluations along gold replays of the chosen variations: the valid
// set, Guide scores, the gold action and the relevant set at every step.
template <typename Real>
std::vector<StepEval> build_step_evals(const Suite& suite, GuideScorer<Real>& scorer,
                                       int task_type, const std::vector<int>& variations) {
    std::vector<StepEval> evals;
    for (int v : variations) {
        const SuiteVariation& var = suite.at(task_type, v);
        const std::vector<std::string> gold_texts = var.gold.texts();
        EnvInstance env(var.world);
        env.reset();
        for (std::size_t t = 0; t < var.gold.actions.size(); ++t) {
            StepEval e;
            e.task_type = task_type;
            e.variation = v;
            e.step = static_cast<int>(t);
            for (const Action& a : env.valid_actions()) e.valid.push_back(a.text);
            e.guide_scores = scorer.score_all(var.spec.description, e.valid);
            e.gold_action = gold_texts[t];
            e.relevant = relevant_set(gold_texts, e.valid);
            evals.push_back(std::move(e));
            if (env.step(var.gold.actions[t]).done) break;
        }
    }
    return evals;
}

struct GuideEvaluation {
    std::vector<StepEval> evals;
    double mean_action_set = 0.0;
    std::vector<GuideMetricsRow> rows;  // guide, G_tau, G_g
};

// Table-1-style evaluation on one split: Guide scores plus the per-task and
// global gold-frequency baselines.
template <typename Real>
GuideEvaluation evaluate_guide(const Suite& suite, GuideScorer<Real>& scorer, Split split,
                               std::vector<int> ks = {10, 20, 50}) {
    GuideEvaluation out;
    BaselinePredictor global = build_baseline(BaselineMode::Global, suite);
    std::vector<BaselinePredictor> per_task(suite.by_task.size());
    for (int g = 0; g < suite.task_count(); ++g) {
        if (suite.by_task[static_cast<std::size_t>(g)].empty()) continue;
        per_task[static_cast<std::size_t>(g)] =
            build_baseline(BaselineMode::PerTask, suite, g);
        auto stepevals = build_step_evals(suite, scorer, g,
                                          suite.splits[static_cast<std::size_t>(g)].of(split));
        out.evals.insert(out.evals.end(), stepevals.begin(), stepevals.end());
    }
    for (const StepEval& e : out.evals)
        out.mean_action_set += static_cast<double>(e.valid.size());
    if (!out.evals.empty()) out.mean_action_set /= static_cast<double>(out.evals.size());

    out.rows.push_back(aggregate_model_metrics(
        "Guide", out.evals, [](const StepEval& e) { return e.guide_scores; }, true, ks));
    out.rows.push_back(aggregate_model_metrics(
        "G_tau", out.evals,
        [&](const StepEval& e) {
            return per_task[static_cast<std::size_t>(e.task_type)].score_all(e.valid);
        },
        false, ks, true));
    out.rows.push_back(aggregate_model_metrics(
        "G_g", out.evals, [&](const StepEval& e) { return global.score_all(e.valid); },
        false, ks, true));
    return out;
}

// Desk-scale generalization check over object-bearing gold steps: where the
// gold action names the (held-out) target object, it must outrank every
// same-verb action on a different object.
template <typename Real>
double gold_vs_distractor_winrate(const Suite& suite, GuideScorer<Real>& scorer,
                                  Split split) {
    std::size_t wins = 0, total = 0;
    for (int g = 0; g < suite.task_count(); ++g) {
        if (suite.by_task[static_cast<std::size_t>(g)].empty()) continue;
        for (int v : suite.splits[static_cast<std::size_t>(g)].of(split)) {
            const SuiteVariation& var = suite.at(g, v);
            const std::vector<std::string> gold_texts = var.gold.texts();
            const std::unordered_set<std::string> gold_set(gold_texts.begin(),
                                                           gold_texts.end());
            const std::string& noun =
                var.world->objects[static_cast<std::size_t>(var.world->target)].noun;
            auto evals = build_step_evals(suite, scorer, g, {v});
            for (const StepEval& e : evals) {
                if (e.gold_action.find(noun) == std::string::npos) continue;
                const std::string verb =
                    e.gold_action.substr(0, e.gold_action.find(' '));
                double gold_score = 0.0;
                bool found = false;
                double best_distractor = -1e300;
                for (std::size_t i = 0; i < e.valid.size(); ++i) {
                    if (e.valid[i] == e.gold_action) {
                        gold_score = e.guide_scores[i];
                        found = true;
                    } else if (!gold_set.count(e.valid[i]) &&
                               e.valid[i].find(noun) == std::string::npos &&
                               e.valid[i].substr(0, e.valid[i].find(' ')) == verb) {
                        best_distractor = std::max(best_distractor, e.guide_scores[i]);
                    }
                }
                if (!found || best_distractor == -1e300) continue;
                ++total;
                if (gold_score > best_distractor) ++wins;
            }
        }
    }
    return total == 0 ? 1.0 : static_cast<double>(wins) / static_cast<double>(total);
}

}  // namespace lge
