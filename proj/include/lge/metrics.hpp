#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "lge/suite.hpp"

namespace lge {

// ---------------------------------------------------------------------------
// Ranking metrics
// ---------------------------------------------------------------------------

struct RankResult {
    int rank = 0;        // competition ranking, 1-based
    double garr = 0.0;   // 1 / rank
    double percent = 0.0;  // 100 * rank / |actions|
};

// Rank of the gold action under the given scores; ties do not worsen rank.
inline RankResult gold_action_rank(const std::vector<double>& scores,
                                   const std::vector<std::string>& actions,
                                   const std::string& gold) {
    if (scores.size() != actions.size())
        throw std::invalid_argument("gold_action_rank: scores/actions size mismatch");
    std::size_t gold_idx = actions.size();
    for (std::size_t i = 0; i < actions.size(); ++i)
        if (actions[i] == gold) {
            gold_idx = i;
            break;
        }
    if (gold_idx == actions.size())
        throw std::invalid_argument("gold_action_rank: gold action absent");
    const double gs = scores[gold_idx];
    int above = 0;
    for (double s : scores)
        if (s > gs) ++above;
    RankResult r;
    r.rank = 1 + above;
    r.garr = 1.0 / static_cast<double>(r.rank);
    r.percent = 100.0 * static_cast<double>(r.rank) / static_cast<double>(actions.size());
    return r;
}

// Set intersection on rendered texts; sorted unique result.
inline std::vector<std::string> relevant_set(const std::vector<std::string>& gold_actions,
                                             const std::vector<std::string>& valid_actions) {
    std::set<std::string> gold(gold_actions.begin(), gold_actions.end());
    std::set<std::string> out;
    for (const std::string& a : valid_actions)
        if (gold.count(a)) out.insert(a);
    return {out.begin(), out.end()};
}

// Recall of the relevant set by the predicted set; empty relevant set yields
// a skip marker that aggregation excludes.
inline std::optional<double> rsr(const std::vector<std::string>& predicted,
                                 const std::vector<std::string>& relevant) {
    if (relevant.empty()) return std::nullopt;
    std::unordered_set<std::string> pred(predicted.begin(), predicted.end());
    std::size_t hit = 0;
    for (const std::string& a : relevant)
        if (pred.count(a)) ++hit;
    return static_cast<double>(hit) / static_cast<double>(relevant.size());
}

// Step-interpolated average precision with tied scores grouped at one
// threshold. Zero positives yields a skip marker.
inline std::optional<double> average_precision(const std::vector<bool>& labels,
                                               const std::vector<double>& scores) {
    if (labels.size() != scores.size())
        throw std::invalid_argument("average_precision: size mismatch");
    std::size_t positives = 0;
    for (bool l : labels)
        if (l) ++positives;
    if (positives == 0) return std::nullopt;

    std::vector<std::size_t> idx(labels.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0, recall_prev = 0.0;
    std::size_t tp = 0, seen = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            if (labels[idx[j]]) ++tp;
            ++seen;
            ++j;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
        i = j;
    }
    return ap;
}

// ---------------------------------------------------------------------------
// Gold-frequency baselines
// ---------------------------------------------------------------------------

enum class BaselineMode { PerTask, Global };

struct BaselinePredictor {
    BaselineMode mode = BaselineMode::PerTask;
    int task_type = -1;  // -1 for global
    std::set<std::string> members;

    bool relevant(const std::string& action) const { return members.count(action) != 0; }

    std::vector<double> score_all(const std::vector<std::string>& actions) const {
        std::vector<double> out(actions.size());
        for (std::size_t i = 0; i < actions.size(); ++i)
            out[i] = relevant(actions[i]) ? 1.0 : 0.0;
        return out;
    }
};

// Top-50 most-used gold actions over training variations, per task type or
// globally. Count ties break by lexicographic text.
inline BaselinePredictor build_baseline(BaselineMode mode, const Suite& suite,
                                        int task_type = -1, std::size_t top = 50) {
    std::map<std::string, int> counts;
    for (int g = 0; g < suite.task_count(); ++g) {
        if (suite.by_task[static_cast<std::size_t>(g)].empty()) continue;
        if (mode == BaselineMode::PerTask && g != task_type) continue;
        for (int v : suite.splits[static_cast<std::size_t>(g)].train)
            for (const Action& a : suite.at(g, v).gold.actions) ++counts[a.text];
    }
    std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    BaselinePredictor p;
    p.mode = mode;
    p.task_type = mode == BaselineMode::PerTask ? task_type : -1;
    for (std::size_t i = 0; i < ranked.size() && i < top; ++i)
        p.members.insert(ranked[i].first);
    return p;
}

// ---------------------------------------------------------------------------
// Step evaluations and report aggregation
// ---------------------------------------------------------------------------

// One evaluation point: the valid set at a gold-replay step, the scores under
// the Guide, the gold action and the relevant set.
struct StepEval {
    int task_type = 0;
    int variation = 0;
    int step = 0;
    std::vector<std::string> valid;
    std::vector<double> guide_scores;
    std::string gold_action;
    std::vector<std::string> relevant;
};

struct GuideMetricsRow {
    std::string model;
    std::map<int, double> rsr_at_k;  // k -> mean RSR
    double map = 0.0;
    bool has_rank = false;
    double gar_mean = 0.0, gar_std = 0.0, gar_percent = 0.0, garr = 0.0;
    std::size_t steps = 0;
};

namespace metrics_detail {

inline std::vector<std::string> top_k_texts(const std::vector<std::string>& actions,
                                            const std::vector<double>& scores,
                                            std::size_t k) {
    std::vector<std::size_t> idx(actions.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < idx.size() && i < k; ++i) out.push_back(actions[idx[i]]);
    return out;
}

}  // namespace metrics_detail

// Aggregates one score source over step evals. `scores_of` maps a StepEval to
// scores aligned with its valid set. MAP macro-averages per-step AP within a
// variation, then across variations. Ranks are only meaningful for the Guide.
template <typename ScoreFn>
GuideMetricsRow aggregate_model_metrics(const std::string& model,
                                        const std::vector<StepEval>& evals,
                                        ScoreFn&& scores_of, bool with_rank,
                                        std::vector<int> ks = {10, 20, 50},
                                        bool predicted_is_members = false) {
    GuideMetricsRow row;
    row.model = model;
    row.has_rank = with_rank;
    std::map<int, std::pair<double, std::size_t>> rsr_acc;
    std::map<std::pair<int, int>, std::pair<double, std::size_t>> ap_by_variation;
    std::vector<double> ranks, percents, garrs;

    for (const StepEval& e : evals) {
        const std::vector<double> scores = scores_of(e);
        for (int k : ks) {
            std::vector<std::string> pred;
            if (predicted_is_members) {
                for (std::size_t i = 0; i < e.valid.size(); ++i)
                    if (scores[i] > 0.0) pred.push_back(e.valid[i]);
            } else {
                pred = metrics_detail::top_k_texts(e.valid, scores,
                                                   static_cast<std::size_t>(k));
            }
            if (auto r = rsr(pred, e.relevant)) {
                rsr_acc[k].first += *r;
                rsr_acc[k].second += 1;
            }
        }
        std::unordered_set<std::string> rel(e.relevant.begin(), e.relevant.end());
        std::vector<bool> labels(e.valid.size());
        for (std::size_t i = 0; i < e.valid.size(); ++i) labels[i] = rel.count(e.valid[i]) != 0;
        if (auto ap = average_precision(labels, scores)) {
            auto& acc = ap_by_variation[{e.task_type, e.variation}];
            acc.first += *ap;
            acc.second += 1;
        }
        if (with_rank) {
            RankResult r = gold_action_rank(scores, e.valid, e.gold_action);
            ranks.push_back(static_cast<double>(r.rank));
            percents.push_back(r.percent);
            garrs.push_back(r.garr);
        }
        ++row.steps;
    }

    for (auto& [k, acc] : rsr_acc)
        row.rsr_at_k[k] = acc.second ? acc.first / static_cast<double>(acc.second) : 0.0;
    double map_sum = 0.0;
    for (auto& [key, acc] : ap_by_variation)
        map_sum += acc.first / static_cast<double>(acc.second);
    row.map = ap_by_variation.empty() ? 0.0
                                      : map_sum / static_cast<double>(ap_by_variation.size());
    if (with_rank && !ranks.empty()) {
        const double n = static_cast<double>(ranks.size());
        for (double r : ranks) row.gar_mean += r;
        row.gar_mean /= n;
        for (double r : ranks) row.gar_std += (r - row.gar_mean) * (r - row.gar_mean);
        row.gar_std = std::sqrt(row.gar_std / n);
        for (double p : percents) row.gar_percent += p;
        row.gar_percent /= n;
        for (double g : garrs) row.garr += g;
        row.garr /= n;
    }
    return row;
}

// ---------------------------------------------------------------------------
// Table rendering (aligned text + CSV) and a minimal SVG bar chart.
// ---------------------------------------------------------------------------

struct TextTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string render() const {
        std::vector<std::size_t> width(header.size());
        auto widen = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i)
                width[i] = std::max(width[i], r[i].size());
        };
        widen(header);
        for (const auto& r : rows) widen(r);
        std::ostringstream os;
        auto emit = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                os << r[i] << std::string(width[i] - r[i].size() + 2, ' ');
            }
            os << '\n';
        };
        emit(header);
        std::size_t total = 0;
        for (std::size_t w : width) total += w + 2;
        os << std::string(total, '-') << '\n';
        for (const auto& r : rows) emit(r);
        return os.str();
    }

    std::string csv() const {
        std::ostringstream os;
        auto emit = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) os << ',';
                bool quote = r[i].find_first_of(",\"\n") != std::string::npos;
                if (quote) {
                    os << '"';
                    for (char c : r[i]) {
                        if (c == '"') os << '"';
                        os << c;
                    }
                    os << '"';
                } else {
                    os << r[i];
                }
            }
            os << '\n';
        };
        emit(header);
        for (const auto& r : rows) emit(r);
        return os.str();
    }
};

inline std::string format_num(double v, int digits = 4) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

inline TextTable guide_metrics_table(const std::vector<GuideMetricsRow>& rows) {
    TextTable t;
    t.header = {"model", "top-k", "RSR", "MAP", "GAR", "GAR%", "GARR"};
    for (const GuideMetricsRow& r : rows) {
        bool first = true;
        for (auto it = r.rsr_at_k.rbegin(); it != r.rsr_at_k.rend(); ++it) {
            std::vector<std::string> row;
            row.push_back(first ? r.model : "");
            row.push_back(std::to_string(it->first));
            row.push_back(format_num(it->second, 3));
            row.push_back(format_num(r.map, 3));
            if (first && r.has_rank) {
                row.push_back(format_num(r.gar_mean, 1) + " +- " + format_num(r.gar_std, 1));
                row.push_back(format_num(r.gar_percent, 1));
                row.push_back(format_num(r.garr, 2));
            } else {
                row.insert(row.end(), {first ? "N/A" : "", first ? "N/A" : "",
                                       first ? "N/A" : ""});
            }
            t.rows.push_back(std::move(row));
            first = false;
        }
    }
    return t;
}

// Per-task return table with an Avg row and a Delta column
// (best guided run minus the unguided baseline).
inline TextTable agent_report_table(const std::vector<std::string>& models,
                                    const std::vector<std::string>& task_names,
                                    const std::vector<std::vector<double>>& scores,
                                    std::size_t baseline_col = 0) {
    TextTable t;
    t.header.push_back("task");
    for (const std::string& m : models) t.header.push_back(m);
    t.header.push_back("delta");
    std::vector<double> sums(models.size(), 0.0);
    for (std::size_t r = 0; r < task_names.size(); ++r) {
        std::vector<std::string> row{task_names[r]};
        double best_other = -1e300;
        for (std::size_t c = 0; c < models.size(); ++c) {
            row.push_back(format_num(scores[r][c], 3));
            sums[c] += scores[r][c];
            if (c != baseline_col) best_other = std::max(best_other, scores[r][c]);
        }
        const double delta = best_other - scores[r][baseline_col];
        std::string arrow = delta > 0 ? " (+)" : (delta < 0 ? " (-)" : "");
        row.push_back(format_num(delta, 3) + arrow);
        t.rows.push_back(std::move(row));
    }
    std::vector<std::string> avg{"Avg."};
    double best_other = -1e300;
    std::vector<double> means(models.size());
    for (std::size_t c = 0; c < models.size(); ++c) {
        means[c] = sums[c] / static_cast<double>(task_names.size());
        avg.push_back(format_num(means[c], 3));
        if (c != baseline_col) best_other = std::max(best_other, means[c]);
    }
    const double delta = best_other - means[baseline_col];
    avg.push_back(format_num(delta, 3) + (delta > 0 ? " (+)" : (delta < 0 ? " (-)" : "")));
    t.rows.push_back(std::move(avg));
    return t;
}

inline std::string svg_bar_chart(const std::vector<std::string>& labels,
                                 const std::vector<double>& values,
                                 const std::string& title) {
    const int bar_w = 46, gap = 18, h = 220, left = 40, bottom = 48;
    double vmax = 1e-9;
    for (double v : values) vmax = std::max(vmax, v);
    const int width = left + static_cast<int>(labels.size()) * (bar_w + gap) + 20;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << h + bottom + 30 << "\">\n";
    os << "<text x=\"" << left << "\" y=\"18\" font-size=\"14\">" << title << "</text>\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double frac = values[i] / vmax;
        const int bh = static_cast<int>(frac * h);
        const int x = left + static_cast<int>(i) * (bar_w + gap);
        const int y = 24 + h - bh;
        os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar_w << "\" height=\""
           << bh << "\" fill=\"#4878a8\"/>\n";
        os << "<text x=\"" << x << "\" y=\"" << y - 4 << "\" font-size=\"11\">"
           << format_num(values[i], 3) << "</text>\n";
        os << "<text x=\"" << x << "\" y=\"" << 24 + h + 16 << "\" font-size=\"11\">"
           << labels[i] << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace lge
