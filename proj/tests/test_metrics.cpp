#include <catch2/catch_amalgamated.hpp>

#include "lge/metrics.hpp"
#include "suite_fixture.hpp"

using namespace lge;
using Catch::Approx;

namespace {

// Quadratic recomputation of average precision from explicit thresholds.
double ap_oracle(const std::vector<bool>& labels, const std::vector<double>& scores) {
    std::set<double, std::greater<double>> thresholds(scores.begin(), scores.end());
    std::size_t positives = 0;
    for (bool l : labels)
        if (l) ++positives;
    double ap = 0.0, prev_recall = 0.0;
    for (double th : thresholds) {
        std::size_t tp = 0, predicted = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= th) {
                ++predicted;
                if (labels[i]) ++tp;
            }
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        const double precision = static_cast<double>(tp) / static_cast<double>(predicted);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

}  // namespace

TEST_CASE("gold action rank basics") {
    std::vector<std::string> actions{"a", "b", "c", "d"};
    std::vector<double> scores{0.1, 0.9, 0.5, 0.2};
    RankResult r = gold_action_rank(scores, actions, "b");
    CHECK(r.rank == 1);
    CHECK(r.garr == 1.0);
    CHECK(r.percent == Approx(25.0));

    r = gold_action_rank(scores, actions, "d");
    CHECK(r.rank == 3);
    CHECK(r.garr == Approx(1.0 / 3.0));

    // Ties do not worsen rank.
    std::vector<double> tied{0.5, 0.5, 0.5, 0.1};
    CHECK(gold_action_rank(tied, actions, "c").rank == 1);

    CHECK_THROWS_AS(gold_action_rank(scores, actions, "zzz"), std::invalid_argument);
}

TEST_CASE("gold action rank agrees with a sort-based oracle") {
    RngStream rng(23, "rank");
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.index(30);
        std::vector<double> scores(n);
        for (double& s : scores) s = static_cast<double>(rng.index(7));  // ties likely
        std::vector<std::string> actions(n);
        for (std::size_t i = 0; i < n; ++i) actions[i] = "act" + std::to_string(i);
        const std::size_t gold = rng.index(n);

        std::vector<double> sorted = scores;
        std::sort(sorted.rbegin(), sorted.rend());
        const int oracle_rank = static_cast<int>(
            std::lower_bound(sorted.begin(), sorted.end(), scores[gold],
                             std::greater<double>()) -
            sorted.begin()) + 1;
        REQUIRE(gold_action_rank(scores, actions, actions[gold]).rank == oracle_rank);
    }
}

TEST_CASE("relevant_set is a text intersection") {
    std::vector<std::string> gold{"x", "y", "z"};
    CHECK(relevant_set(gold, {"a", "b"}).empty());
    CHECK(relevant_set(gold, {"z", "a", "x", "y"}) ==
          std::vector<std::string>{"x", "y", "z"});

    RngStream rng(3, "isect");
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> g, v;
        for (std::size_t i = 0; i < 12; ++i) {
            if (rng.uniform() < 0.5) g.push_back("t" + std::to_string(rng.index(9)));
            if (rng.uniform() < 0.5) v.push_back("t" + std::to_string(rng.index(9)));
        }
        auto got = relevant_set(g, v);
        std::set<std::string> expect;
        for (const auto& a : g)
            for (const auto& b : v)
                if (a == b) expect.insert(a);
        REQUIRE(got == std::vector<std::string>(expect.begin(), expect.end()));
    }
}

TEST_CASE("rsr recall and skip marker") {
    CHECK(*rsr({"a", "b", "c"}, {"a", "b"}) == Approx(1.0));
    CHECK(*rsr({"a"}, {"a", "b"}) == Approx(0.5));
    CHECK_FALSE(rsr({"a"}, {}).has_value());
}

TEST_CASE("rsr at k is monotone in k") {
    RngStream rng(9, "rsrk");
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 5 + rng.index(40);
        std::vector<std::string> actions(n);
        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) {
            actions[i] = "a" + std::to_string(i);
            scores[i] = static_cast<double>(rng.index(5));
        }
        std::vector<std::string> relevant;
        for (std::size_t i = 0; i < n; ++i)
            if (rng.uniform() < 0.25) relevant.push_back(actions[i]);
        if (relevant.empty()) continue;
        double prev = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            const double cur =
                *rsr(metrics_detail::top_k_texts(actions, scores, k), relevant);
            REQUIRE(cur >= prev - 1e-15);
            prev = cur;
        }
        CHECK(prev == Approx(1.0));
    }
}

TEST_CASE("average precision examples") {
    CHECK(*average_precision({true, true, false, false}, {4, 3, 2, 1}) == Approx(1.0));
    CHECK(*average_precision({true, false, true}, {3, 2, 1}) == Approx(5.0 / 6.0));
    CHECK_FALSE(average_precision({false, false}, {1, 2}).has_value());
}

TEST_CASE("average precision equals the brute-force oracle") {
    RngStream rng(77, "ap");
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.index(25);
        std::vector<bool> labels(n);
        std::vector<double> scores(n);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.uniform() < 0.3;
            any = any || labels[i];
            scores[i] = static_cast<double>(rng.index(6)) / 2.0;  // ties included
        }
        if (!any) continue;
        ++checked;
        REQUIRE(*average_precision(labels, scores) ==
                Approx(ap_oracle(labels, scores)).margin(1e-12));
    }
    CHECK(checked > 900);
}

TEST_CASE("metrics are invariant under strictly monotone score transforms") {
    RngStream rng(31, "mono");
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 4 + rng.index(20);
        std::vector<bool> labels(n);
        std::vector<double> scores(n);
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = rng.uniform() < 0.4;
            any = any || labels[i];
            scores[i] = static_cast<double>(rng.index(5));
        }
        if (!any) continue;
        std::vector<double> warped(n);
        for (std::size_t i = 0; i < n; ++i) warped[i] = std::exp(0.5 * scores[i]) + 3.0;
        REQUIRE(*average_precision(labels, scores) ==
                Approx(*average_precision(labels, warped)).margin(1e-12));
    }
}

TEST_CASE("baselines keep the top-50 most-used gold actions") {
    const Suite& suite = lge::testing::small_suite();
    BaselinePredictor per_task = build_baseline(BaselineMode::PerTask, suite, 0);
    BaselinePredictor global = build_baseline(BaselineMode::Global, suite);

    std::set<std::string> all_gold;
    for (int g : {0, 4})
        for (int v : suite.splits[static_cast<std::size_t>(g)].train)
            for (const Action& a : suite.at(g, v).gold.actions) all_gold.insert(a.text);
    if (all_gold.size() < 50) CHECK(global.members.size() == all_gold.size());
    CHECK(per_task.members.size() <= 50);
    CHECK(per_task.members != global.members);

    for (const std::string& m : per_task.members) CHECK(global.relevant(m) <= true);
    auto scores = global.score_all({"look around", "no such action"});
    CHECK((scores[0] == 1.0 || scores[0] == 0.0));
    CHECK(scores[1] == 0.0);
}

TEST_CASE("aggregate metrics of a single step equal that step's values") {
    StepEval e;
    e.task_type = 0;
    e.variation = 1;
    e.step = 0;
    e.valid = {"a", "b", "c", "d"};
    e.guide_scores = {0.9, 0.1, 0.8, 0.2};
    e.gold_action = "c";
    e.relevant = {"a", "c"};

    auto row = aggregate_model_metrics(
        "guide", {e}, [](const StepEval& s) { return s.guide_scores; }, true, {1, 2});
    CHECK(row.rsr_at_k[1] == Approx(0.5));   // top-1 = {a}
    CHECK(row.rsr_at_k[2] == Approx(1.0));   // top-2 = {a, c}
    CHECK(row.map == Approx(*average_precision({true, false, true, false},
                                               e.guide_scores)));
    CHECK(row.gar_mean == Approx(2.0));
    CHECK(row.garr == Approx(0.5));
    CHECK(row.gar_percent == Approx(50.0));
    CHECK(row.steps == 1);
}

TEST_CASE("tables render aligned text and csv") {
    TextTable t;
    t.header = {"task", "DRRN", "LGE fix"};
    t.rows = {{"t0", "0.17", "0.23"}, {"Avg.", "0.17", "0.23"}};
    const std::string text = t.render();
    CHECK(text.find("task") != std::string::npos);
    CHECK(text.find("0.23") != std::string::npos);
    const std::string csv = t.csv();
    CHECK(csv.find("task,DRRN,LGE fix\n") == 0);

    auto table = agent_report_table({"drrn", "lge-fix"}, {"t0", "t1"},
                                    {{0.1, 0.2}, {0.3, 0.2}}, 0);
    const std::string body = table.render();
    CHECK(body.find("Avg.") != std::string::npos);
    // Avg row: drrn 0.2, lge 0.2, delta 0.0
    CHECK(table.rows.back()[1] == "0.200");
    CHECK(table.rows.back()[3].substr(0, 5) == "0.000");

    const std::string svg = svg_bar_chart({"a", "b"}, {0.5, 1.0}, "scores");
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("rect") != std::string::npos);
}
