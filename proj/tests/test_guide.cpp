#include <catch2/catch_amalgamated.hpp>

#include <unordered_set>

#include "lge/guide.hpp"
#include "suite_fixture.hpp"

using namespace lge;
using Catch::Approx;

namespace {

Guide<double> tiny_guide(std::uint64_t seed = 4, double lambda = 0.05) {
    Vocabulary vocab = Vocabulary::build(std::vector<std::string>{
        "pick up the red apple", "focus on the copper wire", "go to the kitchen",
        "open the cupboard", "your task is to find an apple and focus on it",
        "move the steel pot to the sink", "wait", "look around"});
    GuideConfig cfg;
    cfg.hidden = 8;
    cfg.temperature = lambda;
    return Guide<double>::init(std::move(vocab), cfg, seed);
}

}  // namespace

TEST_CASE("similarity of identical strings is exactly 1/lambda") {
    Guide<double> g = tiny_guide(1, 0.05);
    CHECK(similarity(g, "pick up the red apple", "pick up the red apple") ==
          Approx(1.0 / 0.05).margin(1e-9));
    CHECK(similarity(g, "go to the kitchen", "focus on the copper wire") ==
          Approx(similarity(g, "focus on the copper wire", "go to the kitchen"))
              .margin(1e-12));
    CHECK_THROWS_AS(similarity(g, "", "x"), std::invalid_argument);
}

TEST_CASE("cosine is invariant to positive rescaling of embeddings") {
    Guide<double> g = tiny_guide(2);
    auto u = g.embed("pick up the red apple");
    auto v = g.embed("open the cupboard");
    const double base = cosine_of(u, v);
    for (double c : {0.1, 3.0, 250.0}) {
        auto su = u;
        for (double& x : su) x *= c;
        CHECK(cosine_of(su, v) == Approx(base).margin(1e-12));
    }
}

TEST_CASE("score_actions is pure and batched equals pairwise") {
    Guide<double> g = tiny_guide(3);
    const std::string tau = "your task is to find an apple and focus on it";
    std::vector<std::string> actions{"pick up the red apple", "wait",
                                     "pick up the red apple", "open the cupboard",
                                     "look around"};
    auto scores = score_actions(g, tau, actions);
    CHECK(scores[0] == scores[2]);
    for (std::size_t i = 0; i < actions.size(); ++i)
        CHECK(scores[i] == Approx(similarity(g, tau, actions[i])).margin(1e-12));

    std::vector<std::string> permuted{actions[3], actions[1], actions[0], actions[4],
                                      actions[2]};
    auto pscores = score_actions(g, tau, permuted);
    CHECK(pscores[0] == scores[3]);
    CHECK(pscores[2] == scores[0]);
}

TEST_CASE("top_k agrees with a full-sort oracle") {
    RngStream rng(17, "topk");
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.index(40);
        std::vector<double> scores(n);
        for (double& s : scores) s = static_cast<double>(rng.index(6));  // force ties
        const std::size_t k = 1 + rng.index(n + 4);
        auto got = top_k_indices(scores, k);

        std::vector<std::size_t> oracle(n);
        std::iota(oracle.begin(), oracle.end(), 0);
        std::stable_sort(oracle.begin(), oracle.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        oracle.resize(std::min(k, oracle.size()));
        REQUIRE(got == oracle);
    }
}

TEST_CASE("top_k with k >= n returns all actions by descending score") {
    Guide<double> g = tiny_guide(5);
    const std::string tau = "your task is to find an apple and focus on it";
    std::vector<std::string> actions{"wait", "pick up the red apple", "look around"};
    auto all = top_k(g, tau, actions, 10);
    REQUIRE(all.size() == 3);
    auto scores = score_actions(g, tau, actions);
    std::sort(scores.rbegin(), scores.rend());
    auto got = score_actions(g, tau, all);
    for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == Approx(scores[i]));
}

TEST_CASE("ranking is invariant to the temperature") {
    Guide<double> a = tiny_guide(6, 0.05);
    Guide<double> b = tiny_guide(6, 1.7);  // same seed, different lambda
    const std::string tau = "your task is to find an apple and focus on it";
    std::vector<std::string> actions{"wait", "pick up the red apple", "look around",
                                     "open the cupboard", "move the steel pot to the sink"};
    CHECK(top_k(a, tau, actions, 3) == top_k(b, tau, actions, 3));
}

TEST_CASE("classify_relevant threshold extremes") {
    Guide<double> g = tiny_guide(7);
    const std::string tau = "your task is to find an apple and focus on it";
    std::vector<std::string> actions{"wait", "pick up the red apple", "look around"};
    auto all_true = classify_relevant(g, tau, actions, 0.0);
    auto all_false = classify_relevant(g, tau, actions, 1.0 + 1e-9);
    for (bool b : all_true) CHECK(b);
    for (bool b : all_false) CHECK_FALSE(b);
}

TEST_CASE("batch loss closed form: uniform scores give N ln(2N)") {
    Guide<double> g = tiny_guide(8);
    std::vector<TrainingTuple> batch(2);
    for (auto& t : batch) {
        t.tau = "wait";
        t.pos = "wait";
        t.neg = "wait";
    }
    const double loss = batch_loss(g, batch, false);
    CHECK(loss == Approx(2.0 * std::log(4.0)).margin(1e-9));

    batch.resize(3, batch[0]);
    CHECK(batch_loss(g, batch, false) == Approx(3.0 * std::log(6.0)).margin(1e-9));
    CHECK_THROWS_AS(batch_loss(g, {}, false), std::invalid_argument);
}

TEST_CASE("batch loss is positive on random batches") {
    Guide<double> g = tiny_guide(9);
    std::vector<TrainingTuple> batch{
        {0, 0, "your task is to find an apple and focus on it", "pick up the red apple",
         "open the cupboard"},
        {0, 1, "move the steel pot to the sink", "go to the kitchen", "wait"}};
    CHECK(batch_loss(g, batch, false) > 0.0);
}

TEST_CASE("batch loss gradient matches finite differences") {
    Guide<double> g = tiny_guide(10);
    std::vector<TrainingTuple> batch{
        {0, 0, "your task is to find an apple and focus on it", "pick up the red apple",
         "open the cupboard"},
        {0, 1, "move the steel pot to the sink", "go to the kitchen", "wait"},
        {0, 2, "focus on the copper wire", "look around", "pick up the red apple"}};
    auto loss_fn = [&](bool with_grad) { return batch_loss(g, batch, with_grad); };
    CHECK(grad_check<double>(g.params, loss_fn, 1e-5, 200, 3) < 1e-4);
}

TEST_CASE("negative pools union valid actions along gold replays") {
    const Suite& suite = lge::testing::small_suite();
    NegativePool pool = build_negative_pool(suite, 0);
    NegativePool again = build_negative_pool(suite, 0);
    CHECK(pool.actions == again.actions);
    CHECK(pool.actions.size() > 200);

    std::unordered_set<std::string> pool_set(pool.actions.begin(), pool.actions.end());
    for (int v : suite.splits[0].train)
        for (const Action& a : suite.at(0, v).gold.actions) CHECK(pool_set.count(a.text) == 1);

    CHECK(std::is_sorted(pool.actions.begin(), pool.actions.end()));
    CHECK(std::adjacent_find(pool.actions.begin(), pool.actions.end()) ==
          pool.actions.end());
    CHECK_THROWS_AS(build_negative_pool(suite, 1), std::invalid_argument);  // type 1 not built
}

TEST_CASE("training tuples pair every gold action with a non-gold negative") {
    const Suite& suite = lge::testing::small_suite();
    std::vector<NegativePool> pools(suite.by_task.size());
    pools[0] = build_negative_pool(suite, 0);
    pools[4] = build_negative_pool(suite, 4);

    RngStream rng(5, "tuples");
    auto tuples = build_training_tuples(suite, pools, rng, 1);

    std::size_t positives = 0;
    for (int g : {0, 4})
        for (int v : suite.splits[static_cast<std::size_t>(g)].train)
            positives += suite.at(g, v).gold.actions.size();
    CHECK(tuples.size() == positives);  // no duplicate collapses at this seed

    for (const TrainingTuple& t : tuples) {
        const auto& var = suite.at(t.task_type, t.variation);
        CHECK(t.tau == var.spec.description);
        std::unordered_set<std::string> gold;
        for (const Action& a : var.gold.actions) gold.insert(a.text);
        CHECK(gold.count(t.pos) == 1);
        CHECK(gold.count(t.neg) == 0);
    }
}

TEST_CASE("guide training is deterministic and reduces the loss") {
    const Suite& suite = lge::testing::small_suite();
    std::vector<NegativePool> pools(suite.by_task.size());
    pools[0] = build_negative_pool(suite, 0);
    pools[4] = build_negative_pool(suite, 4);
    Vocabulary vocab = suite_vocabulary(suite);

    GuideConfig cfg;
    cfg.hidden = 16;
    cfg.epochs = 4;
    cfg.lr = 0.01;
    cfg.batch_size = 64;

    auto run = [&](std::uint64_t seed) {
        Guide<double> g = Guide<double>::init(vocab, cfg, seed);
        GuideTrainReport rep = train_guide_on_suite(g, cfg, suite, pools, seed);
        return std::make_pair(g.params.flatten(), rep);
    };
    auto [w1, r1] = run(11);
    auto [w2, r2] = run(11);
    CHECK(w1 == w2);
    CHECK(r1.epoch_mean_loss == r2.epoch_mean_loss);
    CHECK(r1.epoch_mean_loss.back() < r1.epoch_mean_loss.front());

    auto [w3, r3] = run(12);
    CHECK(w3 != w1);
}
