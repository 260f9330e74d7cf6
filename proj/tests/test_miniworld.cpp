#include <catch2/catch_amalgamated.hpp>

#include <optional>
#include <set>

#include "lge/miniworld.hpp"

using namespace lge;
using Catch::Approx;

namespace {

std::shared_ptr<const WorldDef> shared_default_def() {
    static const auto def = std::make_shared<const WorldDef>(default_world_def());
    return def;
}

std::vector<std::string> action_texts(const std::vector<Action>& as) {
    std::vector<std::string> out;
    out.reserve(as.size());
    for (const auto& a : as) out.push_back(a.text);
    return out;
}

bool rollout_template_allowed(const World& w, const Action& a) {
    switch (w.def->templates[static_cast<std::size_t>(a.template_id)].kind) {
        case TemplateKind::PickUp:
        case TemplateKind::MoveTo:
        case TemplateKind::Open:
        case TemplateKind::Activate:
        case TemplateKind::UseOn:
        case TemplateKind::Connect:
        case TemplateKind::Water:
        case TemplateKind::GoTo:
        case TemplateKind::Focus:
        case TemplateKind::Wait:
            return true;
        default:
            return false;
    }
}

// Random-restart solver over state-changing actions; independent of the BFS.
std::optional<int> random_restart_solve(EnvInstance env, std::uint64_t seed, int episodes) {
    RngStream rng(seed, "random-restart");
    std::optional<int> best;
    for (int ep = 0; ep < episodes; ++ep) {
        env.reset();
        double total = 0.0;
        int len = 0;
        while (!env.done()) {
            std::vector<Action> acts;
            for (const Action& a : env.valid_actions())
                if (rollout_template_allowed(env.world(), a)) acts.push_back(a);
            const Action& pick = acts[rng.index(acts.size())];
            auto r = env.step(pick);
            total += r.reward;
            ++len;
            if (r.done) break;
        }
        if (std::abs(total - 1.0) < 1e-12 && (!best || len < *best)) best = len;
    }
    return best;
}

}  // namespace

TEST_CASE("world generation is deterministic") {
    auto def = shared_default_def();
    TaskSpec spec = make_task_spec(*def, 0, 0, Split::Train);
    EnvInstance e1 = make_env(def, spec, 7);
    EnvInstance e2 = make_env(def, spec, 7);
    Observation o1 = e1.reset();
    Observation o2 = e2.reset();
    CHECK(o1.obs == o2.obs);
    CHECK(o1.look == o2.look);
    CHECK(o1.inventory == o2.inventory);
    CHECK(o1.task == o2.task);
    CHECK(action_texts(e1.valid_actions()) == action_texts(e2.valid_actions()));
}

TEST_CASE("task descriptions regenerate exactly") {
    auto def = shared_default_def();
    for (int g = 0; g < 6; ++g)
        for (int v = 0; v < 10; ++v) {
            TaskSpec a = make_task_spec(*def, g, v, Split::Train);
            TaskSpec b = make_task_spec(*def, g, v, Split::Dev);
            CHECK(a.description == b.description);
            CHECK(!a.description.empty());
        }
}

TEST_CASE("reset is idempotent and begins with the fixed opening line") {
    auto def = shared_default_def();
    EnvInstance env = make_env(def, make_task_spec(*def, 1, 3, Split::Train), 11);
    Observation first = env.reset();
    CHECK(first.obs.rfind("you begin in the ", 0) == 0);
    env.step(env.valid_actions()[0]);
    Observation again = env.reset();
    CHECK(again.obs == first.obs);
    CHECK(again.look == first.look);
    CHECK(again.inventory == first.inventory);
    CHECK(env.steps() == 0);
}

TEST_CASE("default suite meets the action-space floor") {
    auto def = shared_default_def();
    double total = 0.0;
    int n = 0;
    for (int g = 0; g < 6; ++g)
        for (int v = 0; v < 10; ++v) {
            EnvInstance env = make_env(def, make_task_spec(*def, g, v, Split::Train), 2026);
            env.reset();
            const std::size_t count = env.valid_actions().size();
            CHECK(count >= 200);
            total += static_cast<double>(count);
            ++n;
        }
    CHECK(total / n >= 200.0);
}

TEST_CASE("valid action counting matches the template cross product") {
    // Synthetic world: 10 objects, 20 any-slot unary templates, 5 binary.
    std::string def_text = "lge-world\t1\nroom\tvoid\n";
    for (int i = 0; i < 10; ++i)
        def_text += "fixture\tthing" + std::to_string(i) + "\tvoid\tscenery\n";
    def_text += "template\tlook\t0\t-\t-\tlook around\n";
    def_text += "template\twait\t0\t-\t-\twait\n";
    for (int i = 0; i < 20; ++i)
        def_text += "template\tu" + std::to_string(i) + "\t1\tany\t-\tu" + std::to_string(i) +
                    " {0}\n";
    for (int i = 0; i < 5; ++i)
        def_text += "template\tb" + std::to_string(i) + "\t2\tany\tany\tb" + std::to_string(i) +
                    " {0} {1}\n";
    auto def = std::make_shared<const WorldDef>(parse_world_def(def_text));

    World w;
    w.def = def;
    for (const FixtureDef& f : def->fixtures)
        w.objects.push_back(WorldObject{f.name, f.name, "", f.props, 0, -1});
    w.initial.objs.assign(w.objects.size(), ObjDyn{0, kFlagOpen, ObjState::Normal});
    w.target = 0;

    const auto actions = w.valid_actions(w.initial);
    CHECK(actions.size() == 2 + 20 * 10 + 5 * 10 * 9);
    CHECK(actions == w.valid_actions(w.initial));
    CHECK(actions[0].text == "look around");
    CHECK(actions[1].text == "wait");
}

TEST_CASE("wait produces zero reward and no termination") {
    auto def = shared_default_def();
    EnvInstance env = make_env(def, make_task_spec(*def, 0, 0, Split::Train), 5);
    env.reset();
    Action wait;
    for (const Action& a : env.valid_actions())
        if (a.text == "wait") wait = a;
    REQUIRE(wait.template_id >= 0);
    auto r = env.step(wait);
    CHECK(r.reward == 0.0);
    CHECK_FALSE(r.done);
    CHECK(r.obs.obs == "time passes.");
}

TEST_CASE("episode terminates at the step cap") {
    auto def = shared_default_def();
    EnvInstance env = make_env(def, make_task_spec(*def, 0, 1, Split::Train), 5);
    env.reset();
    Action wait;
    for (const Action& a : env.valid_actions())
        if (a.text == "wait") wait = a;
    bool done = false;
    for (int i = 0; i < 100; ++i) done = env.step(wait).done;
    CHECK(done);
    CHECK(env.steps() == 100);
    CHECK_THROWS_AS(env.step(wait), std::logic_error);
}

TEST_CASE("every valid action executes; non-members are rejected") {
    auto def = shared_default_def();
    EnvInstance env = make_env(def, make_task_spec(*def, 2, 4, Split::Train), 13);
    env.reset();
    for (const Action& a : env.valid_actions()) {
        EnvInstance copy = env;
        CHECK_NOTHROW(copy.step(a));
    }
    Action bogus = env.valid_actions()[2];
    bogus.text = "examine the moon";
    CHECK_THROWS_AS(env.step(bogus), std::invalid_argument);
    Action stale = env.valid_actions()[2];
    stale.a = 9999;
    CHECK_THROWS_AS(env.step(stale), std::invalid_argument);
}

TEST_CASE("gold trajectories replay to exactly 1.0") {
    auto def = shared_default_def();
    for (int g = 0; g < 6; ++g)
        for (int v = 0; v < 10; v += 5) {
            EnvInstance env = make_env(def, make_task_spec(*def, g, v, Split::Train), 21);
            env.reset();
            GoldTrajectory gold = plan_gold(env);
            CHECK(!gold.actions.empty());
            CHECK(gold.actions.size() <= 50);
            CHECK(replay_gold(env, gold) == Approx(1.0).margin(1e-12));
        }
}

TEST_CASE("planner output is deterministic") {
    auto def = shared_default_def();
    EnvInstance env = make_env(def, make_task_spec(*def, 5, 2, Split::Train), 3);
    env.reset();
    GoldTrajectory a = plan_gold(env);
    env.reset();
    GoldTrajectory b = plan_gold(env);
    CHECK(a.texts() == b.texts());
}

TEST_CASE("planner matches or beats a random-restart solver") {
    // A deliberately tiny world so random rollouts solve it often.
    const std::string small_def =
        "lge-world\t1\n"
        "room\tden\n"
        "fixture\tcrate\tden\treceptacle\n"
        "category\tapple\tportable,edible\tred,green,ripe\n"
        "category\tbook\tportable,readable\told,blue,torn\n"
        "template\tlook\t0\t-\t-\tlook around\n"
        "template\twait\t0\t-\t-\twait\n"
        "template\texamine\t1\tany\t-\texamine {0}\n"
        "template\tfocus\t1\tany\t-\tfocus on {0}\n"
        "template\tpickup\t1\tportable\t-\tpick up {0}\n"
        "template\tmove\t2\tportable\tany\tmove {0} to {1}\n"
        "template\tgoto\t1\troom\t-\tgo to {0}\n"
        "task\tfind\tapple\t-\tyour task is to find {article} {noun} and focus on it\t-\n"
        "set\tcap\t40\nset\tfloor\t1\nset\tdistractors\t1\nset\tvariations\t3\n";
    auto def = std::make_shared<const WorldDef>(parse_world_def(small_def));
    for (int v = 0; v < 3; ++v) {
        EnvInstance env = make_env(def, make_task_spec(*def, 0, v, Split::Train), 77);
        env.reset();
        GoldTrajectory gold = plan_gold(env);
        CHECK(replay_gold(env, gold) == Approx(1.0));
        auto best_random = random_restart_solve(env, 1234 + static_cast<std::uint64_t>(v), 600);
        REQUIRE(best_random.has_value());
        CHECK(gold.actions.size() <= static_cast<std::size_t>(*best_random));
    }
}

TEST_CASE("cumulative reward never exceeds one") {
    auto def = shared_default_def();
    EnvInstance env = make_env(def, make_task_spec(*def, 3, 1, Split::Train), 9);
    RngStream rng(55, "rollout");
    for (int ep = 0; ep < 20; ++ep) {
        env.reset();
        double total = 0.0;
        while (!env.done()) {
            auto acts = env.valid_actions();
            total += env.step(acts[rng.index(acts.size())]).reward;
        }
        CHECK(total <= 1.0 + 1e-12);
        const bool solved = env.state().milestones == env.world().all_milestones_mask();
        CHECK((std::abs(total - 1.0) < 1e-12) == solved);
    }
}

TEST_CASE("variation splits partition deterministically") {
    auto check_partition = [](const VariationSplits& s, int v_total) {
        std::set<int> all;
        for (int v : s.train) all.insert(v);
        for (int v : s.dev) all.insert(v);
        for (int v : s.test) all.insert(v);
        CHECK(all.size() == s.train.size() + s.dev.size() + s.test.size());
        for (int v : all) {
            CHECK(v >= 0);
            CHECK(v < v_total);
        }
    };

    VariationSplits a = split_variations(0, 10, {6, 2, 2}, 42);
    VariationSplits b = split_variations(0, 10, {6, 2, 2}, 42);
    CHECK(a.train == b.train);
    CHECK(a.dev == b.dev);
    CHECK(a.test == b.test);
    CHECK(a.train.size() == 6);
    check_partition(a, 10);

    for (std::uint64_t seed = 0; seed < 100; ++seed)
        check_partition(split_variations(1, 10, {5, 3, 2}, seed), 10);

    CHECK_THROWS_AS(split_variations(0, 10, {6, 3, 2}, 1), std::invalid_argument);
}

TEST_CASE("fixed action sequences log identical observation hashes") {
    auto def = shared_default_def();
    std::vector<std::uint64_t> runs[2];
    for (int run = 0; run < 2; ++run) {
        EnvInstance env = make_env(def, make_task_spec(*def, 4, 6, Split::Train), 31);
        env.reset();
        RngStream rng(8, "seq");
        for (int i = 0; i < 25 && !env.done(); ++i) {
            auto acts = env.valid_actions();
            auto r = env.step(acts[rng.index(acts.size())]);
            runs[run].push_back(observation_hash(r.obs));
        }
    }
    CHECK(runs[0] == runs[1]);
}
