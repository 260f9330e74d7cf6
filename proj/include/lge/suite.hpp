#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lge/miniworld.hpp"
#include "lge/textcodec.hpp"

namespace lge {

// One generated variation: spec, world and its planned gold trajectory.
struct SuiteVariation {
    TaskSpec spec;
    std::shared_ptr<const World> world;
    GoldTrajectory gold;
};

// A full generated task suite: every (task_type, variation) world with gold
// trajectories and split assignments.
struct Suite {
    std::shared_ptr<const WorldDef> def;
    std::uint64_t world_seed = 0;
    std::uint64_t split_seed = 0;
    std::array<int, 3> split_counts{6, 2, 2};
    std::vector<std::vector<SuiteVariation>> by_task;  // [task_type][variation]
    std::vector<VariationSplits> splits;               // [task_type]

    int task_count() const { return static_cast<int>(by_task.size()); }

    const SuiteVariation& at(int task_type, int variation) const {
        return by_task[static_cast<std::size_t>(task_type)]
                      [static_cast<std::size_t>(variation)];
    }

    Split split_of(int task_type, int variation) const {
        const VariationSplits& s = splits[static_cast<std::size_t>(task_type)];
        for (int v : s.train)
            if (v == variation) return Split::Train;
        for (int v : s.dev)
            if (v == variation) return Split::Dev;
        return Split::Test;
    }
};

inline Suite build_suite(std::shared_ptr<const WorldDef> def, std::uint64_t world_seed,
                         std::array<int, 3> split_counts, std::uint64_t split_seed,
                         const std::vector<int>& task_types = {}) {
    Suite suite;
    suite.def = def;
    suite.world_seed = world_seed;
    suite.split_seed = split_seed;
    suite.split_counts = split_counts;

    std::vector<int> types = task_types;
    if (types.empty())
        for (std::size_t g = 0; g < def->tasks.size(); ++g) types.push_back(static_cast<int>(g));

    // by_task is indexed by task type id; unlisted types stay empty.
    suite.by_task.resize(def->tasks.size());
    suite.splits.resize(def->tasks.size());
    const int V = def->variations_per_task;
    for (int g : types) {
        suite.splits[static_cast<std::size_t>(g)] =
            split_variations(g, V, split_counts, split_seed);
        auto& row = suite.by_task[static_cast<std::size_t>(g)];
        row.reserve(static_cast<std::size_t>(V));
        for (int v = 0; v < V; ++v) {
            TaskSpec spec = make_task_spec(*def, g, v, Split::Train);
            spec.split = Split::Train;  // provisional; fixed below
            auto world = generate_world(def, spec, world_seed);
            EnvInstance env(world);
            env.reset();
            GoldTrajectory gold = plan_gold(env);
            row.push_back(SuiteVariation{spec, std::move(world), std::move(gold)});
        }
        for (int v = 0; v < V; ++v) {
            auto& var = row[static_cast<std::size_t>(v)];
            var.spec.split = suite.split_of(g, v);
            // Worlds carry the spec too; regenerate the split tag there.
            auto patched = std::make_shared<World>(*var.world);
            patched->spec.split = var.spec.split;
            var.world = std::move(patched);
        }
    }
    return suite;
}

// Deterministic text corpus for vocabulary construction: descriptions,
// initial observations, valid-action texts and gold-replay observations.
// With a split filter, only that split's variations contribute; encoders
// then see genuinely unknown tokens on the other splits.
inline std::vector<std::string> suite_corpus(const Suite& suite,
                                             std::optional<Split> only = std::nullopt) {
    std::vector<std::string> corpus;
    for (const auto& row : suite.by_task) {
        for (const SuiteVariation& var : row) {
            if (only && var.spec.split != *only) continue;
            corpus.push_back(var.spec.description);
            EnvInstance env(var.world);
            Observation o = env.reset();
            corpus.push_back(o.obs);
            corpus.push_back(o.inventory);
            corpus.push_back(o.look);
            for (const Action& a : env.valid_actions()) corpus.push_back(a.text);
            for (const Action& a : var.gold.actions) {
                auto r = env.step(a);
                corpus.push_back(r.obs.obs);
                corpus.push_back(r.obs.inventory);
                corpus.push_back(r.obs.look);
                for (const Action& va : env.valid_actions()) corpus.push_back(va.text);
                if (r.done) break;
            }
        }
    }
    return corpus;
}

inline Vocabulary suite_vocabulary(const Suite& suite,
                                   std::optional<Split> only = std::nullopt) {
    return Vocabulary::build(suite_corpus(suite, only));
}

}  // namespace lge
