#pragma once

#include "lge/suite.hpp"

namespace lge::testing {

// Built once per test binary; the full default suite with fixed seeds.
inline const Suite& full_suite() {
    static const Suite suite = [] {
        auto def = std::make_shared<const WorldDef>(default_world_def());
        return build_suite(def, 2026, {6, 2, 2}, 1);
    }();
    return suite;
}

// Two task types only, for faster tests.
inline const Suite& small_suite() {
    static const Suite suite = [] {
        auto def = std::make_shared<const WorldDef>(default_world_def());
        return build_suite(def, 99, {6, 2, 2}, 1, {0, 4});
    }();
    return suite;
}

}  // namespace lge::testing
