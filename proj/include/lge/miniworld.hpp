#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lge/util.hpp"
#include "lge/worlddef.hpp"

namespace lge {

enum class Split { Train, Dev, Test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        default: return "test";
    }
}

struct TaskSpec {
    int task_type = 0;
    int variation = 0;
    std::string description;
    Split split = Split::Train;
};

// A template with filled slots. Two actions are equal iff their rendered
// texts are equal.
struct Action {
    int template_id = -1;
    int a = -1;  // object index, or room index for goto
    int b = -1;
    std::string text;

    friend bool operator==(const Action& x, const Action& y) { return x.text == y.text; }
};

struct Observation {
    std::string obs;        // effect of the last action
    std::string inventory;  // i_t
    std::string look;       // l_t
    std::string task;       // tau, fixed for the episode
};

inline std::uint64_t observation_hash(const Observation& o) {
    std::uint64_t h = fnv1a64(o.obs);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(o.inventory, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(o.look, h);
    return h;
}

struct WorldObject {
    std::string display;   // base display name, e.g. "red apple" or "stove"
    std::string noun;      // category noun; fixture name for fixtures
    std::string modifier;  // empty for fixtures
    std::uint32_t props = 0;
    int init_room = 0;
    int init_container = -1;
};

enum class ObjState : std::uint8_t { Normal, Heated, Frozen, Watered, WateredAged, Grown };

// Object flag bits in the dynamic state.
constexpr std::uint8_t kFlagOpen = 1;
constexpr std::uint8_t kFlagActive = 2;
constexpr std::uint8_t kFlagConnected = 4;
constexpr std::uint8_t kFlagMeasured = 8;
constexpr std::uint8_t kFlagTested = 16;

// Location encoding: rooms are 0..R-1.
constexpr std::uint8_t kLocContainerBase = 100;
constexpr std::uint8_t kLocInventory = 200;
constexpr std::uint8_t kLocConsumed = 201;

struct ObjDyn {
    std::uint8_t loc = 0;
    std::uint8_t flags = 0;
    ObjState state = ObjState::Normal;
};

struct WorldState {
    std::uint8_t agent_room = 0;
    std::uint8_t milestones = 0;  // latched bits
    bool focused = false;
    bool failed = false;
    std::vector<ObjDyn> objs;

    std::string key() const {
        std::string k;
        k.reserve(4 + objs.size() * 3);
        k.push_back(static_cast<char>(agent_room));
        k.push_back(static_cast<char>(milestones));
        k.push_back(static_cast<char>(focused ? 1 : 0));
        k.push_back(static_cast<char>(failed ? 1 : 0));
        for (const ObjDyn& o : objs) {
            k.push_back(static_cast<char>(o.loc));
            k.push_back(static_cast<char>(o.flags));
            k.push_back(static_cast<char>(o.state));
        }
        return k;
    }
};

struct GoldTrajectory {
    std::vector<Action> actions;

    std::vector<std::string> texts() const {
        std::vector<std::string> out;
        out.reserve(actions.size());
        for (const Action& a : actions) out.push_back(a.text);
        return out;
    }
};

// ---------------------------------------------------------------------------
// World: immutable per-variation structure (graph, objects, task) plus the
// deterministic transition function over WorldState.
// ---------------------------------------------------------------------------

class World {
public:
    std::shared_ptr<const WorldDef> def;
    TaskSpec spec;
    std::vector<WorldObject> objects;

    TaskKind kind = TaskKind::Find;
    int target = -1;      // object index
    int instrument = -1;  // thermometer (measure)
    int dest = -1;        // receptacle (bring)
    int device = -1;      // stove/freezer (chstate)
    int plant_site = -1;  // flower pot (grow)
    int connect_target = -1;
    ObjState goal_state = ObjState::Heated;
    int milestone_count = 2;

    int start_room = 0;
    WorldState initial;
    std::string begin_obs;

    // --- rendering -------------------------------------------------------

    std::string display_name(const WorldState& s, int idx) const {
        const WorldObject& o = objects[static_cast<std::size_t>(idx)];
        if ((o.props & kPlantable) && s.objs[static_cast<std::size_t>(idx)].state == ObjState::Grown)
            return "grown " + o.modifier + " plant";
        return o.display;
    }

    std::string render(const WorldState& s, int template_id, int a, int b) const {
        const TemplateDef& t = def->templates[static_cast<std::size_t>(template_id)];
        std::string text = t.pattern;
        auto subst = [&](const std::string& ph, const std::string& value) {
            std::size_t pos = text.find(ph);
            if (pos != std::string::npos) text.replace(pos, ph.size(), value);
        };
        if (t.arity >= 1)
            subst("{0}", t.slot0 == SlotKind::Room ? def->rooms[static_cast<std::size_t>(a)]
                                                   : display_name(s, a));
        if (t.arity >= 2) subst("{1}", display_name(s, b));
        return text;
    }

    Action make_action(const WorldState& s, int template_id, int a = -1, int b = -1) const {
        return Action{template_id, a, b, render(s, template_id, a, b)};
    }

    // --- visibility ------------------------------------------------------

    bool visible(const WorldState& s, int idx) const {
        const ObjDyn& d = s.objs[static_cast<std::size_t>(idx)];
        if (d.loc == kLocInventory) return true;
        if (d.loc == kLocConsumed) return false;
        if (d.loc >= kLocContainerBase) {
            const int c = d.loc - kLocContainerBase;
            const ObjDyn& cd = s.objs[static_cast<std::size_t>(c)];
            return cd.loc == s.agent_room && (cd.flags & kFlagOpen);
        }
        return d.loc == s.agent_room;
    }

    std::vector<int> visible_objects(const WorldState& s) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < objects.size(); ++i)
            if (visible(s, static_cast<int>(i))) out.push_back(static_cast<int>(i));
        return out;
    }

    bool slot_ok(const WorldState& s, SlotKind kind, int idx) const {
        const WorldObject& o = objects[static_cast<std::size_t>(idx)];
        const ObjDyn& d = s.objs[static_cast<std::size_t>(idx)];
        switch (kind) {
            case SlotKind::Any: return true;
            case SlotKind::Portable: return (o.props & kPortable) != 0;
            case SlotKind::Inventory: return d.loc == kLocInventory;
            case SlotKind::Container: return (o.props & kContainer) != 0;
            case SlotKind::Device: return (o.props & kDevice) != 0;
            default: return false;
        }
    }

    // Deterministic ordering: template-major, then slot indices ascending.
    std::vector<Action> valid_actions(const WorldState& s) const {
        std::vector<Action> out;
        const std::vector<int> vis = visible_objects(s);
        for (std::size_t ti = 0; ti < def->templates.size(); ++ti) {
            const TemplateDef& t = def->templates[ti];
            const int tid = static_cast<int>(ti);
            if (t.arity == 0) {
                out.push_back(make_action(s, tid));
            } else if (t.slot0 == SlotKind::Room) {
                for (int r : sorted_adjacent(s.agent_room)) out.push_back(make_action(s, tid, r));
            } else if (t.arity == 1) {
                for (int i : vis)
                    if (slot_ok(s, t.slot0, i)) out.push_back(make_action(s, tid, i));
            } else {
                for (int i : vis) {
                    if (!slot_ok(s, t.slot0, i)) continue;
                    for (int j : vis)
                        if (j != i && slot_ok(s, t.slot1, j))
                            out.push_back(make_action(s, tid, i, j));
                }
            }
        }
        return out;
    }

    bool is_valid(const WorldState& s, const Action& act) const {
        if (act.template_id < 0 ||
            static_cast<std::size_t>(act.template_id) >= def->templates.size())
            return false;
        const TemplateDef& t = def->templates[static_cast<std::size_t>(act.template_id)];
        if (t.arity >= 1) {
            if (t.slot0 == SlotKind::Room) {
                auto adj = sorted_adjacent(s.agent_room);
                if (std::find(adj.begin(), adj.end(), act.a) == adj.end()) return false;
            } else if (act.a < 0 || static_cast<std::size_t>(act.a) >= objects.size() ||
                       !visible(s, act.a) || !slot_ok(s, t.slot0, act.a)) {
                return false;
            }
        }
        if (t.arity >= 2) {
            if (act.b < 0 || static_cast<std::size_t>(act.b) >= objects.size() ||
                act.b == act.a || !visible(s, act.b) || !slot_ok(s, t.slot1, act.b))
                return false;
        }
        return render(s, act.template_id, act.a, act.b) == act.text;
    }

    // --- observation text ------------------------------------------------

    std::string item_annotation(const WorldState& s, int idx) const {
        const WorldObject& o = objects[static_cast<std::size_t>(idx)];
        const ObjDyn& d = s.objs[static_cast<std::size_t>(idx)];
        std::string notes;
        auto add = [&](const std::string& n) {
            notes += notes.empty() ? n : ", " + n;
        };
        if (o.props & kContainer) add((d.flags & kFlagOpen) ? "open" : "closed");
        if (o.props & kDevice) add((d.flags & kFlagActive) ? "on" : "off");
        if (d.state == ObjState::Heated) add("hot");
        if (d.state == ObjState::Frozen) add("frozen");
        if (d.state == ObjState::Watered || d.state == ObjState::WateredAged) add("wet");
        return notes.empty() ? "" : " (" + notes + ")";
    }

    std::string look_text(const WorldState& s) const {
        std::string items;
        for (std::size_t i = 0; i < objects.size(); ++i) {
            const ObjDyn& d = s.objs[i];
            const int idx = static_cast<int>(i);
            std::string place;
            if (d.loc == s.agent_room) {
                place = "";
            } else if (d.loc >= kLocContainerBase && d.loc < kLocInventory) {
                const int c = d.loc - kLocContainerBase;
                if (!visible(s, idx)) continue;
                place = " in the " + objects[static_cast<std::size_t>(c)].display;
            } else {
                continue;
            }
            if (!items.empty()) items += ", ";
            items += display_name(s, idx) + item_annotation(s, idx) + place;
        }
        if (items.empty()) items = "nothing of interest";
        std::string exits;
        for (int r : sorted_adjacent(s.agent_room)) {
            if (!exits.empty()) exits += ", ";
            exits += def->rooms[static_cast<std::size_t>(r)];
        }
        return "you are in the " + def->rooms[s.agent_room] + ". you see: " + items +
               ". exits lead to: " + exits + ".";
    }

    std::string inventory_text(const WorldState& s) const {
        std::string items;
        for (std::size_t i = 0; i < objects.size(); ++i) {
            if (s.objs[i].loc != kLocInventory) continue;
            if (!items.empty()) items += ", ";
            items += display_name(s, static_cast<int>(i));
        }
        if (items.empty()) return "your inventory is empty.";
        return "in your inventory you have: " + items + ".";
    }

    Observation observe(const WorldState& s, const std::string& effect) const {
        return Observation{effect, inventory_text(s), look_text(s), spec.description};
    }

    // --- milestones ------------------------------------------------------

    std::uint8_t milestones_of(const WorldState& s) const {
        auto in_inv = [&](int i) {
            return i >= 0 && s.objs[static_cast<std::size_t>(i)].loc == kLocInventory;
        };
        auto inside = [&](int i, int c) {
            return i >= 0 && c >= 0 &&
                   s.objs[static_cast<std::size_t>(i)].loc ==
                       static_cast<std::uint8_t>(kLocContainerBase + c);
        };
        const ObjDyn& tgt = s.objs[static_cast<std::size_t>(target)];
        std::uint8_t m = 0;
        switch (kind) {
            case TaskKind::Find:
                if (in_inv(target)) m |= 1;
                if (s.focused) m |= 2;
                break;
            case TaskKind::Bring:
                if (in_inv(target)) m |= 1;
                if (inside(target, dest)) m |= 2;
                if (s.focused) m |= 4;
                break;
            case TaskKind::ChangeState:
                if (in_inv(target)) m |= 1;
                if (tgt.state == goal_state) m |= 2;
                if (s.focused) m |= 4;
                break;
            case TaskKind::Measure:
                if (in_inv(instrument)) m |= 1;
                if (tgt.flags & kFlagMeasured) m |= 2;
                if (s.focused) m |= 4;
                break;
            case TaskKind::Conduct:
                if (in_inv(target)) m |= 1;
                if (tgt.flags & kFlagConnected) m |= 2;
                if (tgt.flags & kFlagTested) m |= 4;
                if (s.focused) m |= 8;
                break;
            case TaskKind::Grow:
                if (in_inv(target)) m |= 1;
                if (inside(target, plant_site)) m |= 2;
                if (tgt.state == ObjState::Watered || tgt.state == ObjState::WateredAged ||
                    tgt.state == ObjState::Grown)
                    m |= 4;
                if (s.focused && tgt.state == ObjState::Grown) m |= 8;
                break;
        }
        return m;
    }

    std::uint8_t all_milestones_mask() const {
        return static_cast<std::uint8_t>((1u << milestone_count) - 1u);
    }

    // Expected focus target; focusing anything else fails the episode.
    bool focus_ok(const WorldState& s, int idx) const {
        if (idx != target) return false;
        if (kind == TaskKind::Grow)
            return s.objs[static_cast<std::size_t>(idx)].state == ObjState::Grown;
        return true;
    }

    // --- transition ------------------------------------------------------

    struct StepOutcome {
        WorldState next;
        std::string obs;
        double reward = 0.0;
        bool done = false;
        bool solved = false;
    };

    StepOutcome apply(const WorldState& s, const Action& act) const {
        const TemplateDef& t = def->templates[static_cast<std::size_t>(act.template_id)];
        StepOutcome out;
        out.next = s;
        WorldState& n = out.next;
        const int a = act.a, b = act.b;
        auto dyn = [&](int i) -> ObjDyn& { return n.objs[static_cast<std::size_t>(i)]; };
        auto obj = [&](int i) -> const WorldObject& {
            return objects[static_cast<std::size_t>(i)];
        };
        auto name = [&](int i) { return display_name(s, i); };

        switch (t.kind) {
            case TemplateKind::Look:
                out.obs = look_text(s);
                break;
            case TemplateKind::Wait:
                out.obs = "time passes.";
                break;
            case TemplateKind::Examine: {
                std::string ann = item_annotation(s, a);
                out.obs = "it is " + article(name(a)) + " " + name(a) + ann + ".";
                break;
            }
            case TemplateKind::Smell:
                out.obs = "the " + name(a) + " smells ordinary.";
                break;
            case TemplateKind::Read:
                out.obs = (obj(a).props & kReadable)
                              ? "you leaf through the " + name(a) + ". the pages are dull."
                              : "there is nothing written on the " + name(a) + ".";
                break;
            case TemplateKind::Eat:
                if (obj(a).props & kEdible) {
                    dyn(a).loc = kLocConsumed;
                    out.obs = "you eat the " + name(a) + ". it is delicious.";
                } else {
                    out.obs = "you cannot eat the " + name(a) + ".";
                }
                break;
            case TemplateKind::Water: {
                const ObjDyn& d = s.objs[static_cast<std::size_t>(a)];
                const bool planted = (obj(a).props & kPlantable) && plant_site >= 0 &&
                                     d.loc == static_cast<std::uint8_t>(kLocContainerBase +
                                                                        plant_site);
                const bool has_water = [&] {
                    for (std::size_t i = 0; i < objects.size(); ++i)
                        if ((objects[i].props & kWaterSource) &&
                            s.objs[i].loc == kLocInventory)
                            return true;
                    return false;
                }();
                if (!planted) {
                    out.obs = "watering the " + name(a) + " achieves nothing.";
                } else if (!has_water) {
                    out.obs = "you have nothing to water with.";
                } else if (d.state != ObjState::Normal) {
                    out.obs = "the " + name(a) + " is already wet.";
                } else {
                    dyn(a).state = ObjState::Watered;
                    out.obs = "you water the " + name(a) + ". the soil darkens.";
                }
                break;
            }
            case TemplateKind::Focus:
                if (focus_ok(s, a)) {
                    n.focused = true;
                    out.obs = "you focus on the " + name(a) + ".";
                } else {
                    n.failed = true;
                    out.obs = "focusing on the " + name(a) + " was a mistake. the task has failed.";
                }
                break;
            case TemplateKind::PickUp:
                if (s.objs[static_cast<std::size_t>(a)].loc == kLocInventory) {
                    out.obs = "you already have the " + name(a) + ".";
                } else {
                    dyn(a).loc = kLocInventory;
                    out.obs = "you pick up the " + name(a) + ".";
                }
                break;
            case TemplateKind::Drop:
                dyn(a).loc = s.agent_room;
                out.obs = "you drop the " + name(a) + ".";
                break;
            case TemplateKind::Open:
                if (s.objs[static_cast<std::size_t>(a)].flags & kFlagOpen) {
                    out.obs = "the " + name(a) + " is already open.";
                } else {
                    dyn(a).flags |= kFlagOpen;
                    std::string inside;
                    for (std::size_t i = 0; i < objects.size(); ++i) {
                        if (n.objs[i].loc ==
                            static_cast<std::uint8_t>(kLocContainerBase + a)) {
                            if (!inside.empty()) inside += ", ";
                            inside += display_name(n, static_cast<int>(i));
                        }
                    }
                    out.obs = "you open the " + name(a) + ". inside you see: " +
                              (inside.empty() ? "nothing" : inside) + ".";
                }
                break;
            case TemplateKind::Close:
                if (!(s.objs[static_cast<std::size_t>(a)].flags & kFlagOpen)) {
                    out.obs = "the " + name(a) + " is already closed.";
                } else {
                    dyn(a).flags &= static_cast<std::uint8_t>(~kFlagOpen);
                    out.obs = "you close the " + name(a) + ".";
                }
                break;
            case TemplateKind::Activate:
                if (s.objs[static_cast<std::size_t>(a)].flags & kFlagActive) {
                    out.obs = "the " + name(a) + " is already on.";
                } else {
                    dyn(a).flags |= kFlagActive;
                    out.obs = "you activate the " + name(a) + ".";
                    if (obj(a).props & kConnectTarget) {
                        bool any = false;
                        for (const ObjDyn& d : s.objs)
                            if (d.flags & kFlagConnected) any = true;
                        out.obs += any ? " a bulb flickers to life."
                                       : " nothing is connected to it.";
                    }
                }
                break;
            case TemplateKind::Deactivate:
                if (!(s.objs[static_cast<std::size_t>(a)].flags & kFlagActive)) {
                    out.obs = "the " + name(a) + " is already off.";
                } else {
                    dyn(a).flags &= static_cast<std::uint8_t>(~kFlagActive);
                    out.obs = "you deactivate the " + name(a) + ".";
                }
                break;
            case TemplateKind::MoveTo:
                if (!(obj(b).props & kReceptacle)) {
                    out.obs = "you cannot put things on the " + name(b) + ".";
                } else if ((obj(b).props & kContainer) &&
                           !(s.objs[static_cast<std::size_t>(b)].flags & kFlagOpen)) {
                    out.obs = "the " + name(b) + " is closed.";
                } else {
                    dyn(a).loc = static_cast<std::uint8_t>(kLocContainerBase + b);
                    out.obs = "you move the " + name(a) + " to the " + name(b) + ".";
                }
                break;
            case TemplateKind::Pour:
                out.obs = "nothing useful happens.";
                break;
            case TemplateKind::UseOn:
                if (obj(a).props & kInstrument) {
                    dyn(b).flags |= kFlagMeasured;
                    const ObjState st = s.objs[static_cast<std::size_t>(b)].state;
                    const char* deg = st == ObjState::Heated   ? "80"
                                      : st == ObjState::Frozen ? "0"
                                                               : "20";
                    out.obs = "the " + name(a) + " reads " + deg + " degrees celsius on the " +
                              name(b) + ".";
                } else {
                    out.obs = "you fiddle with the " + name(a) + " and the " + name(b) +
                              " to no effect.";
                }
                break;
            case TemplateKind::Connect:
                if (obj(b).props & kConnectTarget) {
                    dyn(a).flags |= kFlagConnected;
                    out.obs = "you connect the " + name(a) + " to the " + name(b) + ".";
                } else {
                    out.obs = "the " + name(a) + " cannot be connected to the " + name(b) + ".";
                }
                break;
            case TemplateKind::GoTo:
                n.agent_room = static_cast<std::uint8_t>(a);
                out.obs = "you go to the " + def->rooms[static_cast<std::size_t>(a)] + ".";
                break;
            case TemplateKind::Inert:
                out.obs = "nothing happens.";
                break;
        }

        tick(n);

        const std::uint8_t achieved = milestones_of(n);
        const std::uint8_t fresh = static_cast<std::uint8_t>(achieved & ~n.milestones);
        n.milestones |= achieved;
        out.reward = static_cast<double>(__builtin_popcount(fresh)) /
                     static_cast<double>(milestone_count);
        out.solved = n.milestones == all_milestones_mask();
        out.done = out.solved || n.failed;
        return out;
    }

    // End-of-step physics: heating, freezing, growth aging, circuit testing.
    void tick(WorldState& s) const {
        for (std::size_t i = 0; i < objects.size(); ++i) {
            ObjDyn& d = s.objs[i];
            if (d.loc >= kLocContainerBase && d.loc < kLocInventory) {
                const std::size_t c = static_cast<std::size_t>(d.loc - kLocContainerBase);
                if (s.objs[c].flags & kFlagActive) {
                    const bool plain = d.state == ObjState::Normal ||
                                       d.state == ObjState::Heated ||
                                       d.state == ObjState::Frozen;
                    if ((objects[c].props & kHeater) && plain) d.state = ObjState::Heated;
                    if ((objects[c].props & kCooler) && plain) d.state = ObjState::Frozen;
                }
            }
            if (d.state == ObjState::WateredAged) d.state = ObjState::Grown;
            else if (d.state == ObjState::Watered) d.state = ObjState::WateredAged;
            if ((d.flags & kFlagConnected) && connect_target >= 0 &&
                (s.objs[static_cast<std::size_t>(connect_target)].flags & kFlagActive))
                d.flags |= kFlagTested;
        }
    }

    std::vector<int> sorted_adjacent(int room) const {
        std::vector<int> adj = def->adjacent(room);
        std::sort(adj.begin(), adj.end());
        return adj;
    }

    static std::string article(const std::string& noun) {
        if (noun.empty()) return "a";
        switch (noun[0]) {
            case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
            default: return "a";
        }
    }
};

// ---------------------------------------------------------------------------
// EnvInstance: single-owner mutable episode over a shared immutable World.
// ---------------------------------------------------------------------------

class EnvInstance {
public:
    explicit EnvInstance(std::shared_ptr<const World> world) : world_(std::move(world)) {
        state_ = world_->initial;
    }

    struct StepResult {
        Observation obs;
        double reward = 0.0;
        bool done = false;
    };

    Observation reset() {
        state_ = world_->initial;
        steps_ = 0;
        done_ = false;
        return world_->observe(state_, world_->begin_obs);
    }

    StepResult step(const Action& action) {
        if (done_) throw std::logic_error("EnvInstance::step: episode already finished");
        if (!world_->is_valid(state_, action))
            throw std::invalid_argument("EnvInstance::step: invalid action: " + action.text);
        World::StepOutcome o = world_->apply(state_, action);
        state_ = std::move(o.next);
        ++steps_;
        done_ = o.done || steps_ >= world_->def->episode_cap;
        return StepResult{world_->observe(state_, o.obs), o.reward, done_};
    }

    std::vector<Action> valid_actions() const { return world_->valid_actions(state_); }

    const TaskSpec& spec() const { return world_->spec; }
    const World& world() const { return *world_; }
    std::shared_ptr<const World> world_ptr() const { return world_; }
    const WorldState& state() const { return state_; }
    int steps() const { return steps_; }
    bool done() const { return done_; }

private:
    std::shared_ptr<const World> world_;
    WorldState state_;
    int steps_ = 0;
    bool done_ = false;
};

// ---------------------------------------------------------------------------
// Variation plan: which target/destination/goal a (task_type, variation)
// denotes. Pure in (task_type, variation) so descriptions regenerate exactly.
// ---------------------------------------------------------------------------

struct VariationPlan {
    TaskKind kind;
    int target_category = -1;
    std::string target_modifier;
    std::string dest_name;        // bring
    std::string instrument_modifier;  // measure
    ObjState goal_state = ObjState::Heated;
    std::string description;
};

inline VariationPlan variation_plan(const WorldDef& def, int task_type, int variation) {
    if (task_type < 0 || static_cast<std::size_t>(task_type) >= def.tasks.size())
        throw std::invalid_argument("variation_plan: task_type out of range");
    if (variation < 0 || variation >= def.variations_per_task)
        throw std::invalid_argument("variation_plan: variation out of range");
    const TaskTypeDef& t = def.tasks[static_cast<std::size_t>(task_type)];
    VariationPlan plan;
    plan.kind = t.kind;
    const std::size_t ncat = t.target_categories.size();
    std::size_t cat_pick = static_cast<std::size_t>(variation) % ncat;
    if (t.kind == TaskKind::ChangeState) {
        plan.goal_state = (variation % 2 == 0) ? ObjState::Heated : ObjState::Frozen;
        cat_pick = (static_cast<std::size_t>(variation) / 2) % ncat;
    }
    plan.target_category = def.category_index(t.target_categories[cat_pick]);
    const CategoryDef& cat = def.categories[static_cast<std::size_t>(plan.target_category)];
    plan.target_modifier = cat.modifiers[static_cast<std::size_t>(variation) %
                                         cat.modifiers.size()];
    if (t.kind == TaskKind::Bring)
        plan.dest_name = t.destinations[(static_cast<std::size_t>(variation) * 7 + 3) %
                                        t.destinations.size()];
    if (t.kind == TaskKind::Measure) {
        const CategoryDef& th = def.categories[static_cast<std::size_t>(
            def.category_index("thermometer"))];
        plan.instrument_modifier =
            th.modifiers[static_cast<std::size_t>(variation) % th.modifiers.size()];
    }

    const std::string full = plan.target_modifier + " " + cat.noun;
    std::string desc = (t.kind == TaskKind::ChangeState && plan.goal_state == ObjState::Frozen)
                           ? t.description_alt
                           : t.description;
    auto subst_all = [&](const std::string& ph, const std::string& value) {
        std::size_t pos;
        while ((pos = desc.find(ph)) != std::string::npos) desc.replace(pos, ph.size(), value);
    };
    subst_all("{article}", World::article(cat.noun));
    subst_all("{noun}", cat.noun);
    subst_all("{target}", full);
    subst_all("{dest}", plan.dest_name);
    plan.description = desc;
    return plan;
}

inline TaskSpec make_task_spec(const WorldDef& def, int task_type, int variation, Split split) {
    return TaskSpec{task_type, variation, variation_plan(def, task_type, variation).description,
                    split};
}

// ---------------------------------------------------------------------------
// World generation
// ---------------------------------------------------------------------------

namespace detail {

inline int find_fixture(const std::vector<WorldObject>& objs, std::uint32_t prop) {
    for (std::size_t i = 0; i < objs.size(); ++i)
        if (objs[i].props & prop) return static_cast<int>(i);
    return -1;
}

inline int find_fixture_by_name(const std::vector<WorldObject>& objs, const std::string& name) {
    for (std::size_t i = 0; i < objs.size(); ++i)
        if (objs[i].display == name) return static_cast<int>(i);
    return -1;
}

// Shortest room path via the (tiny) room graph.
inline std::vector<int> room_path(const WorldDef& def, int from, int to) {
    if (from == to) return {};
    std::vector<int> prev(def.rooms.size(), -1);
    std::deque<int> q{from};
    std::vector<bool> seen(def.rooms.size(), false);
    seen[static_cast<std::size_t>(from)] = true;
    while (!q.empty()) {
        int r = q.front();
        q.pop_front();
        std::vector<int> adj = def.adjacent(r);
        std::sort(adj.begin(), adj.end());
        for (int nxt : adj) {
            if (seen[static_cast<std::size_t>(nxt)]) continue;
            seen[static_cast<std::size_t>(nxt)] = true;
            prev[static_cast<std::size_t>(nxt)] = r;
            if (nxt == to) {
                std::vector<int> path{to};
                for (int cur = to; prev[static_cast<std::size_t>(cur)] != -1 &&
                                   prev[static_cast<std::size_t>(cur)] != from;
                     cur = prev[static_cast<std::size_t>(cur)])
                    path.push_back(prev[static_cast<std::size_t>(cur)]);
                std::reverse(path.begin(), path.end());
                return path;
            }
            q.push_back(nxt);
        }
    }
    throw std::runtime_error("room_path: unreachable room");
}

}  // namespace detail

class Planner;  // fwd
inline bool verify_solvable(const World& w);

std::shared_ptr<const World> generate_world(std::shared_ptr<const WorldDef> def,
                                            const TaskSpec& spec, std::uint64_t world_seed);

inline EnvInstance make_env(std::shared_ptr<const WorldDef> def, const TaskSpec& spec,
                            std::uint64_t world_seed) {
    return EnvInstance(generate_world(std::move(def), spec, world_seed));
}

// ---------------------------------------------------------------------------
// Gold planner: breadth-first search over the deterministic state graph.
// Actions touching only distractor objects never change a milestone
// predicate, so the search expands task-relevant moves only; ties break by
// the valid-action ordering.
// ---------------------------------------------------------------------------

class Planner {
public:
    static constexpr int kMaxDepth = 50;
    static constexpr std::size_t kNodeBudget = 2'000'000;

    static GoldTrajectory plan(const World& world) {
        std::vector<char> relevant(world.objects.size(), 0);
        auto mark = [&](int i) {
            if (i >= 0) {
                relevant[static_cast<std::size_t>(i)] = 1;
                const std::uint8_t loc =
                    world.initial.objs[static_cast<std::size_t>(i)].loc;
                if (loc >= kLocContainerBase && loc < kLocInventory)
                    relevant[static_cast<std::size_t>(loc - kLocContainerBase)] = 1;
            }
        };
        mark(world.target);
        mark(world.instrument);
        mark(world.dest);
        mark(world.device);
        mark(world.plant_site);
        mark(world.connect_target);
        if (world.kind == TaskKind::Grow)
            mark(detail::find_fixture(world.objects, kWaterSource));

        struct Node {
            WorldState state;
            int parent;
            int template_id, a, b;
            int depth;
        };
        std::vector<Node> nodes;
        std::unordered_set<std::string> seen;
        nodes.push_back({world.initial, -1, -1, -1, -1, 0});
        seen.insert(world.initial.key());

        for (std::size_t qi = 0; qi < nodes.size(); ++qi) {
            if (nodes.size() > kNodeBudget)
                throw std::runtime_error("Planner: node budget exhausted");
            const Node cur = nodes[qi];  // copy: nodes may reallocate
            if (cur.depth >= kMaxDepth) continue;
            for (const Action& act : world.valid_actions(cur.state)) {
                const TemplateDef& t =
                    world.def->templates[static_cast<std::size_t>(act.template_id)];
                if (!expandable(t.kind)) continue;
                if (t.kind == TemplateKind::Focus && act.a != world.target) continue;
                if (t.arity >= 1 && t.slot0 != SlotKind::Room &&
                    !relevant[static_cast<std::size_t>(act.a)])
                    continue;
                if (t.arity >= 2 && !relevant[static_cast<std::size_t>(act.b)]) continue;
                World::StepOutcome o = world.apply(cur.state, act);
                if (o.next.failed) continue;
                if (o.solved) {
                    nodes.push_back({std::move(o.next), static_cast<int>(qi), act.template_id,
                                     act.a, act.b, cur.depth + 1});
                    return reconstruct(world, nodes, static_cast<int>(nodes.size() - 1));
                }
                std::string key = o.next.key();
                if (seen.insert(std::move(key)).second)
                    nodes.push_back({std::move(o.next), static_cast<int>(qi), act.template_id,
                                     act.a, act.b, cur.depth + 1});
            }
        }
        throw std::runtime_error("Planner: no solution within depth 50");
    }

private:
    static bool expandable(TemplateKind k) {
        switch (k) {
            case TemplateKind::Wait:
            case TemplateKind::Focus:
            case TemplateKind::PickUp:
            case TemplateKind::Open:
            case TemplateKind::Activate:
            case TemplateKind::MoveTo:
            case TemplateKind::UseOn:
            case TemplateKind::Connect:
            case TemplateKind::Water:
            case TemplateKind::GoTo:
                return true;
            default:
                return false;
        }
    }

    template <typename Nodes>
    static GoldTrajectory reconstruct(const World& world, const Nodes& nodes, int leaf) {
        std::vector<std::array<int, 3>> steps;
        for (int cur = leaf; nodes[static_cast<std::size_t>(cur)].parent != -1;
             cur = nodes[static_cast<std::size_t>(cur)].parent) {
            const auto& n = nodes[static_cast<std::size_t>(cur)];
            steps.push_back({n.template_id, n.a, n.b});
        }
        std::reverse(steps.begin(), steps.end());
        // Re-render along the path: display names may change as state evolves.
        GoldTrajectory gold;
        WorldState s = world.initial;
        for (const auto& [tid, a, b] : steps) {
            Action act = world.make_action(s, tid, a, b);
            World::StepOutcome o = world.apply(s, act);
            s = std::move(o.next);
            gold.actions.push_back(std::move(act));
        }
        return gold;
    }
};

inline GoldTrajectory plan_gold(const EnvInstance& env) {
    if (env.steps() != 0)
        throw std::logic_error("plan_gold: environment must be freshly reset");
    return Planner::plan(env.world());
}

// Replays a trajectory from reset; returns the cumulative return.
inline double replay_gold(EnvInstance& env, const GoldTrajectory& gold) {
    env.reset();
    double total = 0.0;
    for (const Action& a : gold.actions) {
        auto r = env.step(a);
        total += r.reward;
        if (r.done) break;
    }
    return total;
}

// ---------------------------------------------------------------------------
// generate_world implementation
// ---------------------------------------------------------------------------

inline std::shared_ptr<const World> generate_world(std::shared_ptr<const WorldDef> def,
                                                   const TaskSpec& spec,
                                                   std::uint64_t world_seed) {
    const VariationPlan plan = variation_plan(*def, spec.task_type, spec.variation);
    const std::uint64_t base =
        world_seed ^ fnv1a64(std::to_string(spec.task_type) + ":" +
                             std::to_string(spec.variation));

    for (int attempt = 0; attempt < 8; ++attempt) {
        RngStream rng(mix_seed(base + static_cast<std::uint64_t>(attempt) * 0x9e37ull,
                               "placement"));
        auto world = std::make_shared<World>();
        World& w = *world;
        w.def = def;
        w.spec = spec;
        w.kind = plan.kind;
        w.goal_state = plan.goal_state;

        std::set<std::string> used_names;
        for (const FixtureDef& f : def->fixtures) {
            w.objects.push_back(WorldObject{f.name, f.name, "", f.props,
                                            def->room_index(f.room), -1});
            used_names.insert(f.name);
        }
        w.connect_target = detail::find_fixture(w.objects, kConnectTarget);
        w.plant_site = detail::find_fixture(w.objects, kPlantSite);

        auto add_instance = [&](int cat_idx, const std::string& mod, int room,
                                int container) -> int {
            const CategoryDef& cat = def->categories[static_cast<std::size_t>(cat_idx)];
            const std::string name = mod + " " + cat.noun;
            if (!used_names.insert(name).second) return -1;
            w.objects.push_back(WorldObject{name, cat.noun, mod, cat.props, room, container});
            return static_cast<int>(w.objects.size() - 1);
        };

        const int n_rooms = static_cast<int>(def->rooms.size());
        w.start_room = static_cast<int>(rng.index(static_cast<std::size_t>(n_rooms)));
        const int target_room = static_cast<int>(rng.index(static_cast<std::size_t>(n_rooms)));
        w.target = add_instance(plan.target_category, plan.target_modifier, target_room, -1);
        if (w.target < 0) continue;

        if (plan.kind == TaskKind::Measure) {
            const int th_cat = def->category_index("thermometer");
            int th_room = static_cast<int>(rng.index(static_cast<std::size_t>(n_rooms)));
            int th_container = -1;
            if (rng.index(5) < 2) {
                const int cupboard = detail::find_fixture_by_name(w.objects, "cupboard");
                if (cupboard >= 0) {
                    th_container = cupboard;
                    th_room = w.objects[static_cast<std::size_t>(cupboard)].init_room;
                }
            }
            w.instrument = add_instance(th_cat, plan.instrument_modifier, th_room, th_container);
            if (w.instrument < 0) continue;
        }
        if (plan.kind == TaskKind::Bring) {
            w.dest = detail::find_fixture_by_name(w.objects, plan.dest_name);
            if (w.dest < 0) throw std::runtime_error("generate_world: unknown destination " +
                                                     plan.dest_name);
        }
        if (plan.kind == TaskKind::ChangeState) {
            w.device = detail::find_fixture(
                w.objects, plan.goal_state == ObjState::Heated ? kHeater : kCooler);
            if (w.device < 0) throw std::runtime_error("generate_world: no device fixture");
        }

        switch (plan.kind) {
            case TaskKind::Find: w.milestone_count = 2; break;
            case TaskKind::Bring:
            case TaskKind::ChangeState:
            case TaskKind::Measure: w.milestone_count = 3; break;
            case TaskKind::Conduct:
            case TaskKind::Grow: w.milestone_count = 4; break;
        }

        // Distractors. Find-tasks exclude the target category so the target
        // stays the unique valid focus.
        int want = def->distractors;
        for (int guard = 0; want > 0 && guard < 64; ++guard) {
            const int cat_idx = static_cast<int>(rng.index(def->categories.size()));
            if (plan.kind == TaskKind::Find && cat_idx == plan.target_category) continue;
            const CategoryDef& cat = def->categories[static_cast<std::size_t>(cat_idx)];
            const std::string& mod =
                cat.modifiers[rng.index(cat.modifiers.size())];
            const int room = static_cast<int>(rng.index(static_cast<std::size_t>(n_rooms)));
            if (add_instance(cat_idx, mod, room, -1) >= 0) --want;
        }

        // Initial dynamic state.
        WorldState init;
        init.objs.resize(w.objects.size());
        for (std::size_t i = 0; i < w.objects.size(); ++i) {
            const WorldObject& o = w.objects[i];
            ObjDyn& d = init.objs[i];
            d.loc = o.init_container >= 0
                        ? static_cast<std::uint8_t>(kLocContainerBase + o.init_container)
                        : static_cast<std::uint8_t>(o.init_room);
            const bool openable = (o.props & kContainer) != 0;
            if (!openable || !(o.props & kStartsClosed)) d.flags |= kFlagOpen;
            d.state = ObjState::Normal;
        }
        init.agent_room = static_cast<std::uint8_t>(w.start_room);
        w.initial = init;
        w.begin_obs = "you begin in the " + def->rooms[static_cast<std::size_t>(w.start_room)] + ".";

        // Action-space floor at reset; top up the start room with extra
        // distractors before giving up on this attempt.
        auto floor_ok = [&]() {
            return w.valid_actions(w.initial).size() >=
                   static_cast<std::size_t>(def->action_floor);
        };
        for (int extra = 0; !floor_ok() && extra < 6; ++extra) {
            const int cat_idx = static_cast<int>(rng.index(def->categories.size()));
            if (plan.kind == TaskKind::Find && cat_idx == plan.target_category) continue;
            const CategoryDef& cat = def->categories[static_cast<std::size_t>(cat_idx)];
            if (add_instance(cat_idx, cat.modifiers[rng.index(cat.modifiers.size())],
                             w.start_room, -1) >= 0) {
                init.objs.push_back(ObjDyn{static_cast<std::uint8_t>(w.start_room), kFlagOpen,
                                           ObjState::Normal});
                w.initial = init;
            }
        }
        if (!floor_ok()) continue;

        // Solvability check by scripted replay.
        if (!verify_solvable(w)) continue;
        return world;
    }
    throw std::runtime_error("generate_world: failed to generate a solvable world");
}

// Builds and replays a scripted solution; true iff it reaches return 1.0.
inline bool verify_solvable(const World& w) {
    const WorldDef& def = *w.def;
    int goto_t = -1, pickup_t = -1, move_t = -1, open_t = -1, activate_t = -1, use_t = -1,
        connect_t = -1, water_t = -1, focus_t = -1, wait_t = -1;
    for (std::size_t i = 0; i < def.templates.size(); ++i) {
        const int ti = static_cast<int>(i);
        switch (def.templates[i].kind) {
            case TemplateKind::GoTo: goto_t = ti; break;
            case TemplateKind::PickUp: pickup_t = ti; break;
            case TemplateKind::MoveTo: move_t = ti; break;
            case TemplateKind::Open: open_t = ti; break;
            case TemplateKind::Activate: activate_t = ti; break;
            case TemplateKind::UseOn: use_t = ti; break;
            case TemplateKind::Connect: connect_t = ti; break;
            case TemplateKind::Water: water_t = ti; break;
            case TemplateKind::Focus: focus_t = ti; break;
            case TemplateKind::Wait: wait_t = ti; break;
            default: break;
        }
    }

    WorldState s = w.initial;
    double total = 0.0;
    int steps = 0;
    auto do_act = [&](int tid, int a = -1, int b = -1) {
        Action act = w.make_action(s, tid, a, b);
        if (!w.is_valid(s, act)) throw std::runtime_error("script: invalid " + act.text);
        World::StepOutcome o = w.apply(s, act);
        s = std::move(o.next);
        total += o.reward;
        ++steps;
    };
    auto nav_to = [&](int room) {
        for (int r : detail::room_path(def, s.agent_room, room)) do_act(goto_t, r);
    };
    auto room_of = [&](int obj) {
        const ObjDyn& d = s.objs[static_cast<std::size_t>(obj)];
        if (d.loc >= kLocContainerBase && d.loc < kLocInventory)
            return static_cast<int>(
                s.objs[static_cast<std::size_t>(d.loc - kLocContainerBase)].loc);
        return static_cast<int>(d.loc);
    };
    auto fetch = [&](int obj) {
        nav_to(room_of(obj));
        const ObjDyn& d = s.objs[static_cast<std::size_t>(obj)];
        if (d.loc >= kLocContainerBase && d.loc < kLocInventory) {
            const int c = d.loc - kLocContainerBase;
            if (!(s.objs[static_cast<std::size_t>(c)].flags & kFlagOpen)) do_act(open_t, c);
        }
        do_act(pickup_t, obj);
    };

    try {
        switch (w.kind) {
            case TaskKind::Find:
                fetch(w.target);
                do_act(focus_t, w.target);
                break;
            case TaskKind::Bring:
                fetch(w.target);
                nav_to(room_of(w.dest));
                do_act(move_t, w.target, w.dest);
                do_act(focus_t, w.target);
                break;
            case TaskKind::ChangeState: {
                fetch(w.target);
                nav_to(room_of(w.device));
                const ObjDyn& dd = s.objs[static_cast<std::size_t>(w.device)];
                if ((w.objects[static_cast<std::size_t>(w.device)].props & kContainer) &&
                    !(dd.flags & kFlagOpen))
                    do_act(open_t, w.device);
                do_act(move_t, w.target, w.device);
                do_act(activate_t, w.device);
                do_act(focus_t, w.target);
                break;
            }
            case TaskKind::Measure:
                fetch(w.instrument);
                nav_to(room_of(w.target));
                do_act(use_t, w.instrument, w.target);
                do_act(focus_t, w.target);
                break;
            case TaskKind::Conduct:
                fetch(w.target);
                nav_to(room_of(w.connect_target));
                do_act(connect_t, w.target, w.connect_target);
                do_act(activate_t, w.connect_target);
                do_act(focus_t, w.target);
                break;
            case TaskKind::Grow: {
                fetch(w.target);
                nav_to(room_of(w.plant_site));
                do_act(move_t, w.target, w.plant_site);
                const int jug = detail::find_fixture(w.objects, kWaterSource);
                if (jug < 0) return false;
                fetch(jug);
                nav_to(room_of(w.plant_site));
                do_act(water_t, w.target);
                do_act(wait_t);
                do_act(focus_t, w.target);
                break;
            }
        }
    } catch (const std::exception&) {
        return false;
    }
    return steps <= def.episode_cap && std::abs(total - 1.0) < 1e-12 &&
           s.milestones == w.all_milestones_mask();
}

// ---------------------------------------------------------------------------
// Variation splits
// ---------------------------------------------------------------------------

struct VariationSplits {
    std::vector<int> train, dev, test;

    const std::vector<int>& of(Split s) const {
        switch (s) {
            case Split::Train: return train;
            case Split::Dev: return dev;
            default: return test;
        }
    }
};

inline VariationSplits split_variations(int task_type, int n_variations,
                                        std::array<int, 3> counts, std::uint64_t seed) {
    if (counts[0] + counts[1] + counts[2] > n_variations)
        throw std::invalid_argument("split_variations: counts exceed variation count");
    std::vector<int> ids(static_cast<std::size_t>(n_variations));
    for (int i = 0; i < n_variations; ++i) ids[static_cast<std::size_t>(i)] = i;
    RngStream rng(mix_seed(seed, "split-" + std::to_string(task_type)));
    std::shuffle(ids.begin(), ids.end(), rng.engine());
    VariationSplits out;
    int k = 0;
    for (int i = 0; i < counts[0]; ++i) out.train.push_back(ids[static_cast<std::size_t>(k++)]);
    for (int i = 0; i < counts[1]; ++i) out.dev.push_back(ids[static_cast<std::size_t>(k++)]);
    for (int i = 0; i < counts[2]; ++i) out.test.push_back(ids[static_cast<std::size_t>(k++)]);
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.dev.begin(), out.dev.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

}  // namespace lge
