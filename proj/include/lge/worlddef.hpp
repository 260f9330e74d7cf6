#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lge/util.hpp"

namespace lge {

// Object property flags.
enum ObjProp : std::uint32_t {
    kPortable = 1u << 0,
    kEdible = 1u << 1,
    kReadable = 1u << 2,
    kReceptacle = 1u << 3,   // things can be moved onto/into it
    kContainer = 1u << 4,    // openable; contents hidden while closed
    kStartsClosed = 1u << 5,
    kDevice = 1u << 6,       // can be activated/deactivated
    kHeater = 1u << 7,
    kCooler = 1u << 8,
    kInstrument = 1u << 9,   // "use X on Y" produces a reading
    kPlantable = 1u << 10,
    kWaterSource = 1u << 11,
    kPlantSite = 1u << 12,
    kConnectTarget = 1u << 13,
    kScenery = 1u << 14,
};

enum class SlotKind { None, Any, Portable, Inventory, Container, Device, Room };

// Behavior binding for a template, keyed by the template's name in the
// definition file. Unknown names are valid but inert.
enum class TemplateKind {
    Look, Wait, Examine, Smell, Read, Eat, Water, Focus, PickUp, Drop, Open,
    Close, Activate, Deactivate, MoveTo, Pour, UseOn, Connect, GoTo, Inert
};

enum class TaskKind { Find, Bring, ChangeState, Measure, Conduct, Grow };

struct TemplateDef {
    std::string key;
    int arity = 0;
    SlotKind slot0 = SlotKind::None;
    SlotKind slot1 = SlotKind::None;
    std::string pattern;  // "{0}"/"{1}" replaced by slot names
    TemplateKind kind = TemplateKind::Inert;
};

struct CategoryDef {
    std::string noun;
    std::uint32_t props = 0;
    std::vector<std::string> modifiers;  // variation v picks modifiers[v % size]
};

struct FixtureDef {
    std::string name;
    std::string room;
    std::uint32_t props = 0;
};

struct TaskTypeDef {
    TaskKind kind = TaskKind::Find;
    std::vector<std::string> target_categories;
    std::vector<std::string> destinations;  // bring: fixture names
    std::string description;                // {article} {noun} {target} {dest} placeholders
    std::string description_alt;            // chstate: freeze wording
};

// Parsed world definition: the action grammar, room graph, object catalog and
// task rosters the generator draws from.
struct WorldDef {
    int schema_version = 0;
    std::vector<std::string> rooms;
    std::vector<std::pair<int, int>> doors;
    std::vector<FixtureDef> fixtures;
    std::vector<CategoryDef> categories;
    std::vector<TemplateDef> templates;
    std::vector<TaskTypeDef> tasks;
    int episode_cap = 100;
    int action_floor = 200;
    int distractors = 8;
    int variations_per_task = 10;

    int room_index(const std::string& name) const {
        for (std::size_t i = 0; i < rooms.size(); ++i)
            if (rooms[i] == name) return static_cast<int>(i);
        throw std::runtime_error("WorldDef: unknown room " + name);
    }

    int category_index(const std::string& noun) const {
        for (std::size_t i = 0; i < categories.size(); ++i)
            if (categories[i].noun == noun) return static_cast<int>(i);
        throw std::runtime_error("WorldDef: unknown category " + noun);
    }

    std::vector<int> adjacent(int room) const {
        std::vector<int> out;
        for (auto [a, b] : doors) {
            if (a == room) out.push_back(b);
            if (b == room) out.push_back(a);
        }
        return out;
    }
};

namespace worlddef_detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return out;
}

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    if (s.empty() || s == "-") return out;
    std::size_t start = 0;
    while (true) {
        std::size_t c = s.find(',', start);
        if (c == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, c - start));
        start = c + 1;
    }
    return out;
}

inline std::uint32_t parse_props(const std::string& csv) {
    std::uint32_t props = 0;
    for (const std::string& f : split_csv(csv)) {
        if (f == "portable") props |= kPortable;
        else if (f == "edible") props |= kEdible;
        else if (f == "readable") props |= kReadable;
        else if (f == "receptacle") props |= kReceptacle;
        else if (f == "container") props |= kContainer | kReceptacle;
        else if (f == "closed") props |= kStartsClosed;
        else if (f == "device") props |= kDevice;
        else if (f == "heater") props |= kHeater;
        else if (f == "cooler") props |= kCooler;
        else if (f == "instrument") props |= kInstrument;
        else if (f == "plantable") props |= kPlantable;
        else if (f == "watersource") props |= kWaterSource;
        else if (f == "plantsite") props |= kPlantSite;
        else if (f == "connecttarget") props |= kConnectTarget;
        else if (f == "scenery") props |= kScenery;
        else throw std::runtime_error("WorldDef: unknown flag " + f);
    }
    return props;
}

inline SlotKind parse_slot(const std::string& s) {
    if (s == "-" || s.empty()) return SlotKind::None;
    if (s == "any") return SlotKind::Any;
    if (s == "portable") return SlotKind::Portable;
    if (s == "inventory") return SlotKind::Inventory;
    if (s == "container") return SlotKind::Container;
    if (s == "device") return SlotKind::Device;
    if (s == "room") return SlotKind::Room;
    throw std::runtime_error("WorldDef: unknown slot kind " + s);
}

inline TemplateKind template_kind(const std::string& key) {
    if (key == "look") return TemplateKind::Look;
    if (key == "wait") return TemplateKind::Wait;
    if (key == "examine") return TemplateKind::Examine;
    if (key == "smell") return TemplateKind::Smell;
    if (key == "read") return TemplateKind::Read;
    if (key == "eat") return TemplateKind::Eat;
    if (key == "water") return TemplateKind::Water;
    if (key == "focus") return TemplateKind::Focus;
    if (key == "pickup") return TemplateKind::PickUp;
    if (key == "drop") return TemplateKind::Drop;
    if (key == "open") return TemplateKind::Open;
    if (key == "close") return TemplateKind::Close;
    if (key == "activate") return TemplateKind::Activate;
    if (key == "deactivate") return TemplateKind::Deactivate;
    if (key == "move") return TemplateKind::MoveTo;
    if (key == "pour") return TemplateKind::Pour;
    if (key == "use") return TemplateKind::UseOn;
    if (key == "connect") return TemplateKind::Connect;
    if (key == "goto") return TemplateKind::GoTo;
    return TemplateKind::Inert;
}

inline TaskKind parse_task_kind(const std::string& s) {
    if (s == "find") return TaskKind::Find;
    if (s == "bring") return TaskKind::Bring;
    if (s == "chstate") return TaskKind::ChangeState;
    if (s == "measure") return TaskKind::Measure;
    if (s == "conduct") return TaskKind::Conduct;
    if (s == "grow") return TaskKind::Grow;
    throw std::runtime_error("WorldDef: unknown task kind " + s);
}

}  // namespace worlddef_detail

inline WorldDef parse_world_def(std::istream& is) {
    using namespace worlddef_detail;
    WorldDef def;
    std::string line;
    int lineno = 0;
    bool versioned = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto f = split_tabs(line);
        const std::string& kw = f[0];
        auto need = [&](std::size_t n) {
            if (f.size() < n)
                throw std::runtime_error("WorldDef: line " + std::to_string(lineno) +
                                         ": expected " + std::to_string(n) + " fields");
        };
        try {
            if (kw == "lge-world") {
                need(2);
                def.schema_version = std::stoi(f[1]);
                if (def.schema_version != 1)
                    throw std::runtime_error("unsupported schema version " + f[1]);
                versioned = true;
            } else if (kw == "room") {
                need(2);
                def.rooms.push_back(f[1]);
            } else if (kw == "door") {
                need(3);
                def.doors.emplace_back(def.room_index(f[1]), def.room_index(f[2]));
            } else if (kw == "fixture") {
                need(3);
                def.fixtures.push_back({f[1], f[2], f.size() > 3 ? parse_props(f[3]) : 0});
                def.room_index(f[2]);
            } else if (kw == "category") {
                need(4);
                def.categories.push_back({f[1], parse_props(f[2]), split_csv(f[3])});
            } else if (kw == "template") {
                need(6);
                TemplateDef t;
                t.key = f[1];
                t.arity = std::stoi(f[2]);
                t.slot0 = parse_slot(f[3]);
                t.slot1 = parse_slot(f[4]);
                t.pattern = f[5];
                t.kind = template_kind(t.key);
                def.templates.push_back(std::move(t));
            } else if (kw == "task") {
                need(6);
                TaskTypeDef t;
                t.kind = parse_task_kind(f[1]);
                t.target_categories = split_csv(f[2]);
                t.destinations = split_csv(f[3]);
                t.description = f[4];
                t.description_alt = f[5] == "-" ? "" : f[5];
                def.tasks.push_back(std::move(t));
            } else if (kw == "set") {
                need(3);
                if (f[1] == "cap") def.episode_cap = std::stoi(f[2]);
                else if (f[1] == "floor") def.action_floor = std::stoi(f[2]);
                else if (f[1] == "distractors") def.distractors = std::stoi(f[2]);
                else if (f[1] == "variations") def.variations_per_task = std::stoi(f[2]);
                else throw std::runtime_error("unknown knob " + f[1]);
            } else {
                throw std::runtime_error("unknown keyword " + kw);
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("WorldDef: line " + std::to_string(lineno) + ": " +
                                     e.what());
        }
    }
    if (!versioned) throw std::runtime_error("WorldDef: missing lge-world version header");
    if (def.rooms.empty()) throw std::runtime_error("WorldDef: no rooms");
    if (def.templates.empty()) throw std::runtime_error("WorldDef: no templates");
    return def;
}

inline WorldDef parse_world_def(const std::string& text) {
    std::istringstream is(text);
    return parse_world_def(is);
}

inline WorldDef load_world_def(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_world_def: cannot open " + path);
    return parse_world_def(is);
}

// Built-in world definition; gen-suite snapshots it next to the suite so a
// run is reproducible from its own artifacts.
inline const char* default_world_def_text() {
    return
        "lge-world\t1\n"
        "room\tkitchen\n"
        "room\thallway\n"
        "room\tworkshop\n"
        "room\tgreenhouse\n"
        "room\tbathroom\n"
        "room\toutside\n"
        "door\thallway\tkitchen\n"
        "door\thallway\tworkshop\n"
        "door\thallway\tgreenhouse\n"
        "door\thallway\tbathroom\n"
        "door\tkitchen\toutside\n"
        "fixture\tstove\tkitchen\tdevice,heater,receptacle\n"
        "fixture\tsink\tkitchen\treceptacle\n"
        "fixture\tfreezer\tkitchen\tdevice,cooler,container,closed\n"
        "fixture\tcupboard\tkitchen\tcontainer,closed\n"
        "fixture\tcounter\tkitchen\treceptacle\n"
        "fixture\tspice rack\tkitchen\tscenery\n"
        "fixture\tbattery\tworkshop\tconnecttarget,device\n"
        "fixture\tworkbench\tworkshop\treceptacle\n"
        "fixture\tshelf\tworkshop\treceptacle\n"
        "fixture\ttoolbox\tworkshop\tcontainer,closed\n"
        "fixture\tvise\tworkshop\tscenery\n"
        "fixture\tflower pot\tgreenhouse\tplantsite,receptacle\n"
        "fixture\ttrellis\tgreenhouse\tscenery\n"
        "fixture\tcompost bin\tgreenhouse\treceptacle\n"
        "fixture\twatering can\tgreenhouse\tportable,watersource\n"
        "fixture\tmirror\tbathroom\tscenery\n"
        "fixture\tbathtub\tbathroom\treceptacle\n"
        "fixture\ttowel rack\tbathroom\tscenery\n"
        "fixture\tpainting\thallway\tscenery\n"
        "fixture\tcoat rack\thallway\tscenery\n"
        "fixture\tclock\thallway\tscenery\n"
        "fixture\tbench\toutside\treceptacle\n"
        "fixture\tmailbox\toutside\tcontainer,closed\n"
        "fixture\tbird bath\toutside\treceptacle\n"
        "category\tapple\tportable,edible\t"
        "red,green,ripe,sour,crisp,sweet,juicy,golden,waxy,bruised\n"
        "category\tbook\tportable,readable\t"
        "old,blue,thick,torn,heavy,paper,leather,dusty,ancient,gilded\n"
        "category\thammer\tportable\t"
        "steel,rusty,wooden,claw,stubby,brass,titanium,worn,forged,chrome\n"
        "category\tsponge\tportable\t"
        "yellow,damp,rough,square,soft,flat,orange,coarse,natural,sea\n"
        "category\tpot\tportable,receptacle\t"
        "ceramic,dented,iron,deep,shallow,silver,enamel,clay,polished,glazed\n"
        "category\tfork\tportable\t"
        "bent,tiny,shiny,long,plastic,carving,pewter,nickel,ornate,etched\n"
        "category\twire\tportable\t"
        "black,copper,short,thin,frayed,stripped,braided,insulated,coiled,twisted\n"
        "category\tseed\tportable,plantable\t"
        "melon,bean,corn,pea,flax,oat,barley,squash,lentil,clover\n"
        "category\tthermometer\tportable,instrument\t"
        "glass,lab,wall,cheap,round,new,digital,antique,calibrated,cracked\n"
        "template\tlook\t0\t-\t-\tlook around\n"
        "template\twait\t0\t-\t-\twait\n"
        "template\texamine\t1\tany\t-\texamine {0}\n"
        "template\tlookat\t1\tany\t-\tlook at {0}\n"
        "template\tsmell\t1\tany\t-\tsmell {0}\n"
        "template\tread\t1\tany\t-\tread {0}\n"
        "template\teat\t1\tany\t-\teat {0}\n"
        "template\twater\t1\tany\t-\twater {0}\n"
        "template\tfocus\t1\tany\t-\tfocus on {0}\n"
        "template\tpickup\t1\tportable\t-\tpick up {0}\n"
        "template\tdrop\t1\tinventory\t-\tdrop {0}\n"
        "template\topen\t1\tcontainer\t-\topen {0}\n"
        "template\tclose\t1\tcontainer\t-\tclose {0}\n"
        "template\tactivate\t1\tdevice\t-\tactivate {0}\n"
        "template\tdeactivate\t1\tdevice\t-\tdeactivate {0}\n"
        "template\tmove\t2\tportable\tany\tmove {0} to {1}\n"
        "template\tpour\t2\tportable\tany\tpour {0} into {1}\n"
        "template\tuse\t2\tportable\tany\tuse {0} on {1}\n"
        "template\tconnect\t2\tportable\tany\tconnect {0} to {1}\n"
        "template\tgoto\t1\troom\t-\tgo to {0}\n"
        "task\tfind\tapple,book,hammer,sponge,wire\t-\t"
        "your task is to find {article} {noun} and focus on the {noun}\t-\n"
        "task\tbring\tapple,book,hammer,sponge,fork\tsink,counter,shelf,workbench,bathtub\t"
        "your task is to move the {target} to the {dest} and focus on the {target}\t-\n"
        "task\tchstate\tpot,apple\t-\t"
        "your task is to heat the {target} and focus on the {target}\t"
        "your task is to freeze the {target} and focus on the {target}\n"
        "task\tmeasure\tbook,sponge,wire,apple,hammer\t-\t"
        "your task is to measure the temperature of the {target} and focus on the {target}\t-\n"
        "task\tconduct\tfork,wire\t-\t"
        "your task is to determine whether the {target} is electrically conductive and focus on the {target}\t-\n"
        "task\tgrow\tseed\t-\t"
        "your task is to grow a plant from the {target} and focus on the grown plant\t-\n"
        "set\tcap\t100\n"
        "set\tfloor\t200\n"
        "set\tdistractors\t24\n"
        "set\tvariations\t10\n";
}

inline WorldDef default_world_def() { return parse_world_def(default_world_def_text()); }

}  // namespace lge
