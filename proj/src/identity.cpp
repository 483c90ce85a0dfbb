#include "corvid/identity.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "corvid/error.hpp"
#include "corvid/io.hpp"

namespace corvid {

using json = nlohmann::json;

namespace {

bool is_aluminium_name(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower == "aluminium" || lower == "aluminum";
}

}  // namespace

ColorTable::ColorTable(std::vector<ColorClass> classes) : classes_(std::move(classes)) {
    if (classes_.empty()) throw Error(ErrorKind::SchemaError, "color table is empty");
    if (classes_.size() >= kAbsent) throw Error(ErrorKind::SchemaError, "color table too large");
    lookup_.fill(-1);
    for (std::size_t i = 0; i < classes_.size(); ++i) {
        const auto& c = classes_[i];
        auto u = static_cast<unsigned char>(c.code);
        if (c.code == kAbsentCode || !std::isgraph(u) || c.code == ',')
            throw Error(ErrorKind::SchemaError, std::string("invalid color code '") + c.code + "'");
        if (lookup_[u] >= 0) throw Error(ErrorKind::SchemaError, std::string("duplicate color code '") + c.code + "'");
        lookup_[u] = static_cast<std::int16_t>(i);
        if (is_aluminium_name(c.display_name)) {
            if (aluminium_) throw Error(ErrorKind::SchemaError, "more than one aluminium class");
            aluminium_ = static_cast<ColorIndex>(i);
        }
    }
}

const ColorTable& ColorTable::chirp_default() {
    static const ColorTable table({
        {'a', "aluminium", Rgb{192, 192, 192}},
        {'w', "white", Rgb{250, 250, 250}},
        {'k', "black", Rgb{45, 45, 45}},
        {'r', "red", Rgb{210, 30, 40}},
        {'o', "orange", Rgb{250, 140, 20}},
        {'y', "yellow", Rgb{240, 225, 30}},
        {'g', "green", Rgb{20, 140, 60}},
        {'l', "lime", Rgb{150, 230, 80}},
        {'b', "blue", Rgb{30, 60, 190}},
        {'u', "light blue", Rgb{110, 190, 240}},
        {'p', "pink", Rgb{240, 130, 190}},
        {'v', "violet", Rgb{120, 50, 160}},
    });
    return table;
}

ColorTable ColorTable::parse_csv(std::string_view text) {
    auto rows = io::lines(text);
    if (rows.empty()) throw Error(ErrorKind::SchemaError, "color table: missing header row");
    auto header = io::split_csv_line(rows[0]);
    bool with_rgb = header.size() == 5 && header[2] == "r" && header[3] == "g" && header[4] == "b";
    if (header.size() < 2 || header[0] != "code" || header[1] != "display_name" || (header.size() != 2 && !with_rgb))
        throw Error(ErrorKind::SchemaError, "color table: header must be `code,display_name[,r,g,b]`");

    std::vector<ColorClass> classes;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (io::trim(rows[i]).empty()) continue;
        auto f = io::split_csv_line(rows[i]);
        auto where = "color table line " + std::to_string(i + 1);
        if (f.size() != header.size()) throw Error(ErrorKind::SchemaError, where + ": wrong field count");
        if (f[0].size() != 1) throw Error(ErrorKind::SchemaError, where + ": code must be one character");
        ColorClass c{f[0][0], f[1], std::nullopt};
        if (with_rgb) {
            auto channel = [&](const std::string& s) {
                auto v = io::parse_int(s, where);
                if (v < 0 || v > 255) throw Error(ErrorKind::SchemaError, where + ": channel out of range");
                return static_cast<std::uint8_t>(v);
            };
            c.reference = Rgb{channel(f[2]), channel(f[3]), channel(f[4])};
        }
        classes.push_back(std::move(c));
    }
    return ColorTable(std::move(classes));
}

ColorTable ColorTable::load_csv(const std::filesystem::path& path) {
    return parse_csv(io::read_text(path));
}

std::string ColorTable::to_csv() const {
    bool with_rgb = std::all_of(classes_.begin(), classes_.end(), [](const auto& c) { return c.reference.has_value(); });
    std::string out = with_rgb ? "code,display_name,r,g,b\n" : "code,display_name\n";
    for (const auto& c : classes_) {
        out += c.code;
        out += ',' + c.display_name;
        if (with_rgb)
            out += ',' + std::to_string(c.reference->r) + ',' + std::to_string(c.reference->g) + ',' +
                   std::to_string(c.reference->b);
        out += '\n';
    }
    return out;
}

std::optional<ColorIndex> ColorTable::find(char code) const noexcept {
    auto v = lookup_[static_cast<unsigned char>(code)];
    if (v < 0) return std::nullopt;
    return static_cast<ColorIndex>(v);
}

ColorIndex ColorTable::index_of(char code) const {
    if (auto i = find(code)) return *i;
    throw Error(ErrorKind::UnknownColorCode, std::string("unknown color code '") + code + "'");
}

std::string ColorTable::hash_hex() const {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&](std::string_view s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 1099511628211ull;
        }
    };
    for (const auto& c : classes_) {
        mix(std::string_view(&c.code, 1));
        mix(",");
        mix(c.display_name);
        mix("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

bool ColorTable::operator==(const ColorTable& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (classes_[i].code != other.classes_[i].code || classes_[i].display_name != other.classes_[i].display_name)
            return false;
    return true;
}

RingCombination RingCombination::parse(std::string_view code, const ColorTable& table, const ParseOptions& options) {
    if (code.size() != 4)
        throw Error(ErrorKind::InvalidLength, "combination '" + std::string(code) + "' must have 4 characters");
    std::array<ColorIndex, 4> pos{};
    int absent = 0;
    int alu = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        if (code[i] == kAbsentCode) {
            pos[i] = kAbsent;
            ++absent;
            continue;
        }
        auto idx = table.find(code[i]);
        if (!idx)
            throw Error(ErrorKind::UnknownColorCode,
                        "combination '" + std::string(code) + "' has unknown code '" + code[i] + "'");
        pos[i] = *idx;
        if (table.aluminium() && *idx == *table.aluminium()) ++alu;
    }
    if (absent > 1)
        throw Error(ErrorKind::InvalidAbsentCount,
                    "combination '" + std::string(code) + "' has more than one empty position");
    if (options.require_aluminium && alu != 1)
        throw Error(ErrorKind::ZeroOrMultipleAluminium,
                    "combination '" + std::string(code) + "' must carry exactly one aluminium ring");
    return RingCombination(std::string(code), pos);
}

std::uint64_t combination_space_size(std::uint64_t num_colors) {
    if (num_colors < 1) throw std::invalid_argument("combination_space_size: num_colors must be >= 1");
    return num_colors * num_colors * num_colors;
}

std::string_view to_string(RosterScope scope) {
    switch (scope) {
        case RosterScope::WithinTerritory: return "within_territory";
        case RosterScope::WithNeighbours: return "with_neighbours";
        case RosterScope::All: return "all";
    }
    return "?";
}

RosterScope parse_scope(std::string_view text) {
    if (text == "within_territory") return RosterScope::WithinTerritory;
    if (text == "with_neighbours") return RosterScope::WithNeighbours;
    if (text == "all") return RosterScope::All;
    throw Error(ErrorKind::SchemaError, "unknown roster scope '" + std::string(text) + "'");
}

Roster::Roster(RosterScope scope, std::vector<RosterMember> members) : scope_(scope), members_(std::move(members)) {
    std::set<std::string_view> ids;
    std::set<std::string_view> combos;
    for (const auto& m : members_) {
        if (!ids.insert(m.bird_id).second) throw Error(ErrorKind::DuplicateBirdId, "bird_id '" + m.bird_id + "'");
        if (!combos.insert(m.combination.str()).second)
            throw Error(ErrorKind::DuplicateCombination, "combination '" + m.combination.str() + "'");
    }
}

const RosterMember* Roster::find(std::string_view bird_id) const {
    for (const auto& m : members_)
        if (m.bird_id == bird_id) return &m;
    return nullptr;
}

bool Roster::contains(const RosterMember& member) const {
    const auto* m = find(member.bird_id);
    return m && m->combination == member.combination;
}

Roster parse_roster_json(std::string_view text, const ColorTable& table, const ParseOptions& options) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("roster: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("scope") || !doc["scope"].is_string() || !doc.contains("members") ||
        !doc["members"].is_array())
        throw Error(ErrorKind::SchemaError, "roster: expected {\"scope\": string, \"members\": [...]}");
    auto scope = parse_scope(doc["scope"].get<std::string>());
    std::vector<RosterMember> members;
    for (const auto& m : doc["members"]) {
        if (!m.is_object() || !m.contains("bird_id") || !m["bird_id"].is_string() || !m.contains("combination") ||
            !m["combination"].is_string())
            throw Error(ErrorKind::SchemaError, "roster: member needs string bird_id and combination");
        members.push_back({m["bird_id"].get<std::string>(),
                           RingCombination::parse(m["combination"].get<std::string>(), table, options)});
    }
    return Roster(scope, std::move(members));
}

Roster load_roster(const std::filesystem::path& path, const ColorTable& table, const ParseOptions& options) {
    try {
        return parse_roster_json(io::read_text(path), table, options);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

Roster load_roster(const std::filesystem::path& path, RosterScope expected, const ColorTable& table,
                   const ParseOptions& options) {
    auto roster = load_roster(path, table, options);
    if (roster.scope() != expected)
        throw Error(ErrorKind::SchemaError, path.string() + ": scope is '" + std::string(to_string(roster.scope())) +
                                                "', expected '" + std::string(to_string(expected)) + "'");
    return roster;
}

std::string roster_to_json(const Roster& roster) {
    json doc;
    doc["scope"] = to_string(roster.scope());
    doc["members"] = json::array();
    for (const auto& m : roster.members())
        doc["members"].push_back({{"bird_id", m.bird_id}, {"combination", m.combination.str()}});
    return doc.dump(1) + "\n";
}

void check_nesting(const Roster& inner, const Roster& outer) {
    for (const auto& m : inner.members())
        if (!outer.contains(m))
            throw Error(ErrorKind::NestingViolation, "'" + m.bird_id + "' (" + m.combination.str() + ") in " +
                                                         std::string(to_string(inner.scope())) + " but not in " +
                                                         std::string(to_string(outer.scope())));
}

const Roster& RosterSet::at(RosterScope scope) const {
    const std::optional<Roster>* r = nullptr;
    switch (scope) {
        case RosterScope::WithinTerritory: r = &within_territory; break;
        case RosterScope::WithNeighbours: r = &with_neighbours; break;
        case RosterScope::All: r = &all; break;
    }
    if (!r || !r->has_value())
        throw Error(ErrorKind::SchemaError, "no roster loaded for scope " + std::string(to_string(scope)));
    return **r;
}

void RosterSet::validate() const {
    if (within_territory && with_neighbours) check_nesting(*within_territory, *with_neighbours);
    if (with_neighbours && all) check_nesting(*with_neighbours, *all);
    if (within_territory && all) check_nesting(*within_territory, *all);
}

}  // namespace corvid
