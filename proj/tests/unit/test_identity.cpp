#include <set>

#include "corvid/identity.hpp"
#include "support.hpp"

using namespace corvid;
using testing::throws_kind;

TEST_CASE("oaor parses to orange aluminium orange red") {
    const auto& t = ColorTable::chirp_default();
    auto c = RingCombination::parse("oaor", t);
    auto p = c.positions();
    CHECK(t[p[0]].display_name == "orange");
    CHECK(t[p[1]].display_name == "aluminium");
    CHECK(t[p[2]].display_name == "orange");
    CHECK(t[p[3]].display_name == "red");
    CHECK(format(c) == "oaor");
    CHECK(c.left_leg() == Leg{t.index_of('o'), t.index_of('a')});
    CHECK(c.right_leg() == Leg{t.index_of('o'), t.index_of('r')});
}

TEST_CASE("parse rejects malformed codes") {
    const auto& t = ColorTable::chirp_default();
    CHECK(throws_kind([&] { RingCombination::parse("oao?", t); }, ErrorKind::UnknownColorCode));
    CHECK(throws_kind([&] { RingCombination::parse("oao", t); }, ErrorKind::InvalidLength));
    CHECK(throws_kind([&] { RingCombination::parse("oaorr", t); }, ErrorKind::InvalidLength));
    CHECK(throws_kind([&] { RingCombination::parse("oror", t); }, ErrorKind::ZeroOrMultipleAluminium));
    CHECK(throws_kind([&] { RingCombination::parse("aaor", t); }, ErrorKind::ZeroOrMultipleAluminium));
    CHECK(throws_kind([&] { RingCombination::parse("a--r", t); }, ErrorKind::InvalidAbsentCount));
    CHECK_NOTHROW(RingCombination::parse("oror", t, ParseOptions{false}));
}

TEST_CASE("single-ring leg puts the ring on top") {
    const auto& t = ColorTable::chirp_default();
    auto c = RingCombination::parse("ar-y", t);
    CHECK(c.right_leg() == Leg{t.index_of('y'), kAbsent});
    CHECK(RingCombination::parse("aoy-", t).right_leg() == c.right_leg());
}

TEST_CASE("exhaustive parse/format round trip over every 4-symbol code") {
    const auto& t = ColorTable::chirp_default();
    std::string symbols;
    for (const auto& c : t.classes()) symbols += c.code;
    symbols += kAbsentCode;
    const std::size_t s = symbols.size();
    std::size_t valid = 0;
    std::string code(4, ' ');
    for (std::size_t i = 0; i < s * s * s * s; ++i) {
        std::size_t rest = i;
        int absent = 0, alu = 0;
        for (int p = 0; p < 4; ++p) {
            code[p] = symbols[rest % s];
            rest /= s;
            absent += code[p] == '-';
            alu += code[p] == 'a';
        }
        const bool expect_ok = absent <= 1 && alu == 1;
        bool ok = true;
        try {
            auto c = RingCombination::parse(code, t);
            if (RingCombination::parse(format(c), t) != c || format(c) != code) {
                FAIL("round trip differs for " << code);
            }
            for (int p = 0; p < 4; ++p)
                if (t.code_of(c.positions()[p]) != code[p]) FAIL("position mismatch for " << code);
        } catch (const Error&) {
            ok = false;
        }
        if (ok != expect_ok) FAIL("validity mismatch for " << code);
        valid += ok;
    }
    // 4 alu positions; the other 3 slots hold 11 colors or at most one absent.
    CHECK(valid == 4 * (11 * 11 * 11 + 3 * 11 * 11));
}

TEST_CASE("combination space size") {
    CHECK(combination_space_size(11) == 1331);
    CHECK(combination_space_size(1) == 1);
    std::set<std::tuple<int, int, int>> tuples;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) tuples.insert({a, b, c});
    CHECK(combination_space_size(4) == tuples.size());
    CHECK_THROWS_AS(combination_space_size(0), std::invalid_argument);
}

TEST_CASE("default table") {
    const auto& t = ColorTable::chirp_default();
    REQUIRE(t.size() == 12);
    REQUIRE(t.aluminium());
    CHECK(t.code_of(*t.aluminium()) == 'a');
    // every pair of reference colors at least 60 apart in RGB
    for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = i + 1; j < t.size(); ++j) {
            auto a = *t[static_cast<ColorIndex>(i)].reference, b = *t[static_cast<ColorIndex>(j)].reference;
            double d = std::hypot(double(a.r) - b.r, double(a.g) - b.g, double(a.b) - b.b);
            CHECK_MESSAGE(d >= 60.0, t[static_cast<ColorIndex>(i)].code, t[static_cast<ColorIndex>(j)].code);
        }
    auto again = ColorTable::parse_csv(t.to_csv());
    CHECK(again == t);
    CHECK(again.hash_hex() == t.hash_hex());
    CHECK(throws_kind([&] { t.index_of('z'); }, ErrorKind::UnknownColorCode));
}

TEST_CASE("color table csv") {
    auto t = ColorTable::parse_csv("code,display_name\na,aluminum\nr,red\nk,black\n");
    CHECK(t.size() == 3);
    CHECK(t.aluminium() == ColorIndex{0});
    CHECK(!t[0].reference);
    CHECK(throws_kind([] { ColorTable::parse_csv("code,display_name\nr,red\nr,rouge\n"); }, ErrorKind::SchemaError));
    CHECK(throws_kind([] { ColorTable::parse_csv("code,display_name\n-,none\n"); }, ErrorKind::SchemaError));
    CHECK(throws_kind([] { ColorTable::parse_csv("name\nred\n"); }, ErrorKind::SchemaError));
}

TEST_CASE("roster files") {
    const auto& t = ColorTable::chirp_default();
    auto r = parse_roster_json(R"({"scope":"within_territory","members":[
        {"bird_id":"A","combination":"oaor"},{"bird_id":"B","combination":"gayb"},{"bird_id":"C","combination":"a-ky"}]})",
                               t);
    CHECK(r.size() == 3);
    CHECK(r.scope() == RosterScope::WithinTerritory);
    REQUIRE(r.find("B"));
    CHECK(r.find("B")->combination.str() == "gayb");
    CHECK(parse_roster_json(roster_to_json(r), t).size() == 3);

    CHECK(throws_kind(
        [&] {
            parse_roster_json(R"({"scope":"all","members":[{"bird_id":"A","combination":"oaor"},
                {"bird_id":"B","combination":"oaor"}]})",
                              t);
        },
        ErrorKind::DuplicateCombination));
    CHECK(throws_kind(
        [&] {
            parse_roster_json(R"({"scope":"all","members":[{"bird_id":"A","combination":"oaor"},
                {"bird_id":"A","combination":"gayb"}]})",
                              t);
        },
        ErrorKind::DuplicateBirdId));
    CHECK(throws_kind([&] { parse_roster_json(R"({"members":[]})", t); }, ErrorKind::SchemaError));
    CHECK(throws_kind([&] { parse_roster_json(R"({"scope":"world","members":[]})", t); }, ErrorKind::SchemaError));
}

TEST_CASE("roster nesting") {
    const auto& t = ColorTable::chirp_default();
    auto m = [&](const char* id, const char* code) { return RosterMember{id, RingCombination::parse(code, t)}; };
    RosterSet set;
    set.within_territory = Roster(RosterScope::WithinTerritory, {m("A", "oaor"), m("B", "gayb")});
    set.with_neighbours = Roster(RosterScope::WithNeighbours, {m("A", "oaor"), m("C", "rrav")});
    CHECK(throws_kind([&] { set.validate(); }, ErrorKind::NestingViolation));
    set.with_neighbours = Roster(RosterScope::WithNeighbours, {m("A", "oaor"), m("B", "gayb"), m("C", "rrav")});
    CHECK_NOTHROW(set.validate());
    // same id, different rings is also a violation
    set.all = Roster(RosterScope::All, {m("A", "oaor"), m("B", "gayk"), m("C", "rrav")});
    CHECK(throws_kind([&] { set.validate(); }, ErrorKind::NestingViolation));
    CHECK(&set.at(RosterScope::WithNeighbours) == &*set.with_neighbours);
}

TEST_CASE("scope names") {
    for (auto s : {RosterScope::WithinTerritory, RosterScope::WithNeighbours, RosterScope::All})
        CHECK(parse_scope(to_string(s)) == s);
    CHECK(throws_kind([] { parse_scope("everyone"); }, ErrorKind::SchemaError));
}
