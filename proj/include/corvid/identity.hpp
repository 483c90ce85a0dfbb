#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace corvid {

// Index of a color class inside a ColorTable. kAbsent marks an empty ring slot.
using ColorIndex = std::uint8_t;
inline constexpr ColorIndex kAbsent = 0xFF;
inline constexpr char kAbsentCode = '-';

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

struct ColorClass {
    char code = '?';
    std::string display_name;
    // Rendering color used by the synthetic generator; optional in user tables.
    std::optional<Rgb> reference;
};

// Ordered set of ring color classes. Class order defines ColorIndex values and
// the layout of every probability vector in the library.
class ColorTable {
public:
    explicit ColorTable(std::vector<ColorClass> classes);

    // 12-class table: aluminium plus 11 plastic colors, with reference RGBs.
    static const ColorTable& chirp_default();

    // CSV with header `code,display_name` and optional `r,g,b` columns.
    static ColorTable parse_csv(std::string_view text);
    static ColorTable load_csv(const std::filesystem::path& path);
    std::string to_csv() const;

    std::size_t size() const noexcept { return classes_.size(); }
    const ColorClass& operator[](ColorIndex i) const { return classes_.at(i); }
    std::span<const ColorClass> classes() const noexcept { return classes_; }

    std::optional<ColorIndex> find(char code) const noexcept;
    // Throws UnknownColorCode.
    ColorIndex index_of(char code) const;
    char code_of(ColorIndex i) const { return i == kAbsent ? kAbsentCode : classes_.at(i).code; }

    std::optional<ColorIndex> aluminium() const noexcept { return aluminium_; }

    // FNV-1a over the canonical `code,display_name` lines; stored in model files.
    std::string hash_hex() const;

    bool operator==(const ColorTable& other) const;

private:
    std::vector<ColorClass> classes_;
    std::array<std::int16_t, 256> lookup_{};
    std::optional<ColorIndex> aluminium_;
};

// One leg's rings, top first. A single-ring leg is {ring, kAbsent}.
struct Leg {
    ColorIndex top = kAbsent;
    ColorIndex bottom = kAbsent;
    bool operator==(const Leg&) const = default;
};

struct ParseOptions {
    bool require_aluminium = true;
};

// Four ring positions ordered top-left, bottom-left, top-right, bottom-right
// from the bird's perspective.
class RingCombination {
public:
    static RingCombination parse(std::string_view code, const ColorTable& table,
                                 const ParseOptions& options = {});

    const std::string& str() const noexcept { return code_; }
    std::span<const ColorIndex, 4> positions() const noexcept { return positions_; }

    // Legs with the empty slot (if any) moved to the bottom.
    Leg left_leg() const noexcept { return normalize({positions_[0], positions_[1]}); }
    Leg right_leg() const noexcept { return normalize({positions_[2], positions_[3]}); }

    bool operator==(const RingCombination& other) const noexcept { return code_ == other.code_; }
    auto operator<=>(const RingCombination& other) const noexcept { return code_ <=> other.code_; }

private:
    RingCombination(std::string code, std::array<ColorIndex, 4> positions)
        : code_(std::move(code)), positions_(positions) {}
    static Leg normalize(Leg leg) noexcept {
        if (leg.top == kAbsent) std::swap(leg.top, leg.bottom);
        return leg;
    }

    std::string code_;
    std::array<ColorIndex, 4> positions_{};
};

inline std::string format(const RingCombination& c) { return c.str(); }

// Unique combinations of three colored rings drawn from num_colors colors.
std::uint64_t combination_space_size(std::uint64_t num_colors);

enum class RosterScope { WithinTerritory, WithNeighbours, All };

std::string_view to_string(RosterScope scope);
// Accepts the snake_case names used in roster files (`within_territory`, ...).
RosterScope parse_scope(std::string_view text);

struct RosterMember {
    std::string bird_id;
    RingCombination combination;
};

class Roster {
public:
    // Throws DuplicateBirdId / DuplicateCombination.
    Roster(RosterScope scope, std::vector<RosterMember> members);

    RosterScope scope() const noexcept { return scope_; }
    std::span<const RosterMember> members() const noexcept { return members_; }
    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }

    const RosterMember* find(std::string_view bird_id) const;
    bool contains(const RosterMember& member) const;

private:
    RosterScope scope_;
    std::vector<RosterMember> members_;
};

Roster parse_roster_json(std::string_view text, const ColorTable& table,
                         const ParseOptions& options = {});
Roster load_roster(const std::filesystem::path& path, const ColorTable& table,
                   const ParseOptions& options = {});
// Optionally checks the file's declared scope.
Roster load_roster(const std::filesystem::path& path, RosterScope expected,
                   const ColorTable& table, const ParseOptions& options = {});
std::string roster_to_json(const Roster& roster);

// Every member of `inner` must appear (same id, same combination) in `outer`.
// Throws NestingViolation.
void check_nesting(const Roster& inner, const Roster& outer);

// The three galleries for one video context. `all` is optional because the
// population roster is often shared and loaded lazily.
struct RosterSet {
    std::optional<Roster> within_territory;
    std::optional<Roster> with_neighbours;
    std::optional<Roster> all;

    const Roster& at(RosterScope scope) const;
    // Checks WithinTerritory ⊆ WithNeighbours ⊆ All for the scopes present.
    void validate() const;
};

}  // namespace corvid
