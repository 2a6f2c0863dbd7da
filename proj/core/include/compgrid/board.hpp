#pragma once

#include <array>
#include <bit>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace compgrid {

inline constexpr int kGridSize = 7;
inline constexpr int kTileCount = kGridSize * kGridSize;

/// Tile coordinates; row 0 is the top row.
struct Pos {
  int row = 0;
  int col = 0;

  constexpr bool in_bounds() const {
    return row >= 0 && row < kGridSize && col >= 0 && col < kGridSize;
  }
  constexpr int index() const { return row * kGridSize + col; }
  static constexpr Pos from_index(int index) { return {index / kGridSize, index % kGridSize}; }

  friend constexpr auto operator<=>(const Pos&, const Pos&) = default;
};

enum class Dir : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

constexpr Pos step(Pos p, Dir d, int distance = 1) {
  switch (d) {
    case Dir::North: return {p.row - distance, p.col};
    case Dir::East: return {p.row, p.col + distance};
    case Dir::South: return {p.row + distance, p.col};
    case Dir::West: return {p.row, p.col - distance};
  }
  return p;
}
constexpr Dir opposite(Dir d) { return static_cast<Dir>((static_cast<int>(d) + 2) % 4); }
constexpr Dir turn_left(Dir d) { return static_cast<Dir>((static_cast<int>(d) + 3) % 4); }
constexpr Dir turn_right(Dir d) { return static_cast<Dir>((static_cast<int>(d) + 1) % 4); }
inline constexpr std::array<Dir, 4> kAllDirs{Dir::North, Dir::East, Dir::South, Dir::West};

/// Set of red tiles on the 7x7 grid, one bit per tile in row-major order.
class Mask {
 public:
  constexpr Mask() = default;
  static constexpr Mask from_bits(std::uint64_t bits) { return Mask(bits & kAllBits); }
  static constexpr Mask full() { return Mask(kAllBits); }

  constexpr bool test(Pos p) const { return (bits_ >> p.index()) & 1U; }
  constexpr bool test(int index) const { return (bits_ >> index) & 1U; }
  constexpr void set(Pos p, bool red = true) { set(p.index(), red); }
  constexpr void set(int index, bool red = true) {
    const std::uint64_t bit = std::uint64_t{1} << index;
    bits_ = red ? (bits_ | bit) : (bits_ & ~bit);
  }
  constexpr Mask& operator|=(Mask other) {
    bits_ |= other.bits_;
    return *this;
  }
  friend constexpr Mask operator|(Mask a, Mask b) { return a |= b; }

  constexpr int count() const { return std::popcount(bits_); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint64_t bits() const { return bits_; }

  friend constexpr auto operator<=>(const Mask&, const Mask&) = default;

 private:
  static constexpr std::uint64_t kAllBits = (std::uint64_t{1} << kTileCount) - 1;
  constexpr explicit Mask(std::uint64_t bits) : bits_(bits) {}
  std::uint64_t bits_ = 0;
};

enum class Form : std::uint8_t { Chain, Tree, Loop };
inline constexpr std::array<Form, 3> kAllForms{Form::Chain, Form::Tree, Form::Loop};

/// Where a board came from: a grammar form, or the Gibbs-sampled null distribution.
enum class Provenance : std::uint8_t { Chain, Tree, Loop, Null };

constexpr Provenance provenance_of(Form f) { return static_cast<Provenance>(f); }
std::string_view to_string(Form f);
std::string_view to_string(Provenance p);
std::optional<Form> form_from_string(std::string_view s);
std::optional<Provenance> provenance_from_string(std::string_view s);

/// Hidden ground truth for one task.
struct Board {
  Mask red;
  Pos start;
  Provenance provenance = Provenance::Null;

  friend bool operator==(const Board&, const Board&) = default;
};

/// Row-major 'R'/'B' string of length 49.
std::string grid_string(Mask red);
/// Inverse of grid_string; nullopt on wrong length or characters.
std::optional<Mask> parse_grid_string(std::string_view grid);

/// Throws InvalidBoardError when the start is off-grid or not red.
void validate_board(const Board& board);

/// Calls fn(Pos) for each in-bounds 4-neighbour of p.
template <class Fn>
constexpr void for_each_neighbour(Pos p, Fn&& fn) {
  for (Dir d : kAllDirs) {
    const Pos q = step(p, d);
    if (q.in_bounds()) fn(q);
  }
}

/// True when the red tiles form a single 4-connected component (empty counts as false).
bool is_connected(Mask red);

/// Human-readable 7-line rendering ('#' red, '.' blue, '@' start).
std::string render(const Board& board);

}  // namespace compgrid

template <>
struct std::hash<compgrid::Mask> {
  std::size_t operator()(const compgrid::Mask& m) const noexcept {
    return std::hash<std::uint64_t>{}(m.bits());
  }
};
