#include "compgrid/board.hpp"

#include "compgrid/error.hpp"

namespace compgrid {

std::string_view to_string(Form f) {
  switch (f) {
    case Form::Chain: return "chain";
    case Form::Tree: return "tree";
    case Form::Loop: return "loop";
  }
  return "?";
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Chain: return "chain";
    case Provenance::Tree: return "tree";
    case Provenance::Loop: return "loop";
    case Provenance::Null: return "null";
  }
  return "?";
}

std::optional<Form> form_from_string(std::string_view s) {
  for (Form f : kAllForms) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

std::optional<Provenance> provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::Chain, Provenance::Tree, Provenance::Loop, Provenance::Null}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

std::string grid_string(Mask red) {
  std::string out(kTileCount, 'B');
  for (int i = 0; i < kTileCount; ++i) {
    if (red.test(i)) out[static_cast<std::size_t>(i)] = 'R';
  }
  return out;
}

std::optional<Mask> parse_grid_string(std::string_view grid) {
  if (grid.size() != static_cast<std::size_t>(kTileCount)) return std::nullopt;
  Mask m;
  for (int i = 0; i < kTileCount; ++i) {
    const char c = grid[static_cast<std::size_t>(i)];
    if (c == 'R') {
      m.set(i);
    } else if (c != 'B') {
      return std::nullopt;
    }
  }
  return m;
}

void validate_board(const Board& board) {
  if (!board.start.in_bounds()) throw InvalidBoardError("start tile is off the grid");
  if (!board.red.test(board.start)) throw InvalidBoardError("start tile is not red");
}

bool is_connected(Mask red) {
  if (red.empty()) return false;
  const int first = std::countr_zero(red.bits());
  Mask seen;
  std::array<int, kTileCount> stack{};
  int top = 0;
  stack[top++] = first;
  seen.set(first);
  while (top > 0) {
    const Pos p = Pos::from_index(stack[--top]);
    for_each_neighbour(p, [&](Pos q) {
      if (red.test(q) && !seen.test(q)) {
        seen.set(q);
        stack[top++] = q.index();
      }
    });
  }
  return seen == red;
}

std::string render(const Board& board) {
  std::string out;
  out.reserve(kTileCount + kGridSize);
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      const Pos p{r, c};
      out += p == board.start ? '@' : (board.red.test(p) ? '#' : '.');
    }
    out += '\n';
  }
  return out;
}

}  // namespace compgrid
