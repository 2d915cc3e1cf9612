#ifndef BTOM_GAMES_HPP
#define BTOM_GAMES_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "btom/core.hpp"

namespace btom {

enum class GameId { RPS, Soccer, ThievesHunters };

inline const char* to_string(GameId g) {
  switch (g) {
    case GameId::RPS: return "rps";
    case GameId::Soccer: return "soccer";
    case GameId::ThievesHunters: return "thieves";
  }
  return "?";
}

inline GameId parse_game_id(std::string_view s) {
  if (s == "rps") return GameId::RPS;
  if (s == "soccer") return GameId::Soccer;
  if (s == "thieves" || s == "thieves_hunters" || s == "thieves-hunters") return GameId::ThievesHunters;
  throw Error("unknown game '" + std::string(s) + "'");
}

// Grid actions. RPS reuses the first three indices as rock, paper, scissors.
enum Action : int { kLeft = 0, kRight = 1, kUp = 2, kDown = 3, kStay = 4 };
enum RpsAction : int { kRock = 0, kPaper = 1, kScissors = 2 };

inline constexpr std::array<int, 5> kDx = {-1, 1, 0, 0, 0};
inline constexpr std::array<int, 5> kDy = {0, 0, -1, 1, 0};

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

inline int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

enum class Owner : int { Self = 0, Oppo = 1 };

/// Player A ("self") starts on the left and attacks right; player B ("oppo")
/// starts on the right. In thieves-and-hunters A is the hunter.
struct GameSpec {
  GameId id = GameId::RPS;
  int width = 1;
  int height = 1;
  int step_limit = 1;
  std::vector<Cell> blocked;
  std::vector<Cell> start_self;
  std::vector<Cell> start_oppo;
  std::vector<int> goal_rows;   // soccer goal mouths, both ends
  std::vector<Cell> goal_cells;  // thieves-and-hunters

  int num_actions() const { return id == GameId::RPS ? 3 : 5; }
  int num_cells() const { return width * height; }
  std::size_t num_states() const {
    switch (id) {
      case GameId::RPS: return 1;
      case GameId::Soccer: return static_cast<std::size_t>(num_cells()) * num_cells() * 2;
      case GameId::ThievesHunters: return static_cast<std::size_t>(num_cells()) * num_cells();
    }
    return 0;
  }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool is_blocked(Cell c) const {
    return std::find(blocked.begin(), blocked.end(), c) != blocked.end();
  }
  bool is_free(Cell c) const { return in_bounds(c) && !is_blocked(c); }
  bool is_goal_cell(Cell c) const {
    return std::find(goal_cells.begin(), goal_cells.end(), c) != goal_cells.end();
  }
  bool is_goal_row(int y) const {
    return std::find(goal_rows.begin(), goal_rows.end(), y) != goal_rows.end();
  }

  void validate() const;
};

inline GameSpec rps_spec() {
  GameSpec s;
  s.id = GameId::RPS;
  return s;
}

inline GameSpec soccer_spec() {
  GameSpec s;
  s.id = GameId::Soccer;
  s.width = 7;
  s.height = 7;
  s.step_limit = 50;
  s.goal_rows = {2, 3, 4};
  s.start_self = {{1, 2}, {1, 3}, {1, 4}};
  s.start_oppo = {{5, 2}, {5, 3}, {5, 4}};
  return s;
}

inline GameSpec thieves_spec() {
  GameSpec s;
  s.id = GameId::ThievesHunters;
  s.width = 7;
  s.height = 7;
  s.step_limit = 50;
  s.goal_cells = {{1, 1}, {1, 5}, {5, 1}, {5, 5}};
  s.start_self = {{2, 3}};
  s.start_oppo = {{6, 3}};
  return s;
}

inline GameSpec default_spec(GameId id) {
  switch (id) {
    case GameId::RPS: return rps_spec();
    case GameId::Soccer: return soccer_spec();
    case GameId::ThievesHunters: return thieves_spec();
  }
  throw Error("default_spec: bad id");
}

inline void GameSpec::validate() const {
  if (id == GameId::RPS) {
    if (step_limit != 1) throw Error("rps: step_limit must be 1");
    return;
  }
  if (width < 2 || height < 2) throw Error("layout: grid too small");
  if (step_limit < 1) throw Error("layout: step_limit must be >= 1");
  if (start_self.empty() || start_oppo.empty()) throw Error("layout: missing start cells");
  for (const auto& c : start_self)
    if (!is_free(c)) throw Error("layout: start_self cell not free");
  for (const auto& c : start_oppo)
    if (!is_free(c)) throw Error("layout: start_oppo cell not free");
  if (id == GameId::Soccer) {
    if (goal_rows.empty()) throw Error("layout: soccer needs goal_rows");
    for (int r : goal_rows)
      if (r < 0 || r >= height) throw Error("layout: goal row out of range");
  } else {
    if (goal_cells.empty()) throw Error("layout: thieves needs goal cells");
    for (const auto& c : goal_cells)
      if (!is_free(c)) throw Error("layout: goal cell not free");
  }
}

struct GameState {
  Cell pos_self;
  Cell pos_oppo;
  Owner ball = Owner::Self;  // soccer only
  int step = 0;
  friend bool operator==(const GameState&, const GameState&) = default;
};

inline GameState reset(const GameSpec& spec, Rng& rng) {
  GameState s;
  if (spec.id == GameId::RPS) return s;
  s.pos_self = spec.start_self[rng.index(spec.start_self.size())];
  s.pos_oppo = spec.start_oppo[rng.index(spec.start_oppo.size())];
  if (spec.id == GameId::Soccer) s.ball = rng.bernoulli(0.5) ? Owner::Self : Owner::Oppo;
  return s;
}

struct StepResult {
  GameState next;
  bool terminal = false;
  std::optional<EpisodeOutcome> outcome;
};

namespace detail {
inline StepResult finish(GameState next, double r_self) {
  StepResult res;
  res.next = next;
  res.terminal = true;
  res.outcome = make_outcome(r_self, -r_self, next.step);
  return res;
}

inline Cell target_cell(const GameSpec& spec, Cell from, int a) {
  Cell to{from.x + kDx[a], from.y + kDy[a]};
  return spec.is_free(to) ? to : from;
}
}  // namespace detail

/// Advance one simultaneous joint action. Moves into walls, blocked cells or
/// off the board resolve to Stay. Soccer: when both players target the same
/// cell (or try to swap cells) neither moves, and the ball changes hands if
/// both of them were moving. Thieves: only two moving players collide, which
/// the hunter wins inside a goal cell; swaps go through.
inline StepResult step(const GameSpec& spec, const GameState& state, int a_self, int a_oppo) {
  const int n = spec.num_actions();
  if (a_self < 0 || a_self >= n || a_oppo < 0 || a_oppo >= n)
    throw Error("step: action outside action set");

  GameState next = state;
  next.step = state.step + 1;

  if (spec.id == GameId::RPS) {
    double r = 0.0;
    if (a_self != a_oppo) r = ((a_self - a_oppo + 3) % 3 == 1) ? 1.0 : -1.0;
    return detail::finish(next, r);
  }

  if (spec.id == GameId::Soccer) {
    // The carrier walking through the opponent's goal mouth scores.
    if (state.ball == Owner::Self && a_self == kRight && state.pos_self.x == spec.width - 1 &&
        spec.is_goal_row(state.pos_self.y))
      return detail::finish(next, 1.0);
    if (state.ball == Owner::Oppo && a_oppo == kLeft && state.pos_oppo.x == 0 &&
        spec.is_goal_row(state.pos_oppo.y))
      return detail::finish(next, -1.0);
  }

  const Cell na = detail::target_cell(spec, state.pos_self, a_self);
  const Cell nb = detail::target_cell(spec, state.pos_oppo, a_oppo);
  const bool same = na == nb;
  const bool swap = na == state.pos_oppo && nb == state.pos_self;

  if (spec.id == GameId::Soccer) {
    // Possession changes only when both players actually move into one cell;
    // walking into a standing player is just blocked.
    if (same || swap) {
      if (same && na != state.pos_self && nb != state.pos_oppo)
        next.ball = state.ball == Owner::Self ? Owner::Oppo : Owner::Self;
    } else {
      next.pos_self = na;
      next.pos_oppo = nb;
    }
  } else {
    // Two players moving into one cell collide; a standing player blocks nobody.
    const bool a_entered = na != state.pos_self;
    const bool b_entered = nb != state.pos_oppo;
    const bool collide = same && a_entered && b_entered;
    if (collide && spec.is_goal_cell(na)) {
      next.pos_self = na;
      next.pos_oppo = nb;
      return detail::finish(next, 1.0);
    }
    if (!collide) {
      next.pos_self = na;
      next.pos_oppo = nb;
      if (b_entered && spec.is_goal_cell(nb)) return detail::finish(next, -1.0);
    }
  }

  if (next.step >= spec.step_limit) return detail::finish(next, 0.0);
  StepResult res;
  res.next = next;
  return res;
}

inline std::size_t state_index(const GameSpec& spec, const GameState& s) {
  if (spec.id == GameId::RPS) return 0;
  const auto cell = [&](Cell c) {
    return static_cast<std::size_t>(c.y) * spec.width + static_cast<std::size_t>(c.x);
  };
  const std::size_t cells = static_cast<std::size_t>(spec.num_cells());
  std::size_t idx = cell(s.pos_self) * cells + cell(s.pos_oppo);
  if (spec.id == GameId::Soccer) idx = idx * 2 + static_cast<std::size_t>(s.ball);
  return idx;
}

/// Inverse of state_index; the step counter is not encoded and comes back 0.
inline GameState state_from_index(const GameSpec& spec, std::size_t idx) {
  if (idx >= spec.num_states()) throw Error("state_from_index: index out of range");
  GameState s;
  if (spec.id == GameId::RPS) return s;
  if (spec.id == GameId::Soccer) {
    s.ball = static_cast<Owner>(idx % 2);
    idx /= 2;
  }
  const std::size_t cells = static_cast<std::size_t>(spec.num_cells());
  const auto cell = [&](std::size_t c) {
    return Cell{static_cast<int>(c % spec.width), static_cast<int>(c / spec.width)};
  };
  s.pos_oppo = cell(idx % cells);
  s.pos_self = cell(idx / cells);
  return s;
}

// -- Layout config ------------------------------------------------------------

namespace detail {
inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline int parse_int(std::string_view s) {
  const std::string t = trim(s);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) throw Error("expected integer, got '" + t + "'");
  return v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto piece = trim(s.substr(start, pos == std::string_view::npos ? s.size() - start : pos - start));
    if (!piece.empty()) out.push_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// "x:y;x:y"
inline std::vector<Cell> parse_cells(std::string_view s) {
  std::vector<Cell> cells;
  for (const auto& item : split(s, ';')) {
    const auto xy = split(item, ':');
    if (xy.size() != 2) throw Error("expected cell 'x:y', got '" + item + "'");
    cells.push_back({parse_int(xy[0]), parse_int(xy[1])});
  }
  return cells;
}

inline std::string format_cells(const std::vector<Cell>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(cells[i].x) + ":" + std::to_string(cells[i].y);
  }
  return out;
}
}  // namespace detail

/// Apply one layout key to `spec`. Returns false if the key is not a layout key.
inline bool apply_layout_key(GameSpec& spec, std::string_view key, std::string_view value) {
  if (key == "width") spec.width = detail::parse_int(value);
  else if (key == "height") spec.height = detail::parse_int(value);
  else if (key == "step_limit") spec.step_limit = detail::parse_int(value);
  else if (key == "blocked") spec.blocked = detail::parse_cells(value);
  else if (key == "start_self") spec.start_self = detail::parse_cells(value);
  else if (key == "start_oppo") spec.start_oppo = detail::parse_cells(value);
  else if (key == "goal_cells") spec.goal_cells = detail::parse_cells(value);
  else if (key == "goal_rows") {
    spec.goal_rows.clear();
    for (const auto& r : detail::split(value, ',')) spec.goal_rows.push_back(detail::parse_int(r));
  } else {
    return false;
  }
  return true;
}

/// Parse a standalone layout: `game=...` plus layout keys, one per line.
inline GameSpec parse_layout(std::string_view text) {
  std::optional<GameSpec> spec;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error("layout line " + std::to_string(lineno) + ": expected key=value");
    const auto key = detail::trim(std::string_view(t).substr(0, eq));
    const auto value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key == "game") {
      spec = default_spec(parse_game_id(value));
      continue;
    }
    if (!spec) throw Error("layout line " + std::to_string(lineno) + ": 'game' must come first");
    if (!apply_layout_key(*spec, key, value))
      throw Error("layout line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  if (!spec) throw Error("layout: missing 'game'");
  spec->validate();
  return *spec;
}

inline std::string format_layout(const GameSpec& spec) {
  std::ostringstream out;
  out << "game=" << to_string(spec.id) << "\n";
  if (spec.id == GameId::RPS) return out.str();
  out << "width=" << spec.width << "\nheight=" << spec.height << "\nstep_limit=" << spec.step_limit << "\n";
  if (!spec.blocked.empty()) out << "blocked=" << detail::format_cells(spec.blocked) << "\n";
  out << "start_self=" << detail::format_cells(spec.start_self) << "\n";
  out << "start_oppo=" << detail::format_cells(spec.start_oppo) << "\n";
  if (!spec.goal_rows.empty()) {
    out << "goal_rows=";
    for (std::size_t i = 0; i < spec.goal_rows.size(); ++i) out << (i ? "," : "") << spec.goal_rows[i];
    out << "\n";
  }
  if (!spec.goal_cells.empty()) out << "goal_cells=" << detail::format_cells(spec.goal_cells) << "\n";
  return out.str();
}

}  // namespace btom

#endif  // BTOM_GAMES_HPP
