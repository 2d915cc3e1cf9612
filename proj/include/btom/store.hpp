#ifndef BTOM_STORE_HPP
#define BTOM_STORE_HPP

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "btom/bpr.hpp"
#include "btom/core.hpp"
#include "btom/games.hpp"
#include "btom/policies.hpp"

namespace btom {

inline constexpr int kStoreVersion = 1;

/// Everything `train` produces for one game.
struct Store {
  GameSpec spec;
  std::uint64_t seed = 0;
  StrategyLibrary opponents;  // J
  StrategyLibrary responses;  // Pi
  PerfMatrix perf;            // rows J, cols Pi
  std::vector<std::vector<double>> win_rate;  // [j][pi]
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw Error("expected number, got '" + s + "'");
  return v;
}

inline const char* family_name(RuleFamily f) {
  switch (f) {
    case RuleFamily::RpsConstant: return "rps-constant";
    case RuleFamily::SoccerRoute: return "soccer-route";
    case RuleFamily::ThiefTour: return "thief-tour";
    case RuleFamily::ThiefWaitTour: return "thief-wait-tour";
  }
  return "?";
}

inline RuleFamily parse_family(const std::string& s) {
  if (s == "rps-constant") return RuleFamily::RpsConstant;
  if (s == "soccer-route") return RuleFamily::SoccerRoute;
  if (s == "thief-tour") return RuleFamily::ThiefTour;
  if (s == "thief-wait-tour") return RuleFamily::ThiefWaitTour;
  throw Error("unknown rule family '" + s + "'");
}

inline void write_policy(std::ostream& out, const TabularPolicy& p) {
  if (p.id.empty() || p.id.find_first_of(" \t\n") != std::string::npos)
    throw Error("store: policy id must be a non-empty word");
  switch (p.kind) {
    case PolicyKind::Scripted:
      out << "policy " << p.id << " scripted " << p.num_actions << ' ' << family_name(p.rule.family) << ' '
          << p.rule.params.size();
      for (int v : p.rule.params) out << ' ' << v;
      out << '\n';
      break;
    case PolicyKind::Greedy: {
      const std::size_t nS = p.num_states();
      const auto nA = static_cast<std::size_t>(p.num_actions);
      // Rows never touched by training keep the fill value and are omitted.
      const double fill = p.q.empty() ? 0.0 : p.q.front();
      std::vector<std::size_t> rows;
      for (std::size_t s = 0; s < nS; ++s) {
        const auto row = p.q_row(s);
        for (double v : row)
          if (v != fill) {
            rows.push_back(s);
            break;
          }
      }
      out << "policy " << p.id << " greedy " << nA << ' ' << nS << ' ' << fmt_double(fill) << ' ' << rows.size()
          << '\n';
      for (std::size_t s : rows) {
        out << s;
        for (double v : p.q_row(s)) out << ' ' << fmt_double(v);
        out << '\n';
      }
      break;
    }
    case PolicyKind::Stochastic:
      out << "policy " << p.id << " stochastic " << p.num_actions << ' ' << p.dist.size() << '\n';
      for (const auto& [s, row] : p.dist) {
        out << s;
        for (double v : row) out << ' ' << fmt_double(v);
        out << '\n';
      }
      break;
  }
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next() {
    std::string line;
    if (!std::getline(in_, line)) throw Error("store: unexpected end of file after line " + std::to_string(lineno_));
    ++lineno_;
    std::istringstream ss(line);
    std::vector<std::string> words;
    for (std::string w; ss >> w;) words.push_back(w);
    return words;
  }

  std::vector<std::string> expect(const std::string& head, std::size_t min_words) {
    auto w = next();
    if (w.empty() || w[0] != head || w.size() < min_words)
      throw Error("store line " + std::to_string(lineno_) + ": expected '" + head + "'");
    return w;
  }

  int lineno() const { return lineno_; }
  std::istream& stream() { return in_; }

 private:
  std::istream& in_;
  int lineno_ = 0;
};

inline std::size_t to_size(const std::string& s) { return static_cast<std::size_t>(parse_int(s)); }

inline TabularPolicy read_policy(LineReader& rd) {
  auto w = rd.expect("policy", 4);
  TabularPolicy p;
  p.id = w[1];
  p.num_actions = parse_int(w[3]);
  const auto nA = static_cast<std::size_t>(p.num_actions);
  auto row_values = [&](const std::vector<std::string>& r, std::size_t& s) {
    if (r.size() != nA + 1) throw Error("store line " + std::to_string(rd.lineno()) + ": bad row width");
    s = to_size(r[0]);
    std::vector<double> v(nA);
    for (std::size_t a = 0; a < nA; ++a) v[a] = parse_double(r[a + 1]);
    return v;
  };
  if (w[2] == "scripted") {
    if (w.size() < 6) throw Error("store line " + std::to_string(rd.lineno()) + ": bad scripted policy");
    p.kind = PolicyKind::Scripted;
    p.rule.family = parse_family(w[4]);
    const std::size_t n = to_size(w[5]);
    if (w.size() != 6 + n) throw Error("store line " + std::to_string(rd.lineno()) + ": bad parameter count");
    for (std::size_t i = 0; i < n; ++i) p.rule.params.push_back(parse_int(w[6 + i]));
  } else if (w[2] == "greedy") {
    if (w.size() != 7) throw Error("store line " + std::to_string(rd.lineno()) + ": bad greedy policy");
    p.kind = PolicyKind::Greedy;
    const std::size_t nS = to_size(w[4]);
    p.q.assign(nS * nA, parse_double(w[5]));
    const std::size_t rows = to_size(w[6]);
    for (std::size_t i = 0; i < rows; ++i) {
      std::size_t s = 0;
      const auto v = row_values(rd.next(), s);
      if (s >= nS) throw Error("store line " + std::to_string(rd.lineno()) + ": state out of range");
      std::copy(v.begin(), v.end(), p.q.begin() + static_cast<std::ptrdiff_t>(s * nA));
    }
  } else if (w[2] == "stochastic") {
    if (w.size() != 5) throw Error("store line " + std::to_string(rd.lineno()) + ": bad stochastic policy");
    p.kind = PolicyKind::Stochastic;
    const std::size_t rows = to_size(w[4]);
    for (std::size_t i = 0; i < rows; ++i) {
      std::size_t s = 0;
      auto v = row_values(rd.next(), s);
      p.dist[s] = std::move(v);
    }
  } else {
    throw Error("store line " + std::to_string(rd.lineno()) + ": unknown policy kind '" + w[2] + "'");
  }
  return p;
}

inline StrategyLibrary read_library(LineReader& rd, const std::string& name, GameId game) {
  auto w = rd.expect("library", 3);
  if (w[1] != name) throw Error("store line " + std::to_string(rd.lineno()) + ": expected library " + name);
  StrategyLibrary lib;
  lib.game = game;
  const std::size_t n = to_size(w[2]);
  for (std::size_t i = 0; i < n; ++i) lib.entries.push_back(read_policy(rd));
  return lib;
}

}  // namespace detail

inline void write_store(std::ostream& out, const Store& st) {
  out << "btom-store " << kStoreVersion << '\n';
  out << "seed " << st.seed << '\n';
  const std::string layout = format_layout(st.spec);
  std::size_t layout_lines = 0;
  for (char c : layout) layout_lines += c == '\n';
  out << "layout " << layout_lines << '\n' << layout;
  out << "library J " << st.opponents.size() << '\n';
  for (const auto& p : st.opponents.entries) detail::write_policy(out, p);
  out << "library Pi " << st.responses.size() << '\n';
  for (const auto& p : st.responses.entries) detail::write_policy(out, p);
  out << "perf " << st.perf.rows() << ' ' << st.perf.cols() << ' ' << detail::fmt_double(st.perf.u_max()) << '\n';
  for (std::size_t j = 0; j < st.perf.rows(); ++j) {
    for (std::size_t p = 0; p < st.perf.cols(); ++p) {
      const auto& m = st.perf.at(j, p);
      out << (p ? " " : "") << detail::fmt_double(m.mean) << ' ' << detail::fmt_double(m.stddev);
    }
    out << '\n';
  }
  out << "winrate " << st.win_rate.size() << ' ' << (st.win_rate.empty() ? 0 : st.win_rate.front().size()) << '\n';
  for (const auto& row : st.win_rate) {
    for (std::size_t p = 0; p < row.size(); ++p) out << (p ? " " : "") << detail::fmt_double(row[p]);
    out << '\n';
  }
  out << "end\n";
}

inline Store read_store(std::istream& in) {
  detail::LineReader rd(in);
  auto head = rd.next();
  if (head.size() != 2 || head[0] != "btom-store") throw Error("store: not a policy store");
  if (detail::parse_int(head[1]) != kStoreVersion)
    throw Error("store: unsupported version " + head[1] + " (expected " + std::to_string(kStoreVersion) + ")");
  Store st;
  st.seed = std::stoull(rd.expect("seed", 2)[1]);
  const std::size_t layout_lines = detail::to_size(rd.expect("layout", 2)[1]);
  std::string layout;
  for (std::size_t i = 0; i < layout_lines; ++i) {
    std::string line;
    if (!std::getline(rd.stream(), line)) throw Error("store: truncated layout");
    layout += line + '\n';
  }
  st.spec = parse_layout(layout);
  // The reader's line count skips the raw layout block; only used for messages.
  st.opponents = detail::read_library(rd, "J", st.spec.id);
  st.responses = detail::read_library(rd, "Pi", st.spec.id);
  auto pw = rd.expect("perf", 4);
  const std::size_t rows = detail::to_size(pw[1]), cols = detail::to_size(pw[2]);
  st.perf = PerfMatrix(rows, cols, detail::parse_double(pw[3]));
  for (std::size_t j = 0; j < rows; ++j) {
    auto w = rd.next();
    if (w.size() != 2 * cols) throw Error("store: bad perf row " + std::to_string(j));
    for (std::size_t p = 0; p < cols; ++p)
      st.perf.set(j, p, {detail::parse_double(w[2 * p]), detail::parse_double(w[2 * p + 1])});
  }
  auto ww = rd.expect("winrate", 3);
  const std::size_t wr = detail::to_size(ww[1]), wc = detail::to_size(ww[2]);
  st.win_rate.assign(wr, std::vector<double>(wc));
  for (std::size_t j = 0; j < wr; ++j) {
    auto w = rd.next();
    if (w.size() != wc) throw Error("store: bad winrate row " + std::to_string(j));
    for (std::size_t p = 0; p < wc; ++p) st.win_rate[j][p] = detail::parse_double(w[p]);
  }
  rd.expect("end", 1);
  if (st.perf.rows() != st.opponents.size() || st.perf.cols() != st.responses.size())
    throw Error("store: performance matrix does not match libraries");
  return st;
}

inline std::filesystem::path store_path(const std::filesystem::path& dir, GameId game) {
  return dir / (std::string(to_string(game)) + ".store");
}

inline void save_store(const std::filesystem::path& path, const Store& st) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write store '" + path.string() + "'");
  write_store(out, st);
  if (!out) throw Error("failed writing store '" + path.string() + "'");
}

inline Store load_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read store '" + path.string() + "'");
  return read_store(in);
}

}  // namespace btom

#endif  // BTOM_STORE_HPP
