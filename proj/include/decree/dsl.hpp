#pragma once

// Test-scripting language (.dscr).
//
//   script    ::= statement* ;
//   statement ::= "environment" "{" (IDENT "=" (NUMBER|STRING) ";")* "}"
//               | "monitor" IDENT ("," IDENT)*
//               | "benchmark" IDENT "=" source
//               | "technique" IDENT "=" source
//               | "apply" IDENT "to" IDENT "as" IDENT
//               | "unittest" source "on" IDENT
//               | "difftest" IDENT "{" "original" "=" IDENT ";"
//                     "instrumented" "=" IDENT ";"
//                     ("bound" "=" NUMBER ";")? ("max_paths" "=" NUMBER ";")?
//                     ("perf_tolerance" "=" NUMBER ";")? "}" ;
//   source    ::= STRING | "pool:" IDENT ;
//
// `#` starts a comment that runs to the end of the line.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "decree/error.hpp"
#include "decree/executor.hpp"
#include "decree/rational.hpp"

namespace decree::dsl {

struct SourcePos {
  std::size_t line = 1;
  std::size_t column = 1;
};

struct Source {
  bool pool = false;
  std::string value;  // path, or pool entry id
  bool operator==(const Source&) const = default;
};

struct EnvValue {
  bool is_string = false;
  std::string text;  // number lexeme or string contents
  bool operator==(const EnvValue&) const = default;
};

struct EnvDecl {
  std::map<std::string, EnvValue> values;
  bool operator==(const EnvDecl&) const = default;
};
struct MonitorDecl {
  std::vector<std::string> metrics;
  bool operator==(const MonitorDecl&) const = default;
};
struct BenchmarkDecl {
  std::string alias;
  Source source;
  bool operator==(const BenchmarkDecl&) const = default;
};
struct TechniqueDecl {
  std::string alias;
  Source source;
  bool operator==(const TechniqueDecl&) const = default;
};
struct ApplyStmt {
  std::string technique;
  std::string benchmark;
  std::string as;
  bool operator==(const ApplyStmt&) const = default;
};
struct UnitTestStmt {
  Source source;
  std::string technique;
  bool operator==(const UnitTestStmt&) const = default;
};
struct DiffTestStmt {
  std::string name;
  std::string original;
  std::string instrumented;
  std::optional<std::string> bound;  // number lexemes
  std::optional<std::string> max_paths;
  std::optional<std::string> perf_tolerance;
  bool operator==(const DiffTestStmt&) const = default;
};

using StatementNode =
    std::variant<EnvDecl, MonitorDecl, BenchmarkDecl, TechniqueDecl, ApplyStmt, UnitTestStmt, DiffTestStmt>;

struct Statement {
  StatementNode node;
  SourcePos pos;
  // Positions are not part of a statement's identity.
  bool operator==(const Statement& o) const { return node == o.node; }
};

struct Script {
  std::vector<Statement> statements;
  bool operator==(const Script&) const = default;
};

enum class EnvType { Integer, Rational };

struct EnvKey {
  std::string_view name;
  EnvType type;
};

inline constexpr std::array<EnvKey, 10> kEnvKeys = {{
    {"battery_drain_pct_per_s", EnvType::Rational},
    {"battery_pct", EnvType::Integer},
    {"cache_hit_ms", EnvType::Integer},
    {"cpu_factor", EnvType::Rational},
    {"loop_bound", EnvType::Integer},
    {"max_paths", EnvType::Integer},
    {"net_bandwidth_kbps", EnvType::Integer},
    {"net_latency_ms", EnvType::Integer},
    {"perf_tolerance", EnvType::Rational},
    {"prefetch_battery_min", EnvType::Integer},
}};

inline const EnvKey* find_env_key(std::string_view name) {
  for (const auto& k : kEnvKeys)
    if (k.name == name) return &k;
  return nullptr;
}

inline std::optional<std::int64_t> parse_integer(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Ident, Number, String, PoolRef, LBrace, RBrace, Eq, Semi, Comma, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourcePos pos;
};

inline std::string_view describe(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::String: return "string";
    case Tok::PoolRef: return "pool reference";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Eq: return "'='";
    case Tok::Semi: return "';'";
    case Tok::Comma: return "','";
    case Tok::End: return "end of input";
  }
  return "?";
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> tokenize() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      Token t;
      t.pos = pos_;
      if (at_end()) {
        out.push_back(t);
        return out;
      }
      char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string word;
        while (!at_end() && is_word(peek())) word += advance();
        if (word == "pool" && !at_end() && peek() == ':') {
          advance();
          std::string id;
          while (!at_end() && is_word(peek())) id += advance();
          if (id.empty()) throw ParseError("expected a pool entry id after 'pool:'", pos_.line, pos_.column);
          t.kind = Tok::PoolRef;
          t.text = std::move(id);
        } else {
          t.kind = Tok::Ident;
          t.text = std::move(word);
        }
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
        std::string num;
        if (c == '-') num += advance();
        if (at_end() || !std::isdigit(static_cast<unsigned char>(peek())))
          throw ParseError("malformed number", t.pos.line, t.pos.column);
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) num += advance();
        if (!at_end() && peek() == '.') {
          num += advance();
          if (at_end() || !std::isdigit(static_cast<unsigned char>(peek())))
            throw ParseError("malformed number", t.pos.line, t.pos.column);
          while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) num += advance();
        }
        if (!at_end() && is_word(peek())) throw ParseError("malformed number", t.pos.line, t.pos.column);
        t.kind = Tok::Number;
        t.text = std::move(num);
      } else if (c == '"') {
        advance();
        std::string s;
        for (;;) {
          if (at_end() || peek() == '\n') throw ParseError("unterminated string", t.pos.line, t.pos.column);
          char ch = advance();
          if (ch == '"') break;
          if (ch == '\\') {
            if (at_end()) throw ParseError("unterminated string", t.pos.line, t.pos.column);
            char e = advance();
            switch (e) {
              case '"': s += '"'; break;
              case '\\': s += '\\'; break;
              case 'n': s += '\n'; break;
              case 't': s += '\t'; break;
              default: throw ParseError(std::string("unknown escape '\\") + e + "'", pos_.line, pos_.column - 1);
            }
          } else {
            s += ch;
          }
        }
        t.kind = Tok::String;
        t.text = std::move(s);
      } else {
        advance();
        switch (c) {
          case '{': t.kind = Tok::LBrace; break;
          case '}': t.kind = Tok::RBrace; break;
          case '=': t.kind = Tok::Eq; break;
          case ';': t.kind = Tok::Semi; break;
          case ',': t.kind = Tok::Comma; break;
          default: throw ParseError(std::string("unexpected character '") + c + "'", t.pos.line, t.pos.column);
        }
        t.text = std::string(1, c);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  static bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
  bool at_end() const { return i_ >= text_.size(); }
  char peek() const { return text_[i_]; }
  char advance() {
    char c = text_[i_++];
    if (c == '\n') {
      ++pos_.line;
      pos_.column = 1;
    } else {
      ++pos_.column;
    }
    return c;
  }
  void skip_space_and_comments() {
    while (!at_end()) {
      char c = peek();
      if (c == '#') {
        while (!at_end() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t i_ = 0;
  SourcePos pos_;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(Lexer(text).tokenize()) {}

  Script parse() {
    Script s;
    while (peek().kind != Tok::End) s.statements.push_back(statement());
    check_aliases(s);
    return s;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }

  [[noreturn]] void fail(const std::string& msg, const Token& t) const {
    throw ParseError(msg, t.pos.line, t.pos.column);
  }

  const Token& expect(Tok kind, std::string_view what = {}) {
    const Token& t = next();
    if (t.kind != kind)
      fail("expected " + std::string(what.empty() ? describe(kind) : what) + ", found " +
               (t.kind == Tok::End ? std::string("end of input") : "'" + t.text + "'"),
           t);
    return t;
  }

  void keyword(std::string_view kw) {
    const Token& t = next();
    if (t.kind != Tok::Ident || t.text != kw) fail("expected '" + std::string(kw) + "'", t);
  }

  std::string ident() { return expect(Tok::Ident).text; }

  Source source() {
    const Token& t = next();
    if (t.kind == Tok::String) return {false, t.text};
    if (t.kind == Tok::PoolRef) return {true, t.text};
    fail("expected a source (string path or pool:<id>)", t);
  }

  Statement statement() {
    const Token& head = next();
    Statement st;
    st.pos = head.pos;
    if (head.kind != Tok::Ident) fail("expected a statement keyword", head);
    const std::string& kw = head.text;
    if (kw == "environment") {
      EnvDecl env;
      expect(Tok::LBrace);
      while (peek().kind != Tok::RBrace) {
        const Token& key = expect(Tok::Ident, "environment key or '}'");
        const EnvKey* spec = find_env_key(key.text);
        if (!spec) fail("unknown environment key '" + key.text + "'", key);
        if (env.values.contains(key.text)) fail("duplicate environment key '" + key.text + "'", key);
        expect(Tok::Eq);
        const Token& val = next();
        if (val.kind != Tok::Number && val.kind != Tok::String) fail("expected a number or string", val);
        check_env_value(*spec, val);
        env.values[key.text] = EnvValue{val.kind == Tok::String, val.text};
        expect(Tok::Semi);
      }
      expect(Tok::RBrace);
      st.node = std::move(env);
    } else if (kw == "monitor") {
      MonitorDecl m;
      do {
        const Token& t = expect(Tok::Ident, "metric name");
        if (std::find(kStandardMetrics.begin(), kStandardMetrics.end(), t.text) == kStandardMetrics.end())
          fail("unknown metric '" + t.text + "'", t);
        m.metrics.push_back(t.text);
      } while (peek().kind == Tok::Comma && (next(), true));
      st.node = std::move(m);
    } else if (kw == "benchmark" || kw == "technique") {
      std::string alias = ident();
      expect(Tok::Eq);
      Source src = source();
      if (kw == "benchmark") st.node = BenchmarkDecl{std::move(alias), std::move(src)};
      else st.node = TechniqueDecl{std::move(alias), std::move(src)};
    } else if (kw == "apply") {
      ApplyStmt a;
      a.technique = ident();
      keyword("to");
      a.benchmark = ident();
      keyword("as");
      a.as = ident();
      st.node = std::move(a);
    } else if (kw == "unittest") {
      UnitTestStmt u;
      u.source = source();
      keyword("on");
      u.technique = ident();
      st.node = std::move(u);
    } else if (kw == "difftest") {
      DiffTestStmt d;
      d.name = ident();
      expect(Tok::LBrace);
      keyword("original");
      expect(Tok::Eq);
      d.original = ident();
      expect(Tok::Semi);
      keyword("instrumented");
      expect(Tok::Eq);
      d.instrumented = ident();
      expect(Tok::Semi);
      auto optional_number = [&](std::string_view key, std::optional<std::string>& slot, EnvType type, bool positive) {
        if (peek().kind != Tok::Ident || peek().text != key) return;
        next();
        expect(Tok::Eq);
        const Token& v = expect(Tok::Number);
        if (type == EnvType::Integer) {
          auto n = parse_integer(v.text);
          if (!n || *n < (positive ? 1 : 0))
            fail("'" + std::string(key) + "' must be a " + (positive ? "positive" : "non-negative") + " integer", v);
        } else {
          auto r = Rational::parse(v.text);
          if (!r || *r < Rational(0)) fail("'" + std::string(key) + "' must be a non-negative number", v);
        }
        slot = v.text;
        expect(Tok::Semi);
      };
      optional_number("bound", d.bound, EnvType::Integer, false);
      optional_number("max_paths", d.max_paths, EnvType::Integer, true);
      optional_number("perf_tolerance", d.perf_tolerance, EnvType::Rational, false);
      expect(Tok::RBrace, "'}' closing difftest");
      st.node = std::move(d);
    } else {
      fail("unknown statement '" + kw + "'", head);
    }
    return st;
  }

  void check_env_value(const EnvKey& key, const Token& val) const {
    if (key.type == EnvType::Integer) {
      if (!parse_integer(val.text)) fail("'" + std::string(key.name) + "' must be an integer", val);
    } else if (!Rational::parse(val.text)) {
      fail("'" + std::string(key.name) + "' must be a number", val);
    }
  }

  // Use-before-declare and kind mismatches are rejected here, never at run time.
  void check_aliases(const Script& s) const {
    std::set<std::string> models, techniques, difftests;
    auto err = [](const Statement& st, const std::string& msg) {
      throw ParseError(msg, st.pos.line, st.pos.column);
    };
    auto declare = [&](const Statement& st, const std::string& alias) {
      if (models.contains(alias) || techniques.contains(alias)) err(st, "alias '" + alias + "' is already declared");
    };
    for (const auto& st : s.statements) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, BenchmarkDecl>) {
              declare(st, n.alias);
              models.insert(n.alias);
            } else if constexpr (std::is_same_v<T, TechniqueDecl>) {
              declare(st, n.alias);
              techniques.insert(n.alias);
            } else if constexpr (std::is_same_v<T, ApplyStmt>) {
              if (!techniques.contains(n.technique)) err(st, "undeclared technique alias '" + n.technique + "'");
              if (!models.contains(n.benchmark)) err(st, "undeclared benchmark alias '" + n.benchmark + "'");
              declare(st, n.as);
              models.insert(n.as);
            } else if constexpr (std::is_same_v<T, UnitTestStmt>) {
              if (!techniques.contains(n.technique)) err(st, "undeclared technique alias '" + n.technique + "'");
            } else if constexpr (std::is_same_v<T, DiffTestStmt>) {
              if (!models.contains(n.original)) err(st, "undeclared benchmark alias '" + n.original + "'");
              if (!models.contains(n.instrumented)) err(st, "undeclared benchmark alias '" + n.instrumented + "'");
              if (!difftests.insert(n.name).second) err(st, "duplicate difftest name '" + n.name + "'");
            }
          },
          st.node);
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

inline Script parse_script(std::string_view text) { return Parser(text).parse(); }

// ---------------------------------------------------------------------------
// Formatter

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

inline std::string format_source(const Source& s) { return s.pool ? "pool:" + s.value : quote(s.value); }

// One statement per line, single spaces, environment keys sorted.
inline std::string format_script(const Script& script) {
  std::string out;
  for (const auto& st : script.statements) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, EnvDecl>) {
            out += "environment {";
            for (const auto& [k, v] : n.values) out += " " + k + " = " + (v.is_string ? quote(v.text) : v.text) + ";";
            out += " }";
          } else if constexpr (std::is_same_v<T, MonitorDecl>) {
            out += "monitor ";
            for (std::size_t i = 0; i < n.metrics.size(); ++i) out += (i ? ", " : "") + n.metrics[i];
          } else if constexpr (std::is_same_v<T, BenchmarkDecl>) {
            out += "benchmark " + n.alias + " = " + format_source(n.source);
          } else if constexpr (std::is_same_v<T, TechniqueDecl>) {
            out += "technique " + n.alias + " = " + format_source(n.source);
          } else if constexpr (std::is_same_v<T, ApplyStmt>) {
            out += "apply " + n.technique + " to " + n.benchmark + " as " + n.as;
          } else if constexpr (std::is_same_v<T, UnitTestStmt>) {
            out += "unittest " + format_source(n.source) + " on " + n.technique;
          } else if constexpr (std::is_same_v<T, DiffTestStmt>) {
            out += "difftest " + n.name + " { original = " + n.original + "; instrumented = " + n.instrumented + ";";
            if (n.bound) out += " bound = " + *n.bound + ";";
            if (n.max_paths) out += " max_paths = " + *n.max_paths + ";";
            if (n.perf_tolerance) out += " perf_tolerance = " + *n.perf_tolerance + ";";
            out += " }";
          }
        },
        st.node);
    out += "\n";
  }
  return out;
}

}  // namespace decree::dsl
