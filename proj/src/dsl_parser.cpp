#include <cctype>
#include <charconv>
#include <set>
#include <string>

#include "moralmt/dsl.hpp"
#include "moralmt/error.hpp"

namespace moralmt::dsl {

namespace {

enum class Tok {
  Ident,
  String,
  Number,
  LParen,
  RParen,
  LBrace,
  RBrace,
  Comma,
  Semicolon,
  Equals,
  Ellipsis,
  Newline,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  Position pos;
};

constexpr std::string_view kCtors[] = {"AV",   "Pedestrian", "Animal", "CreateScenario",
                                       "load", "signals",    "seed"};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_blank();
      const Position p = here();
      if (at_end()) {
        out.push_back({Tok::End, "", 0.0, p});
        return out;
      }
      const char c = src_[i_];
      if (c == '\n') {
        advance();
        out.push_back({Tok::Newline, "\n", 0.0, p});
      } else if (c == '/' && peek(1) == '/') {
        while (!at_end() && src_[i_] != '\n') advance();
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string id;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_')) {
          id += src_[i_];
          advance();
        }
        out.push_back({Tok::Ident, std::move(id), 0.0, p});
      } else if (c == '"') {
        out.push_back(string_literal(p));
      } else if (c == '.' && peek(1) == '.' && peek(2) == '.') {
        advance();
        advance();
        advance();
        out.push_back({Tok::Ellipsis, "...", 0.0, p});
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
                 (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
        out.push_back(number(p));
      } else {
        Tok k;
        switch (c) {
          case '(': k = Tok::LParen; break;
          case ')': k = Tok::RParen; break;
          case '{': k = Tok::LBrace; break;
          case '}': k = Tok::RBrace; break;
          case ',': k = Tok::Comma; break;
          case ';': k = Tok::Semicolon; break;
          case '=': k = Tok::Equals; break;
          default: {
            std::string shown = (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f)
                                    ? "byte " + std::to_string(static_cast<unsigned char>(c))
                                    : std::string("'") + c + "'";
            throw ParseError("unexpected character " + shown, p.line, p.column);
          }
        }
        advance();
        out.push_back({k, std::string(1, c), 0.0, p});
      }
    }
  }

 private:
  bool at_end() const { return i_ >= src_.size(); }
  char peek(std::size_t k) const { return i_ + k < src_.size() ? src_[i_ + k] : '\0'; }
  Position here() const { return {line_, col_}; }

  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_blank() {
    while (!at_end() && (src_[i_] == ' ' || src_[i_] == '\t' || src_[i_] == '\r')) advance();
  }

  Token string_literal(Position p) {
    advance();
    std::string value;
    while (true) {
      if (at_end() || src_[i_] == '\n') {
        throw ParseError("unterminated string literal", p.line, p.column);
      }
      char c = src_[i_];
      if (c == '"') {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (at_end()) throw ParseError("unterminated string literal", p.line, p.column);
        const char e = src_[i_];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: throw ParseError("unknown escape sequence", line_, col_);
        }
      }
      value += c;
      advance();
    }
    return {Tok::String, std::move(value), 0.0, p};
  }

  Token number(Position p) {
    const std::size_t start = i_;
    if (src_[i_] == '-' || src_[i_] == '+') advance();
    bool digits = false;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(src_[i_]))) {
      advance();
      digits = true;
    }
    if (!at_end() && src_[i_] == '.' && !(peek(1) == '.' && peek(2) == '.')) {
      advance();
      while (!at_end() && std::isdigit(static_cast<unsigned char>(src_[i_]))) {
        advance();
        digits = true;
      }
    }
    if (!digits) throw ParseError("malformed number", p.line, p.column);
    if (!at_end() && (src_[i_] == 'e' || src_[i_] == 'E')) {
      advance();
      if (!at_end() && (src_[i_] == '-' || src_[i_] == '+')) advance();
      bool exp_digits = false;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(src_[i_]))) {
        advance();
        exp_digits = true;
      }
      if (!exp_digits) throw ParseError("malformed exponent", p.line, p.column);
    }
    std::string_view text = src_.substr(start, i_ - start);
    std::string_view digits_text = text;
    if (!digits_text.empty() && digits_text.front() == '+') digits_text.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(digits_text.data(), digits_text.data() + digits_text.size(), v);
    if (ec != std::errc() || ptr != digits_text.data() + digits_text.size()) {
      throw ParseError("number out of range", p.line, p.column);
    }
    return {Tok::Number, std::string(text), v, p};
  }

  std::string_view src_;
  std::size_t i_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

std::string_view describe(Tok k) {
  switch (k) {
    case Tok::Ident: return "identifier";
    case Tok::String: return "string";
    case Tok::Number: return "number";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Semicolon: return "';'";
    case Tok::Equals: return "'='";
    case Tok::Ellipsis: return "'...'";
    case Tok::Newline: return "end of line";
    case Tok::End: return "end of input";
  }
  return "token";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  DslDocument run() {
    DslDocument doc;
    const Assignment* block_stmt = nullptr;
    while (true) {
      while (cur().kind == Tok::Newline || cur().kind == Tok::Semicolon ||
             cur().kind == Tok::Ellipsis) {
        ++k_;
      }
      if (cur().kind == Tok::End) break;
      if (cur().kind != Tok::Ident) fail("expected an assignment");
      const Token target = cur();
      if (is_constructor(target.text)) fail("'" + target.text + "' is a reserved constructor name");
      ++k_;
      expect(Tok::Equals, "expected '=' after identifier");
      const bool is_block = cur().kind == Tok::Ident && cur().text == "CreateScenario" &&
                            next().kind == Tok::LBrace;
      ExprPtr value = expr(/*depth=*/0);
      switch (cur().kind) {
        case Tok::Semicolon: ++k_; break;
        case Tok::Newline:
        case Tok::End: break;
        default: fail("expected ';' or end of line, found " + std::string(describe(cur().kind)));
      }
      if (defined_.count(target.text)) {
        throw ParseError("duplicate assignment to '" + target.text + "'", target.pos.line,
                         target.pos.column);
      }
      defined_.insert(target.text);
      doc.statements.push_back({target.text, std::move(value), target.pos});
      if (is_block) {
        if (block_stmt) {
          throw ParseError("more than one CreateScenario block", target.pos.line, target.pos.column);
        }
        block_stmt = &doc.statements.back();
        block_count_++;
      }
    }
    if (block_count_ == 0) {
      throw ParseError("document has no CreateScenario block", cur().pos.line, cur().pos.column);
    }
    return doc;
  }

 private:
  const Token& cur() const { return toks_[k_]; }
  const Token& next() const { return toks_[std::min(k_ + 1, toks_.size() - 1)]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, cur().pos.line, cur().pos.column);
  }

  void expect(Tok k, const std::string& msg) {
    if (cur().kind != k) fail(msg);
    ++k_;
  }

  void skip_newlines() {
    while (cur().kind == Tok::Newline) ++k_;
  }

  static ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

  ExprPtr expr(int depth) {
    if (depth > 64) fail("expression nested too deeply");
    const Token t = cur();
    switch (t.kind) {
      case Tok::String:
        ++k_;
        return make({StringLit{t.text}, t.pos});
      case Tok::Number:
        ++k_;
        return make({NumberLit{t.number}, t.pos});
      case Tok::LParen: {
        ++k_;
        auto slots = slot_list(Tok::RParen, depth, /*allow_ellipsis=*/false, nullptr);
        return make({TupleLit{std::move(slots)}, t.pos});
      }
      case Tok::LBrace: {
        ++k_;
        std::vector<ExprPtr> elems;
        skip_newlines();
        if (cur().kind != Tok::RBrace) {
          while (true) {
            skip_newlines();
            elems.push_back(expr(depth + 1));
            skip_newlines();
            if (cur().kind == Tok::Comma) {
              ++k_;
              continue;
            }
            break;
          }
        }
        expect(Tok::RBrace, "expected '}' to close list");
        return make({ListLit{std::move(elems)}, t.pos});
      }
      case Tok::Ident: {
        ++k_;
        if (t.text == "CreateScenario" && cur().kind == Tok::LBrace) {
          if (depth != 0) {
            throw ParseError("CreateScenario must be assigned directly", t.pos.line, t.pos.column);
          }
          ++k_;
          return make({ScenarioBlock{block_items(depth)}, t.pos});
        }
        if (cur().kind == Tok::LParen) {
          if (!is_constructor(t.text)) {
            throw ParseError("unknown constructor '" + t.text + "'", t.pos.line, t.pos.column);
          }
          if (t.text == "CreateScenario") {
            throw ParseError("CreateScenario takes a '{...}' block", t.pos.line, t.pos.column);
          }
          ++k_;
          std::optional<std::size_t> ellipsis;
          auto args = slot_list(Tok::RParen, depth, /*allow_ellipsis=*/true, &ellipsis);
          return make({CtorCall{t.text, std::move(args), ellipsis}, t.pos});
        }
        if (is_constructor(t.text)) {
          throw ParseError("constructor '" + t.text + "' used without arguments", t.pos.line,
                           t.pos.column);
        }
        if (!defined_.count(t.text)) {
          throw ParseError("undefined identifier '" + t.text + "'", t.pos.line, t.pos.column);
        }
        return make({IdentRef{t.text}, t.pos});
      }
      default:
        fail("expected an expression, found " + std::string(describe(t.kind)));
    }
  }

  // Comma-separated slots up to `close`; empty slots become nullptr.
  std::vector<ExprPtr> slot_list(Tok close, int depth, bool allow_ellipsis,
                                 std::optional<std::size_t>* ellipsis) {
    std::vector<ExprPtr> slots;
    skip_newlines();
    if (cur().kind == close) {
      ++k_;
      return slots;
    }
    while (true) {
      skip_newlines();
      if (cur().kind == Tok::Ellipsis) {
        if (!allow_ellipsis) fail("'...' is only allowed in argument lists");
        if (ellipsis->has_value()) fail("at most one '...' per argument list");
        *ellipsis = slots.size();
        ++k_;
      } else if (cur().kind == Tok::Comma || cur().kind == close) {
        slots.push_back(nullptr);
      } else {
        slots.push_back(expr(depth + 1));
      }
      skip_newlines();
      if (cur().kind == Tok::Comma) {
        ++k_;
        continue;
      }
      if (cur().kind == close) {
        ++k_;
        return slots;
      }
      fail("expected ',' or closing bracket, found " + std::string(describe(cur().kind)));
    }
  }

  std::vector<ExprPtr> block_items(int depth) {
    std::vector<ExprPtr> items;
    while (true) {
      while (cur().kind == Tok::Newline || cur().kind == Tok::Semicolon) ++k_;
      if (cur().kind == Tok::RBrace) {
        ++k_;
        return items;
      }
      if (cur().kind == Tok::Ellipsis) {
        ++k_;
      } else {
        items.push_back(expr(depth + 1));
      }
      skip_newlines();
      if (cur().kind == Tok::Semicolon) {
        ++k_;
        continue;
      }
      if (cur().kind == Tok::RBrace) continue;
      fail("expected ';' or '}' in CreateScenario block");
    }
  }

  std::vector<Token> toks_;
  std::size_t k_ = 0;
  std::set<std::string, std::less<>> defined_;
  int block_count_ = 0;
};

}  // namespace

bool is_constructor(std::string_view name) {
  for (auto c : kCtors) {
    if (c == name) return true;
  }
  return false;
}

const Assignment* DslDocument::find(std::string_view name) const {
  for (const auto& s : statements) {
    if (s.target == name) return &s;
  }
  return nullptr;
}

const Assignment& DslDocument::scenario_statement() const {
  for (const auto& s : statements) {
    if (std::holds_alternative<ScenarioBlock>(s.value->node)) return s;
  }
  throw Error("document has no CreateScenario block");
}

DslDocument parse(std::string_view text) {
  Lexer lexer(text);
  Parser parser(lexer.run());
  return parser.run();
}

}  // namespace moralmt::dsl
