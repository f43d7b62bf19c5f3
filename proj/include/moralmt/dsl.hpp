#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "moralmt/registry.hpp"
#include "moralmt/scenario.hpp"

// Scenario description language (.mts files).
//
//   document   := { statement }
//   statement  := IDENT '=' expr ( ';' | end-of-line ) | '...'
//   expr       := STRING | NUMBER | IDENT | tuple | list | call | block
//   tuple      := '(' [ slot { ',' slot } ] ')'      slot may be empty
//   list       := '{' [ expr { ',' expr } ] '}'
//   call       := CTOR '(' [ arg { ',' arg } ] ')'   arg may be '...'
//   block      := 'CreateScenario' '{' [ item { ';' item } ] '}'
//
// `//` starts a comment. A bare `...` is a comment-equivalent elision: on
// its own line, as a block item, or, inside an argument list, standing for
// the parameters it hides. Newlines inside brackets are insignificant; a
// statement whose expression is complete at end of line needs no `;`.
namespace moralmt::dsl {

struct Position {
  std::size_t line = 1;
  std::size_t column = 1;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct StringLit {
  std::string value;
};
struct NumberLit {
  double value = 0.0;
};
struct IdentRef {
  std::string name;
};
// Empty slots are nullptr.
struct TupleLit {
  std::vector<ExprPtr> elements;
};
struct ListLit {
  std::vector<ExprPtr> elements;
};
// Arguments may be nullptr (empty) and `ellipsis_at` marks where `...`
// appeared, if anywhere.
struct CtorCall {
  std::string name;
  std::vector<ExprPtr> args;
  std::optional<std::size_t> ellipsis_at;
};
struct ScenarioBlock {
  std::vector<ExprPtr> items;
};

struct Expr {
  std::variant<StringLit, NumberLit, IdentRef, TupleLit, ListLit, CtorCall, ScenarioBlock> node;
  Position pos;
};

struct Assignment {
  std::string target;
  ExprPtr value;
  Position pos;
};

struct DslDocument {
  std::vector<Assignment> statements;

  const Assignment* find(std::string_view name) const;
  // The single CreateScenario statement.
  const Assignment& scenario_statement() const;
};

// Recognised constructor names.
bool is_constructor(std::string_view name);

// Throws ParseError (line/column) on syntax errors, undefined or duplicate
// identifiers, unknown constructors, and a missing or repeated
// CreateScenario block.
DslDocument parse(std::string_view text);

// Binds constructors to the scenario model. Throws moralmt::Error on unknown
// model names, missing mandatory fields, or ill-typed arguments.
Scenario lower(const DslDocument& doc, const Registry& registry = Registry::builtin());

// parse + lower.
Scenario load_scenario(std::string_view text, const Registry& registry = Registry::builtin());
Scenario load_scenario_file(const std::string& path,
                            const Registry& registry = Registry::builtin());

// Canonical text. lower(parse(serialize(s))) == s for every valid s.
std::string serialize(const Scenario& s);

// Shortest decimal that round-trips to the same double.
std::string format_number(double v);

}  // namespace moralmt::dsl
