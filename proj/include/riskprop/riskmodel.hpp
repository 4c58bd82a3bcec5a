#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "riskprop/distributions.hpp"
#include "riskprop/sil.hpp"

namespace riskprop {

// Symbol naming a model variable: a letter followed by letters, digits or
// underscores. Unique within a model.
struct VariableId {
  std::string name;

  static bool valid_name(std::string_view s);

  auto operator<=>(const VariableId&) const = default;
};

struct RiskExpr;

struct LeafNode {
  VariableId id;

  bool operator==(const LeafNode&) const = default;
};

struct SumNode {
  std::vector<RiskExpr> children;  // length >= 1

  bool operator==(const SumNode&) const = default;
};

struct ProductNode {
  std::vector<RiskExpr> children;  // length >= 1

  bool operator==(const ProductNode&) const = default;
};

// Sum-of-products expression tree. Sum and Product are n-ary; every leaf
// must reference a declared variable, and no variable may appear twice
// (factors are assumed independent, so shared factors must be modeled by
// restructuring the expression).
struct RiskExpr {
  std::variant<LeafNode, SumNode, ProductNode> node{LeafNode{}};

  static RiskExpr leaf(VariableId id) { return {LeafNode{std::move(id)}}; }
  static RiskExpr sum(std::vector<RiskExpr> children) {
    return {SumNode{std::move(children)}};
  }
  static RiskExpr product(std::vector<RiskExpr> children) {
    return {ProductNode{std::move(children)}};
  }

  bool operator==(const RiskExpr&) const = default;
};

// Variable declarations plus the expression combining them, with an
// optional classification target.
struct RiskModel {
  std::map<VariableId, DistributionSpec> variables;
  RiskExpr expression;
  std::optional<SilTarget> target;

  bool operator==(const RiskModel&) const = default;
};

enum class Severity { Warning, Error };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string message;
  std::string location;  // JSON-pointer style path into the model file
};

// Parse a JSON model file. Throws ParseError (malformed text, with
// line/column) or ValidationError (schema violations, unknown distribution
// kinds, undeclared or duplicated variable references).
RiskModel parse_model(std::string_view text);

// Inverse of parse_model up to structural equality.
std::string serialize_model(const RiskModel& m, int indent = 2);

// Value-level checks: negative spreads, non-finite parameters, reference
// structure, unused declarations (warnings), and factors a log-normal run
// could not convert (warnings). Empty result means the model is clean.
std::vector<Diagnostic> validate_model(const RiskModel& m);

// Throws ValidationError on the first error-severity diagnostic.
void require_valid(const RiskModel& m);

// Sum node of product rows in row order; a single row yields the bare
// product. Rows and factors must be non-empty and no variable may repeat.
RiskExpr sum_of_products(const std::vector<std::vector<VariableId>>& rows);

// AST helpers.
bool is_pure_product(const RiskExpr& e);               // Leaf/Product only
const VariableId* first_leaf(const RiskExpr& e);       // leftmost, depth-first
std::vector<VariableId> leaf_variables(const RiskExpr& e);  // depth-first

}  // namespace riskprop
