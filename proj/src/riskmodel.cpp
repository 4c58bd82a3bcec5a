#include "riskprop/riskmodel.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <utility>

#include <json.hpp>

#include "riskprop/errors.hpp"

namespace riskprop {

using nlohmann::json;

bool VariableId::valid_name(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) {
    return false;
  }
  for (char c : s.substr(1)) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

namespace {

std::pair<std::size_t, std::size_t> line_col(std::string_view text,
                                             std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ValidationError("unknown key '" + item.key() + "'",
                            path + "/" + item.key());
    }
  }
}

const json& require_field(const json& obj, const char* key,
                          const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError(std::string("missing required key '") + key + "'",
                          path);
  }
  return *it;
}

// A value field is either a plain number or a {mantissa, decade} pair.
double parse_value(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_object()) {
    check_keys(v, {"mantissa", "decade"}, path);
    const json& m = require_field(v, "mantissa", path);
    const json& d = require_field(v, "decade", path);
    if (!m.is_number()) {
      throw ValidationError("'mantissa' must be a number", path + "/mantissa");
    }
    if (!d.is_number_integer()) {
      throw ValidationError("'decade' must be an integer", path + "/decade");
    }
    double mantissa = m.get<double>();
    if (!(mantissa > 0.0 && mantissa < 10.0)) {
      throw ValidationError("'mantissa' must lie in (0, 10)",
                            path + "/mantissa");
    }
    return Quantity{mantissa, d.get<int>()}.value();
  }
  throw ValidationError("expected a number or a {mantissa, decade} object",
                        path);
}

DistributionSpec parse_dist(const json& v, const std::string& path) {
  if (!v.is_object()) {
    throw ValidationError("variable declaration must be an object", path);
  }
  const json& kind_field = require_field(v, "dist", path);
  if (!kind_field.is_string()) {
    throw ValidationError("'dist' must be a string", path + "/dist");
  }
  std::string kind = kind_field.get<std::string>();
  if (kind == "normal") {
    check_keys(v, {"dist", "mean", "sd"}, path);
    return DistributionSpec::normal(
        parse_value(require_field(v, "mean", path), path + "/mean"),
        parse_value(require_field(v, "sd", path), path + "/sd"));
  }
  if (kind == "lognormal") {
    check_keys(v, {"dist", "mu_log", "sigma_log"}, path);
    const json& mu = require_field(v, "mu_log", path);
    const json& sigma = require_field(v, "sigma_log", path);
    if (!mu.is_number()) {
      throw ValidationError("'mu_log' must be a number", path + "/mu_log");
    }
    if (!sigma.is_number()) {
      throw ValidationError("'sigma_log' must be a number",
                            path + "/sigma_log");
    }
    return DistributionSpec::lognormal(mu.get<double>(), sigma.get<double>());
  }
  if (kind == "point") {
    check_keys(v, {"dist", "value"}, path);
    return DistributionSpec::point(
        parse_value(require_field(v, "value", path), path + "/value"));
  }
  throw ValidationError("unknown distribution kind '" + kind + "'",
                        path + "/dist");
}

// Guards the recursive walkers against stack exhaustion on hostile input;
// far beyond any real model.
constexpr int kMaxExprDepth = 1000;

RiskExpr parse_expr(const json& e, const std::string& path, int depth = 0) {
  if (depth > kMaxExprDepth) {
    throw ValidationError("expression nesting exceeds " +
                              std::to_string(kMaxExprDepth) + " levels",
                          path);
  }
  if (e.is_string()) {
    std::string name = e.get<std::string>();
    if (!VariableId::valid_name(name)) {
      throw ValidationError("invalid variable name '" + name + "'", path);
    }
    return RiskExpr::leaf(VariableId{std::move(name)});
  }
  if (e.is_object() && e.size() == 1) {
    const auto& item = *e.items().begin();
    const std::string& op = item.key();
    if (op == "sum" || op == "product") {
      const json& arr = item.value();
      if (!arr.is_array()) {
        throw ValidationError("'" + op + "' must hold an array",
                              path + "/" + op);
      }
      if (arr.empty()) {
        throw ValidationError("empty " + op + " node", path + "/" + op);
      }
      std::vector<RiskExpr> children;
      children.reserve(arr.size());
      for (std::size_t i = 0; i < arr.size(); ++i) {
        children.push_back(parse_expr(
            arr[i], path + "/" + op + "/" + std::to_string(i), depth + 1));
      }
      return op == "sum" ? RiskExpr::sum(std::move(children))
                         : RiskExpr::product(std::move(children));
    }
  }
  throw ValidationError(
      "expression must be a variable name or a single-key "
      "{\"sum\": [...]} / {\"product\": [...]} object",
      path);
}

SilTarget parse_target(const json& t, const std::string& path) {
  if (!t.is_object()) {
    throw ValidationError("'target' must be an object", path);
  }
  check_keys(t, {"band_exponent", "confidence", "q"}, path);
  const json& band = require_field(t, "band_exponent", path);
  if (!band.is_number_integer()) {
    throw ValidationError("'band_exponent' must be an integer",
                          path + "/band_exponent");
  }
  const json& conf = require_field(t, "confidence", path);
  if (!conf.is_number()) {
    throw ValidationError("'confidence' must be a number",
                          path + "/confidence");
  }
  double confidence = conf.get<double>();
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw ValidationError("'confidence' must lie in (0, 1)",
                          path + "/confidence");
  }
  SilTarget target{SilBand{band.get<int>()}, confidence, std::nullopt};
  if (auto it = t.find("q"); it != t.end()) {
    if (!it->is_number() || !(it->get<double>() > 0.0)) {
      throw ValidationError("'q' must be a positive number", path + "/q");
    }
    target.q = it->get<double>();
  }
  return target;
}

// Walks the tree checking declared/unique references; records leaf names.
void check_references(const RiskExpr& e,
                      const std::map<VariableId, DistributionSpec>& vars,
                      std::set<VariableId>& seen, const std::string& path) {
  if (const auto* leaf = std::get_if<LeafNode>(&e.node)) {
    if (!vars.contains(leaf->id)) {
      throw ValidationError(
          "reference to undeclared variable '" + leaf->id.name + "'", path);
    }
    if (!seen.insert(leaf->id).second) {
      throw ValidationError("independence violation: variable '" +
                                leaf->id.name + "' used more than once",
                            path);
    }
    return;
  }
  const auto* sum = std::get_if<SumNode>(&e.node);
  const auto& children = sum ? sum->children
                             : std::get<ProductNode>(e.node).children;
  const char* op = sum ? "sum" : "product";
  for (std::size_t i = 0; i < children.size(); ++i) {
    check_references(children[i], vars, seen,
                     path + "/" + op + "/" + std::to_string(i));
  }
}

json expr_to_json(const RiskExpr& e) {
  if (const auto* leaf = std::get_if<LeafNode>(&e.node)) {
    return leaf->id.name;
  }
  json arr = json::array();
  if (const auto* sum = std::get_if<SumNode>(&e.node)) {
    for (const auto& c : sum->children) arr.push_back(expr_to_json(c));
    return json{{"sum", std::move(arr)}};
  }
  for (const auto& c : std::get<ProductNode>(e.node).children) {
    arr.push_back(expr_to_json(c));
  }
  return json{{"product", std::move(arr)}};
}

json dist_to_json(const DistributionSpec& d) {
  if (const auto* n = std::get_if<MomentPair>(&d.dist)) {
    return json{{"dist", "normal"}, {"mean", n->mean}, {"sd", n->sd}};
  }
  if (const auto* l = std::get_if<LogNormalParams>(&d.dist)) {
    return json{{"dist", "lognormal"},
                {"mu_log", l->mu_log},
                {"sigma_log", l->sigma_log}};
  }
  return json{{"dist", "point"}, {"value", std::get<PointMass>(d.dist).value}};
}

}  // namespace

RiskModel parse_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ParseError(std::string("malformed model file: ") + e.what(), line,
                     col);
  }
  if (!j.is_object()) {
    throw ValidationError("model file must be a JSON object", "/");
  }
  check_keys(j, {"variables", "expression", "target"}, "");

  RiskModel model;
  const json& vars = require_field(j, "variables", "/");
  if (!vars.is_object()) {
    throw ValidationError("'variables' must be an object", "/variables");
  }
  for (const auto& item : vars.items()) {
    const std::string& name = item.key();
    std::string path = "/variables/" + name;
    if (!VariableId::valid_name(name)) {
      throw ValidationError("invalid variable name '" + name + "'", path);
    }
    model.variables.emplace(VariableId{name}, parse_dist(item.value(), path));
  }

  model.expression =
      parse_expr(require_field(j, "expression", "/"), "/expression");
  std::set<VariableId> seen;
  check_references(model.expression, model.variables, seen, "/expression");

  if (auto it = j.find("target"); it != j.end()) {
    model.target = parse_target(*it, "/target");
  }
  return model;
}

std::string serialize_model(const RiskModel& m, int indent) {
  json vars = json::object();
  for (const auto& [id, spec] : m.variables) {
    vars[id.name] = dist_to_json(spec);
  }
  json j{{"variables", std::move(vars)},
         {"expression", expr_to_json(m.expression)}};
  if (m.target) {
    json t{{"band_exponent", m.target->band.exponent},
           {"confidence", m.target->confidence}};
    if (m.target->q) t["q"] = *m.target->q;
    j["target"] = std::move(t);
  }
  return j.dump(indent) + "\n";
}

namespace {

void validate_expr(const RiskExpr& e,
                   const std::map<VariableId, DistributionSpec>& vars,
                   std::set<VariableId>& used, const std::string& path,
                   std::vector<Diagnostic>& out) {
  if (const auto* leaf = std::get_if<LeafNode>(&e.node)) {
    if (!vars.contains(leaf->id)) {
      out.push_back({Severity::Error,
                     "reference to undeclared variable '" + leaf->id.name + "'",
                     path});
    } else if (!used.insert(leaf->id).second) {
      out.push_back({Severity::Error,
                     "independence violation: variable '" + leaf->id.name +
                         "' used more than once",
                     path});
    }
    return;
  }
  const auto* sum = std::get_if<SumNode>(&e.node);
  const auto& children = sum ? sum->children
                             : std::get<ProductNode>(e.node).children;
  const char* op = sum ? "sum" : "product";
  if (children.empty()) {
    out.push_back(
        {Severity::Error, std::string("empty ") + op + " node", path});
  }
  for (std::size_t i = 0; i < children.size(); ++i) {
    validate_expr(children[i], vars, used,
                  path + "/" + op + "/" + std::to_string(i), out);
  }
}

}  // namespace

std::vector<Diagnostic> validate_model(const RiskModel& m) {
  std::vector<Diagnostic> out;
  for (const auto& [id, spec] : m.variables) {
    std::string path = "/variables/" + id.name;
    if (!VariableId::valid_name(id.name)) {
      out.push_back(
          {Severity::Error, "invalid variable name '" + id.name + "'", path});
    }
    if (const auto* n = std::get_if<MomentPair>(&spec.dist)) {
      if (!std::isfinite(n->mean) || !std::isfinite(n->sd)) {
        out.push_back({Severity::Error, "non-finite parameter", path});
      } else if (n->sd < 0.0) {
        out.push_back({Severity::Error, "negative standard deviation",
                       path + "/sd"});
      } else if (!(n->mean > 0.0)) {
        out.push_back({Severity::Warning,
                       "mean is not positive; log-normal mode cannot convert "
                       "this variable",
                       path + "/mean"});
      }
    } else if (const auto* l = std::get_if<LogNormalParams>(&spec.dist)) {
      if (!std::isfinite(l->mu_log) || !std::isfinite(l->sigma_log)) {
        out.push_back({Severity::Error, "non-finite parameter", path});
      } else if (l->sigma_log < 0.0) {
        out.push_back(
            {Severity::Error, "negative sigma_log", path + "/sigma_log"});
      }
    } else {
      double v = std::get<PointMass>(spec.dist).value;
      if (!std::isfinite(v)) {
        out.push_back({Severity::Error, "non-finite value", path + "/value"});
      } else if (!(v > 0.0)) {
        out.push_back({Severity::Warning,
                       "value is not positive; log-normal mode cannot convert "
                       "this variable",
                       path + "/value"});
      }
    }
  }

  std::set<VariableId> used;
  validate_expr(m.expression, m.variables, used, "/expression", out);

  for (const auto& [id, spec] : m.variables) {
    if (!used.contains(id)) {
      out.push_back({Severity::Warning,
                     "variable '" + id.name + "' is declared but never "
                     "referenced",
                     "/variables/" + id.name});
    }
  }
  return out;
}

void require_valid(const RiskModel& m) {
  for (const auto& d : validate_model(m)) {
    if (d.severity == Severity::Error) {
      throw ValidationError(d.message, d.location);
    }
  }
}

RiskExpr sum_of_products(const std::vector<std::vector<VariableId>>& rows) {
  if (rows.empty()) throw DomainError("sum_of_products requires >= 1 row");
  std::set<VariableId> seen;
  std::vector<RiskExpr> products;
  products.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.empty()) {
      throw DomainError("sum_of_products rows must be non-empty");
    }
    std::vector<RiskExpr> factors;
    factors.reserve(row.size());
    for (const auto& id : row) {
      if (!seen.insert(id).second) {
        throw ValidationError("independence violation: variable '" + id.name +
                              "' used more than once");
      }
      factors.push_back(RiskExpr::leaf(id));
    }
    products.push_back(RiskExpr::product(std::move(factors)));
  }
  if (products.size() == 1) return std::move(products.front());
  return RiskExpr::sum(std::move(products));
}

bool is_pure_product(const RiskExpr& e) {
  if (std::holds_alternative<LeafNode>(e.node)) return true;
  const auto* prod = std::get_if<ProductNode>(&e.node);
  if (!prod) return false;
  for (const auto& c : prod->children) {
    if (!is_pure_product(c)) return false;
  }
  return true;
}

const VariableId* first_leaf(const RiskExpr& e) {
  if (const auto* leaf = std::get_if<LeafNode>(&e.node)) return &leaf->id;
  const auto* sum = std::get_if<SumNode>(&e.node);
  const auto& children = sum ? sum->children
                             : std::get<ProductNode>(e.node).children;
  return children.empty() ? nullptr : first_leaf(children.front());
}

namespace {

void collect_leaves(const RiskExpr& e, std::vector<VariableId>& out) {
  if (const auto* leaf = std::get_if<LeafNode>(&e.node)) {
    out.push_back(leaf->id);
    return;
  }
  const auto* sum = std::get_if<SumNode>(&e.node);
  for (const auto& c :
       sum ? sum->children : std::get<ProductNode>(e.node).children) {
    collect_leaves(c, out);
  }
}

}  // namespace

std::vector<VariableId> leaf_variables(const RiskExpr& e) {
  std::vector<VariableId> out;
  collect_leaves(e, out);
  return out;
}

}  // namespace riskprop
