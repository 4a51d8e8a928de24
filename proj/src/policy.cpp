#include "isaacslab/policy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "isaacslab/errors.hpp"

namespace isaacslab {

namespace {

std::string player_name(Player who) { return who == Player::One ? "u1" : "u2"; }

std::string format_vector(std::span<const double> u) {
  std::ostringstream os;
  for (std::size_t i = 0; i < u.size(); ++i) os << (i ? ";" : "") << u[i];
  return os.str();
}

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

}  // namespace

const ControlSet& control_set(const GameSpec& spec, Player who) {
  return who == Player::One ? spec.U1 : spec.U2;
}

// ---------------------------------------------------------------------------

PolicyScratch::PolicyScratch(const GameSpec& spec) : ws_(spec) {}

const PolicyScratch::Selection& PolicyScratch::select(const ValueField& field, double s,
                                                      std::span<const double> x) {
  if (key_field_ == &field && key_s_ == s &&
      std::equal(x.begin(), x.end(), key_x_.begin(), key_x_.end())) {
    return sel_;
  }
  sel_.p.resize(x.size());
  sel_.clamped = field.interpolate_gradient(s, x, sel_.p);
  const MatrixGameSolution sol = ws_.table(s, x).solve(sel_.p);
  sel_.row = sol.row;
  sel_.col = sol.col;
  sel_.lower = sol.lower;
  sel_.upper = sol.upper;
  key_field_ = &field;
  key_s_ = s;
  key_x_.assign(x.begin(), x.end());
  return sel_;
}

// ---------------------------------------------------------------------------

FeedbackPolicy FeedbackPolicy::constant(std::vector<double> u) {
  FeedbackPolicy p;
  p.kind_ = Kind::Constant;
  p.label_ = u.empty() ? "passive" : "const(" + format_vector(u) + ")";
  p.value_ = std::move(u);
  return p;
}

FeedbackPolicy FeedbackPolicy::expression(std::vector<expr::Ast> components) {
  FeedbackPolicy p;
  p.kind_ = Kind::Expression;
  std::string label;
  for (const auto& c : components) {
    for (const auto& v : c.variables()) {
      if (v.kind != expr::VarKind::Time && v.kind != expr::VarKind::State) {
        throw ConfigError("policy expression '" + c.source() + "' may only use s and x");
      }
    }
    label += (label.empty() ? "" : ";") + c.source();
  }
  p.label_ = label;
  p.components_ = std::move(components);
  return p;
}

FeedbackPolicy FeedbackPolicy::tabulated(std::vector<double> lo, std::vector<double> hi,
                                         std::vector<int> counts, std::vector<double> values) {
  if (lo.empty() || lo.size() != hi.size() || lo.size() != counts.size()) {
    throw ConfigError("tabulated policy: grid dimension mismatch");
  }
  std::size_t nodes = 1;
  FeedbackPolicy p;
  for (std::size_t a = 0; a < lo.size(); ++a) {
    if (counts[a] < 1 || (counts[a] > 1 && !(lo[a] < hi[a]))) {
      throw ConfigError("tabulated policy: invalid grid axis");
    }
    nodes *= static_cast<std::size_t>(counts[a]);
    p.h_.push_back(counts[a] > 1 ? (hi[a] - lo[a]) / (counts[a] - 1) : 1.0);
  }
  if (values.empty() || values.size() % nodes != 0) {
    throw ConfigError("tabulated policy: value count is not a multiple of the node count");
  }
  p.kind_ = Kind::Tabulated;
  p.label_ = "table";
  p.lo_ = std::move(lo);
  p.hi_ = std::move(hi);
  p.counts_ = std::move(counts);
  p.table_ = std::move(values);
  return p;
}

FeedbackPolicy FeedbackPolicy::synthesized(std::shared_ptr<const ValueField> field) {
  if (!field) throw ConfigError("synthesized policy needs a value field");
  if (!field->has_gradient()) throw ConfigError("synthesized policy needs the field gradient");
  FeedbackPolicy p;
  p.kind_ = Kind::Synthesized;
  p.label_ = "star";
  p.field_ = std::move(field);
  return p;
}

FeedbackPolicy FeedbackPolicy::parse(const std::string& text,
                                     std::shared_ptr<const ValueField> field) {
  const std::string t = trim(text);
  if (t == "star") return synthesized(std::move(field));
  if (t.empty()) throw ConfigError("empty policy string");
  std::vector<expr::Ast> parts;
  std::size_t begin = 0;
  while (true) {
    const std::size_t end = t.find(';', begin);
    const std::string piece = trim(t.substr(begin, end == std::string::npos ? end : end - begin));
    try {
      parts.push_back(expr::parse(piece));
    } catch (const expr::ExprError& e) {
      throw ConfigError("policy '" + t + "': " + e.what());
    }
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  const bool all_constant =
      std::all_of(parts.begin(), parts.end(), [](const expr::Ast& a) { return a.variables().empty(); });
  if (all_constant) {
    std::vector<double> u;
    for (const auto& a : parts) u.push_back(expr::eval(expr::fold_constants(a), {}));
    FeedbackPolicy p = constant(std::move(u));
    p.label_ = t;
    return p;
  }
  FeedbackPolicy p = expression(std::move(parts));
  p.label_ = t;
  return p;
}

void FeedbackPolicy::check(const GameSpec& spec, Player who) const {
  const std::size_t k = control_set(spec, who).dim();
  const auto fail = [&](const std::string& why) {
    throw ConfigError("policy '" + label_ + "' for " + player_name(who) + ": " + why);
  };
  switch (kind_) {
    case Kind::Constant:
      if (value_.size() != k) fail("expected " + std::to_string(k) + " components");
      break;
    case Kind::Expression:
      if (components_.size() != k) fail("expected " + std::to_string(k) + " components");
      for (const auto& c : components_) {
        for (const auto& v : c.variables()) {
          if (v.kind == expr::VarKind::State && v.index >= spec.d) fail("state index out of range");
        }
      }
      break;
    case Kind::Tabulated: {
      if (lo_.size() != static_cast<std::size_t>(spec.d)) fail("table dimension differs from d");
      std::size_t nodes = 1;
      for (int c : counts_) nodes *= static_cast<std::size_t>(c);
      if (table_.size() != nodes * k) fail("table has the wrong number of values");
      break;
    }
    case Kind::Synthesized:
      if (field_->grid().dim() != spec.d) fail("value field dimension differs from d");
      break;
  }
}

PolicyEval FeedbackPolicy::evaluate(const GameSpec& spec, Player who, double s,
                                    std::span<const double> x, std::span<double> out,
                                    PolicyScratch& scratch) const {
  const ControlSet& U = control_set(spec, who);
  PolicyEval info;
  switch (kind_) {
    case Kind::Constant:
      std::copy(value_.begin(), value_.end(), out.begin());
      break;
    case Kind::Expression: {
      expr::Bindings env;
      env.s = s;
      env.x = x;
      for (std::size_t j = 0; j < components_.size(); ++j) out[j] = components_[j].evaluate(env);
      break;
    }
    case Kind::Tabulated: {
      std::size_t node = 0, stride = 1;
      for (std::size_t a = 0; a < lo_.size(); ++a) {
        int k = static_cast<int>(std::lround((x[a] - lo_[a]) / h_[a]));
        k = std::clamp(k, 0, counts_[a] - 1);
        node += static_cast<std::size_t>(k) * stride;
        stride *= static_cast<std::size_t>(counts_[a]);
      }
      const std::size_t kdim = U.dim();
      std::copy_n(table_.begin() + static_cast<std::ptrdiff_t>(node * kdim), kdim, out.begin());
      break;
    }
    case Kind::Synthesized: {
      const auto& sel = scratch.select(*field_, s, x);
      const std::size_t idx = who == Player::One ? sel.row : sel.col;
      const auto u = U.point(idx);
      std::copy(u.begin(), u.end(), out.begin());
      info.index = idx;
      info.clamped_gradient = sel.clamped;
      return info;
    }
  }
  for (std::size_t j = 0; j < U.dim(); ++j) {
    if (!std::isfinite(out[j])) {
      throw SimulationError("policy '" + label_ + "' returned a non-finite control");
    }
  }
  U.clamp(out.first(U.dim()));
  info.index = U.find(out.first(U.dim()), 1e-12);
  return info;
}

}  // namespace isaacslab
