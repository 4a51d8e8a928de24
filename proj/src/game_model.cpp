#include "isaacslab/game_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace isaacslab {

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw ConfigError(msg); }

std::string join_numbers(std::span<const double> v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += config::format_number(v[i]);
  }
  return out + "]";
}

std::string join_strings(const std::vector<expr::Ast>& v) {
  if (v.size() == 1) return config::quote(v[0].source());
  const bool builtin = v[0].source() == "zero" || v[0].source() == "identity";
  if (builtin && std::all_of(v.begin(), v.end(),
                             [&](const expr::Ast& a) { return a.source() == v[0].source(); })) {
    return config::quote(v[0].source());
  }
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += config::quote(v[i].source());
  }
  return out + "]";
}

expr::Ast parse_coefficient(const std::string& where, const std::string& text) {
  try {
    return expr::fold_constants(expr::parse(text));
  } catch (const expr::ExprError& e) {
    invalid(where + ": " + e.what());
  }
}

std::vector<expr::Ast> parse_vector(const config::Section& sec, const std::string& key,
                                    std::size_t size, bool allow_identity, int rows, int cols) {
  const std::string where = "[" + sec.name() + "] " + key;
  const auto texts = sec.strings(key);
  std::vector<expr::Ast> out;
  if (texts.size() == 1 && (texts[0] == "zero" || (allow_identity && texts[0] == "identity"))) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        auto node = std::make_shared<expr::Node>();
        node->value = texts[0] == "identity" && r == c ? 1.0 : 0.0;
        out.emplace_back(std::move(node), texts[0]);
      }
    }
    return out;
  }
  if (texts.size() != size) {
    invalid("schema violation: " + where + ": expected " + std::to_string(size) +
            " expression(s), got " + std::to_string(texts.size()));
  }
  for (const auto& t : texts) out.push_back(parse_coefficient(where, t));
  return out;
}

ControlSet load_controls(const config::Section& sec) {
  sec.restrict_keys({"lo", "hi", "points", "list"});
  auto lo = sec.numbers("lo");
  auto hi = sec.numbers("hi");
  if (lo.size() != hi.size()) {
    invalid("schema violation: [" + sec.name() + "] lo and hi differ in length");
  }
  if (sec.has("points") == sec.has("list")) {
    invalid("schema violation: [" + sec.name() + "] exactly one of 'points' or 'list' is required");
  }
  if (sec.has("points")) {
    std::vector<int> counts;
    for (auto c : sec.integers("points")) counts.push_back(static_cast<int>(c));
    if (counts.size() == 1 && lo.size() > 1) counts.assign(lo.size(), counts[0]);
    try {
      return ControlSet::grid(std::move(lo), std::move(hi), std::move(counts));
    } catch (const ConfigError& e) {
      invalid("[" + sec.name() + "] " + e.what());
    }
  }
  const config::Value* list = sec.find("list");
  if (!list->is_array()) invalid("schema violation: [" + sec.name() + "] list: expected an array");
  std::vector<std::vector<double>> pts;
  for (const auto& item : std::get<config::Array>(list->data)) {
    std::vector<double> p;
    if (item.is_number()) {
      p.push_back(std::get<double>(item.data));
    } else if (item.is_array()) {
      for (const auto& c : std::get<config::Array>(item.data)) {
        if (!c.is_number()) invalid("schema violation: [" + sec.name() + "] list: numbers expected");
        p.push_back(std::get<double>(c.data));
      }
    } else {
      invalid("schema violation: [" + sec.name() + "] list: numbers expected");
    }
    pts.push_back(std::move(p));
  }
  try {
    return ControlSet::points(std::move(lo), std::move(hi), std::move(pts));
  } catch (const ConfigError& e) {
    invalid("[" + sec.name() + "] " + e.what());
  }
}

void check_vars(const std::string& where, const expr::Ast& ast, const GameSpec& spec,
                bool allow_time, bool allow_controls) {
  for (const auto& v : ast.variables()) {
    const auto bad = [&](const std::string& why) {
      invalid("invalid coefficient " + where + ": '" + v.name() + "' " + why);
    };
    switch (v.kind) {
      case expr::VarKind::Time:
        if (!allow_time) bad("may not depend on time");
        break;
      case expr::VarKind::State:
        if (v.index >= spec.d) bad("exceeds state dimension d=" + std::to_string(spec.d));
        break;
      case expr::VarKind::Costate: bad("is not allowed in model coefficients"); break;
      case expr::VarKind::Control1:
      case expr::VarKind::Control2:
      case expr::VarKind::Control: {
        if (!allow_controls) bad("is a control variable (this coefficient must be control-free)");
        const bool game = spec.kind == ModelKind::Game;
        if (game && v.kind == expr::VarKind::Control) bad("belongs to single-controller models");
        if (!game && v.kind != expr::VarKind::Control) bad("belongs to two-player models");
        const std::size_t k =
            v.kind == expr::VarKind::Control1 ? spec.U1.dim() : spec.U2.dim();
        if (static_cast<std::size_t>(v.index) >= k) {
          bad("exceeds control dimension " + std::to_string(k));
        }
        break;
      }
    }
  }
}

void merge_dependence(Dependence& dep, const expr::Ast& ast) {
  for (const auto& v : ast.variables()) {
    if (v.kind == expr::VarKind::Time) dep.time = true;
    if (v.kind == expr::VarKind::State) dep.state = true;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ControlSet

void ControlSet::finalize(std::vector<std::vector<double>> pts) {
  const std::size_t k = lo_.size();
  for (std::size_t j = 0; j < k; ++j) {
    if (!(lo_[j] <= hi_[j]) || !std::isfinite(lo_[j]) || !std::isfinite(hi_[j])) {
      invalid("control bounds must satisfy lo <= hi and be finite");
    }
  }
  if (pts.empty()) invalid("control set is empty");
  for (const auto& p : pts) {
    if (p.size() != k) invalid("control point has wrong dimension");
    for (std::size_t j = 0; j < k; ++j) {
      if (!(p[j] >= lo_[j] && p[j] <= hi_[j])) invalid("control point outside bounds");
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  count_ = pts.size();
  flat_.clear();
  flat_.reserve(count_ * k);
  for (const auto& p : pts) flat_.insert(flat_.end(), p.begin(), p.end());
}

ControlSet ControlSet::grid(std::vector<double> lo, std::vector<double> hi,
                            std::vector<int> counts) {
  ControlSet set;
  set.lo_ = std::move(lo);
  set.hi_ = std::move(hi);
  const std::size_t k = set.lo_.size();
  if (counts.size() != k || set.hi_.size() != k) invalid("control grid dimension mismatch");
  if (k == 0) invalid("control grid needs at least one axis");
  std::vector<std::vector<double>> axes(k);
  for (std::size_t j = 0; j < k; ++j) {
    const int n = counts[j];
    if (n < 1) invalid("control grid needs at least one point per axis");
    if (n == 1) {
      if (set.lo_[j] != set.hi_[j]) invalid("a one-point control axis needs lo == hi");
      axes[j].push_back(set.lo_[j]);
      continue;
    }
    for (int i = 0; i < n; ++i) {
      // symmetric form keeps points such as 0 and 0.6 exact on [-1, 1]
      axes[j].push_back((static_cast<double>(n - 1 - i) * set.lo_[j] +
                         static_cast<double>(i) * set.hi_[j]) /
                        static_cast<double>(n - 1));
    }
  }
  std::vector<std::vector<double>> pts{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : pts) {
      for (double v : axis) {
        auto p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    }
    pts = std::move(next);
  }
  set.finalize(std::move(pts));
  return set;
}

ControlSet ControlSet::points(std::vector<double> lo, std::vector<double> hi,
                              std::vector<std::vector<double>> pts) {
  ControlSet set;
  set.lo_ = std::move(lo);
  set.hi_ = std::move(hi);
  if (set.lo_.size() != set.hi_.size()) invalid("control bounds dimension mismatch");
  if (set.lo_.empty()) invalid("control set needs at least one axis");
  set.finalize(std::move(pts));
  return set;
}

ControlSet ControlSet::singleton() {
  ControlSet set;
  set.count_ = 1;
  return set;
}

bool ControlSet::clamp(std::span<double> u) const {
  bool moved = false;
  for (std::size_t j = 0; j < dim() && j < u.size(); ++j) {
    const double c = std::clamp(u[j], lo_[j], hi_[j]);
    if (c != u[j]) moved = true;
    u[j] = c;
  }
  return moved;
}

std::optional<std::size_t> ControlSet::find(std::span<const double> u, double tol) const {
  if (u.size() != dim()) return std::nullopt;
  for (std::size_t i = 0; i < count_; ++i) {
    const auto p = point(i);
    bool match = true;
    for (std::size_t j = 0; j < dim(); ++j) match = match && std::fabs(p[j] - u[j]) <= tol;
    if (match) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// GameSpec

void GameSpec::finalize() {
  if (d < 1 || m < 1) invalid("schema violation: [model] d and m must be >= 1");
  if (!(T > 0.0) || !std::isfinite(T)) invalid("schema violation: [model] T must satisfy 0 < T < inf");
  if (b.size() != static_cast<std::size_t>(d)) invalid("b must have d components");
  if (f1.size() != static_cast<std::size_t>(d)) invalid("f1 must have d components");
  if (sigma.size() != static_cast<std::size_t>(d * m)) invalid("sigma must have d*m entries");
  if (l.empty() || g.empty()) invalid("costs l and g are required");
  if (U1.size() == 0 || U2.size() == 0) invalid("control sets must be non-empty");
  if (kind == ModelKind::Control && U1.dim() != 0) {
    invalid("single-controller models take their control set from [controls.u]");
  }

  for (int i = 0; i < d; ++i) {
    check_vars("b[" + std::to_string(i + 1) + "]", b[i], *this, true, false);
    check_vars("f1[" + std::to_string(i + 1) + "]", f1[i], *this, true, true);
  }
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    check_vars("sigma[" + std::to_string(i + 1) + "]", sigma[i], *this, true, false);
  }
  check_vars("l", l, *this, true, true);
  check_vars("g", g, *this, false, false);

  control_terms_ = {};
  uncontrolled_terms_ = {};
  for (const auto& e : f1) merge_dependence(control_terms_, e);
  merge_dependence(control_terms_, l);
  for (const auto& e : b) merge_dependence(uncontrolled_terms_, e);
  for (const auto& e : sigma) merge_dependence(uncontrolled_terms_, e);
}

expr::Bindings GameSpec::bind(double s, std::span<const double> x, std::span<const double> u1,
                              std::span<const double> u2) const {
  expr::Bindings env;
  env.s = s;
  env.x = x;
  env.u1 = u1;
  env.u2 = u2;
  env.u = u2;
  return env;
}

void GameSpec::eval_b(double s, std::span<const double> x, std::span<double> out) const {
  const auto env = bind(s, x, {}, {});
  for (int i = 0; i < d; ++i) out[i] = b[i].evaluate(env);
}

void GameSpec::eval_f1(double s, std::span<const double> x, std::span<const double> u1,
                       std::span<const double> u2, std::span<double> out) const {
  const auto env = bind(s, x, u1, u2);
  for (int i = 0; i < d; ++i) out[i] = f1[i].evaluate(env);
}

void GameSpec::eval_sigma(double s, std::span<const double> x, std::span<double> out) const {
  const auto env = bind(s, x, {}, {});
  for (std::size_t i = 0; i < sigma.size(); ++i) out[i] = sigma[i].evaluate(env);
}

double GameSpec::eval_l(double s, std::span<const double> x, std::span<const double> u1,
                        std::span<const double> u2) const {
  return l.evaluate(bind(s, x, u1, u2));
}

double GameSpec::eval_g(std::span<const double> x) const { return g.evaluate(bind(T, x, {}, {})); }

GameSpec::Dynamics GameSpec::eval_dynamics(double s, std::span<const double> x,
                                           std::span<const double> u1,
                                           std::span<const double> u2) const {
  Dynamics out{Eigen::VectorXd(d), Eigen::MatrixXd(d, m)};
  std::vector<double> bv(d), fv(d), sv(static_cast<std::size_t>(d * m));
  eval_b(s, x, bv);
  eval_f1(s, x, u1, u2, fv);
  eval_sigma(s, x, sv);
  for (int i = 0; i < d; ++i) {
    out.drift(i) = bv[i] + fv[i];
    for (int j = 0; j < m; ++j) out.diffusion(i, j) = sv[static_cast<std::size_t>(i * m + j)];
  }
  return out;
}

std::string GameSpec::canonical() const {
  std::ostringstream os;
  os << "[model]\n";
  if (!name.empty()) os << "name = " << config::quote(name) << "\n";
  os << "kind = " << (kind == ModelKind::Game ? "\"game\"" : "\"control\"") << "\n";
  os << "d = " << d << "\nm = " << m << "\nT = " << config::format_number(T) << "\n\n";
  os << "[dynamics]\n";
  os << "b = " << join_strings(b) << "\n";
  os << "f1 = " << join_strings(f1) << "\n";
  os << "sigma = " << join_strings(sigma) << "\n\n";
  os << "[cost]\n";
  os << "l = " << config::quote(l.source()) << "\n";
  os << "g = " << config::quote(g.source()) << "\n";
  const auto emit_set = [&os](const std::string& section, const ControlSet& set) {
    os << "\n[" << section << "]\n";
    os << "lo = " << join_numbers(set.lo()) << "\n";
    os << "hi = " << join_numbers(set.hi()) << "\n";
    os << "list = [";
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (i) os << ", ";
      os << join_numbers(set.point(i));
    }
    os << "]\n";
  };
  if (kind == ModelKind::Game) {
    emit_set("controls.u1", U1);
    emit_set("controls.u2", U2);
  } else {
    emit_set("controls.u", U2);
  }
  return os.str();
}

GameSpec load_spec(const config::Document& doc) {
  doc.restrict_sections({"model", "dynamics", "cost", "controls.u1", "controls.u2", "controls.u",
                         "grid", "mc", "output", "verify"});
  GameSpec spec;
  const auto& model = doc.section("model");
  model.restrict_keys({"d", "m", "T", "kind", "name"});
  spec.d = static_cast<int>(model.integer("d"));
  spec.m = static_cast<int>(model.integer("m"));
  spec.T = model.number("T");
  spec.name = model.string_or("name", "");
  const std::string kind = model.string_or("kind", "game");
  if (kind == "game") {
    spec.kind = ModelKind::Game;
  } else if (kind == "control") {
    spec.kind = ModelKind::Control;
  } else {
    invalid("schema violation: [model] kind: expected \"game\" or \"control\"");
  }
  if (spec.d < 1 || spec.m < 1 || spec.d > 64 || spec.m > 64) {
    invalid("schema violation: [model] d and m must be in 1..64");
  }

  const auto& dyn = doc.section("dynamics");
  dyn.restrict_keys({"b", "f1", "sigma"});
  const auto d = static_cast<std::size_t>(spec.d);
  spec.b = parse_vector(dyn, "b", d, false, spec.d, 1);
  spec.f1 = parse_vector(dyn, "f1", d, false, spec.d, 1);
  spec.sigma = parse_vector(dyn, "sigma", d * static_cast<std::size_t>(spec.m), true, spec.d,
                            spec.m);

  const auto& cost = doc.section("cost");
  cost.restrict_keys({"l", "g"});
  spec.l = parse_coefficient("[cost] l", cost.string("l"));
  spec.g = parse_coefficient("[cost] g", cost.string("g"));

  if (spec.kind == ModelKind::Game) {
    if (doc.find("controls.u")) invalid("schema violation: [controls.u] is for kind = \"control\"");
    spec.U1 = load_controls(doc.section("controls.u1"));
    spec.U2 = load_controls(doc.section("controls.u2"));
  } else {
    if (doc.find("controls.u1") || doc.find("controls.u2")) {
      invalid("schema violation: control models use [controls.u]");
    }
    spec.U1 = ControlSet::singleton();
    spec.U2 = load_controls(doc.section("controls.u"));
  }
  spec.finalize();
  return spec;
}

GameSpec load_spec(std::string_view config_text) { return load_spec(config::parse(config_text)); }

// ---------------------------------------------------------------------------
// Diagnostics

std::vector<SamplePoint> make_sample_cloud(const GameSpec& spec, double radius,
                                           std::size_t n_states, std::uint64_t seed,
                                           std::size_t pairs_per_state) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n1 = spec.U1.size();
  const std::size_t n2 = spec.U2.size();
  const bool all_pairs = n1 * n2 <= 1024;
  std::vector<SamplePoint> cloud;
  for (std::size_t k = 0; k < n_states; ++k) {
    SamplePoint base;
    base.s = spec.T * unit(rng);
    base.x.resize(static_cast<std::size_t>(spec.d));
    for (auto& xi : base.x) xi = radius * (2.0 * unit(rng) - 1.0);
    const auto push = [&](std::size_t i, std::size_t j) {
      SamplePoint p = base;
      const auto a = spec.U1.point(i);
      const auto c = spec.U2.point(j);
      p.u1.assign(a.begin(), a.end());
      p.u2.assign(c.begin(), c.end());
      cloud.push_back(std::move(p));
    };
    if (all_pairs) {
      for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) push(i, j);
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick1(0, n1 - 1), pick2(0, n2 - 1);
      for (std::size_t r = 0; r < pairs_per_state; ++r) push(pick1(rng), pick2(rng));
    }
  }
  return cloud;
}

DiagnosticsReport check_linear_growth(const GameSpec& spec, std::span<const SamplePoint> cloud) {
  DiagnosticsReport rep;
  rep.samples = cloud.size();
  const auto d = static_cast<std::size_t>(spec.d);
  std::vector<double> bv(d), fv(d), sv(d * static_cast<std::size_t>(spec.m)), x2(d);
  const auto ratio = [&](double s, std::span<const double> x, const SamplePoint& p) {
    spec.eval_b(s, x, bv);
    spec.eval_f1(s, x, p.u1, p.u2, fv);
    spec.eval_sigma(s, x, sv);
    double nb = 0, nf = 0, ns = 0, nx = 0;
    for (std::size_t i = 0; i < d; ++i) {
      nb += bv[i] * bv[i];
      nf += fv[i] * fv[i];
      nx += x[i] * x[i];
    }
    for (double v : sv) ns += v * v;
    return (std::sqrt(nb) + std::sqrt(nf) + std::sqrt(ns)) / (1.0 + std::sqrt(nx));
  };
  for (const auto& p : cloud) {
    rep.growth_constant = std::max(rep.growth_constant, ratio(p.s, p.x, p));
    for (std::size_t i = 0; i < d; ++i) x2[i] = 2.0 * p.x[i];
    rep.growth_constant_doubled = std::max(rep.growth_constant_doubled, ratio(p.s, x2, p));
  }
  rep.unbounded_suspicion =
      rep.growth_constant > 0.0 && rep.growth_constant_doubled > 1.5 * rep.growth_constant;
  return rep;
}

CovarianceSpectrum covariance_spectrum(const GameSpec& spec, double s, std::span<const double> x) {
  std::vector<double> sv(static_cast<std::size_t>(spec.d * spec.m));
  spec.eval_sigma(s, x, sv);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      sig(sv.data(), spec.d, spec.m);
  const Eigen::MatrixXd cov = sig * sig.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  CovarianceSpectrum out;
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  out.max_eigenvalue = eig.eigenvalues().maxCoeff();
  out.condition = out.min_eigenvalue > 0.0 ? out.max_eigenvalue / out.min_eigenvalue
                                           : std::numeric_limits<double>::infinity();
  return out;
}

DiagnosticsReport check_novikov_boundedness(const GameSpec& spec,
                                            std::span<const SamplePoint> cloud) {
  DiagnosticsReport rep;
  rep.samples = cloud.size();
  const auto d = static_cast<std::size_t>(spec.d);
  std::vector<double> sv(d * static_cast<std::size_t>(spec.m)), fv(d);
  double bound = 0.0;
  bool bound_defined = true;
  double c_min = std::numeric_limits<double>::infinity();
  for (const auto& p : cloud) {
    spec.eval_sigma(p.s, p.x, sv);
    spec.eval_f1(p.s, p.x, p.u1, p.u2, fv);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        sig(sv.data(), spec.d, spec.m);
    const Eigen::Map<const Eigen::VectorXd> f(fv.data(), spec.d);
    const Eigen::MatrixXd cov = sig * sig.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    c_min = std::min(c_min, std::max(lmin, 0.0));
    const bool singular = !(lmax > 0.0) || !(lmin > 0.0) || lmax / lmin > 1e12;
    if (singular) {
      rep.degenerate = true;
      if (f.norm() != 0.0) bound_defined = false;
      continue;
    }
    const Eigen::VectorXd kernel = sig.transpose() * cov.ldlt().solve(f);
    bound = std::max(bound, kernel.norm());
  }
  rep.nondegeneracy_constant = cloud.empty() ? 0.0 : c_min;
  if (bound_defined) rep.novikov_bound = bound;
  return rep;
}

}  // namespace isaacslab
