#include "isaacslab/scenario.hpp"

#include "isaacslab/errors.hpp"

namespace isaacslab {

namespace {

template <class T>
T positive(std::int64_t v, const std::string& what) {
  if (v < 1) throw ConfigError(what + " must be >= 1");
  return static_cast<T>(v);
}


Scenario from_document(config::Document doc, const std::string& path) {
  Scenario sc;
  sc.path = path;
  sc.doc = std::move(doc);
  sc.spec = load_spec(sc.doc);
  const auto d = static_cast<std::size_t>(sc.spec.d);

  if (const auto* g = sc.doc.find("grid")) {
    g->restrict_keys({"lo", "hi", "n", "nt", "side"});
    sc.has_grid = true;
    sc.lo = g->numbers("lo");
    sc.hi = g->numbers("hi");
    for (auto c : g->integers("n")) sc.n.push_back(static_cast<int>(c));
    if (sc.n.size() == 1 && d > 1) sc.n.assign(d, sc.n[0]);
    if (sc.lo.size() != d || sc.hi.size() != d || sc.n.size() != d) {
      throw ConfigError("schema violation: [grid] lo, hi and n need d entries");
    }
    if (g->has("nt")) sc.nt = static_cast<int>(g->integer("nt"));
    sc.side = parse_side(g->string_or("side", "upper"));
  }
  if (const auto* mc = sc.doc.find("mc")) {
    mc->restrict_keys({"t", "x0", "paths", "steps", "seed", "workers", "policy1", "policy2", "policy"});
    sc.t = mc->number_or("t", 0.0);
    if (mc->has("x0")) sc.x0 = mc->numbers("x0");
    sc.paths = positive<std::size_t>(mc->integer_or("paths", 10000), "[mc] paths");
    sc.steps = positive<int>(mc->integer_or("steps", 200), "[mc] steps");
    const std::int64_t seed = mc->integer_or("seed", 1);
    if (seed < 0) throw ConfigError("schema violation: [mc] seed must be >= 0");
    sc.seed = static_cast<std::uint64_t>(seed);
    sc.workers = positive<unsigned>(mc->integer_or("workers", 1), "[mc] workers");
    sc.policy1 = mc->string_or("policy1", "star");
    sc.policy2 = mc->string_or("policy2", "star");
    sc.policy = mc->string_or("policy", "star");
  }
  if (sc.x0.empty()) sc.x0.assign(d, 0.0);
  if (sc.x0.size() != d) throw ConfigError("schema violation: [mc] x0 needs d entries");
  if (const auto* o = sc.doc.find("output")) {
    o->restrict_keys({"dir", "dump_paths", "slices"});
    sc.out_dir = o->string_or("dir", "out");
    sc.dump_paths = o->boolean_or("dump_paths", false);
    if (o->has("slices")) sc.slices = o->numbers("slices");
  }
  if (const auto* v = sc.doc.find("verify")) {
    v->restrict_keys({"deviations1", "deviations2", "family1", "family2", "family", "decompose1",
                      "decompose2", "random_constants", "random_seed", "allowance", "gap_samples",
                      "gap_p_radius"});
    if (v->has("deviations1")) sc.deviations1 = v->strings("deviations1");
    if (v->has("deviations2")) sc.deviations2 = v->strings("deviations2");
    if (v->has("family1")) sc.family1 = v->strings("family1");
    if (v->has("family2")) sc.family2 = v->strings("family2");
    if (v->has("family")) sc.family = v->strings("family");
    if (v->has("decompose1")) sc.decompose1 = v->strings("decompose1");
    if (v->has("decompose2")) sc.decompose2 = v->strings("decompose2");
    sc.random_constants = static_cast<int>(v->integer_or("random_constants", 0));
    sc.random_seed = static_cast<std::uint64_t>(v->integer_or("random_seed", 1));
    if (v->has("allowance")) sc.allowance = v->number("allowance");
    sc.gap_samples = positive<std::size_t>(v->integer_or("gap_samples", 1000), "[verify] gap_samples");
    sc.gap_p_radius = v->number_or("gap_p_radius", 2.0);
  }

  return sc;
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  Scenario sc = from_document(config::parse_file(path), path);
  validate_scenario(sc);
  return sc;
}

Scenario load_scenario_text(const std::string& text, const std::string& name) {
  Scenario sc = from_document(config::parse(text), name);
  validate_scenario(sc);
  return sc;
}

void validate_scenario(const Scenario& sc) {
  if (!(sc.t >= 0.0 && sc.t < sc.spec.T)) {
    throw ConfigError("schema violation: [mc] t must lie in [0, T)");
  }
}

Side parse_side(const std::string& s) {
  if (s == "upper") return Side::Upper;
  if (s == "lower") return Side::Lower;
  throw ConfigError("side must be \"upper\" or \"lower\", got \"" + s + "\"");
}

Grid scenario_grid(const Scenario& sc) {
  if (!sc.has_grid) throw ConfigError("this command needs a [grid] section");
  const Grid probe(sc.lo, sc.hi, sc.n, 2, sc.spec.T);
  const int nt = sc.nt ? *sc.nt : min_time_levels(sc.spec, probe);
  return Grid(sc.lo, sc.hi, sc.n, nt, sc.spec.T);
}

McParams scenario_mc(const Scenario& sc) { return {sc.paths, sc.steps, sc.seed, sc.workers}; }

std::shared_ptr<const ValueField> solve_scenario(const Scenario& sc) {
  const Grid grid = scenario_grid(sc);
  SolverOptions opts;
  opts.side = sc.side;
  opts.workers = sc.workers;
  ValueField f = sc.spec.kind == ModelKind::Control ? solve_hjb_control(sc.spec, grid, opts)
                                                    : solve_bi(sc.spec, grid, opts);
  return std::make_shared<const ValueField>(std::move(f));
}

}  // namespace isaacslab
