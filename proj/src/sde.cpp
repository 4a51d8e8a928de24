#include "isaacslab/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "isaacslab/errors.hpp"
#include "isaacslab/parallel.hpp"

namespace isaacslab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t path_seed(std::uint64_t base_seed, std::size_t path) {
  return splitmix64(splitmix64(base_seed) + static_cast<std::uint64_t>(path));
}

namespace {

double norm(std::span<const double> y) {
  double acc = 0.0;
  for (double v : y) acc += v * v;
  return std::sqrt(acc);
}

// Running and terminal costs that hit a domain error become NaN; the payoff
// estimator reports them as ill-defined instead of aborting the run.
double guarded(auto&& fn) {
  try {
    return fn();
  } catch (const expr::ExprError& e) {
    if (e.kind() != expr::ErrorKind::Domain) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

struct WorkerState {
  explicit WorkerState(const GameSpec& spec) : scratch(spec) {}
  PolicyScratch scratch;
  std::size_t evaluations = 0;
  std::size_t clamped = 0;
};

}  // namespace

PathBundle simulate(const GameSpec& spec, const FeedbackPolicy& policy1,
                    const FeedbackPolicy& policy2, double t, std::span<const double> x0,
                    std::size_t n_paths, int n_steps, std::uint64_t base_seed,
                    const SimulationOptions& options) {
  if (n_steps < 1) throw SimulationError("simulate needs n_steps >= 1");
  if (n_paths < 1) throw SimulationError("simulate needs n_paths >= 1");
  if (!(t < spec.T)) throw SimulationError("simulate needs t < T");
  if (x0.size() != static_cast<std::size_t>(spec.d)) {
    throw SimulationError("initial state has the wrong dimension");
  }
  policy1.check(spec, Player::One);
  policy2.check(spec, Player::Two);
  const ValueField* dfield = options.decomposition;
  if (dfield != nullptr) {
    if (dfield->grid().dim() != spec.d) throw SimulationError("decomposition field dimension differs from d");
    if (!dfield->has_gradient()) throw SimulationError("decomposition field has no gradient");
  }

  PathBundle out;
  out.t = t;
  out.horizon = spec.T;
  out.x0.assign(x0.begin(), x0.end());
  out.n_paths = n_paths;
  out.n_steps = n_steps;
  out.d = spec.d;
  out.m = spec.m;
  out.k1 = static_cast<int>(spec.U1.dim());
  out.k2 = static_cast<int>(spec.U2.dim());
  out.dt = (spec.T - t) / n_steps;
  out.base_seed = base_seed;

  const auto d = static_cast<std::size_t>(spec.d);
  const auto m = static_cast<std::size_t>(spec.m);
  const auto k1 = static_cast<std::size_t>(out.k1);
  const auto k2 = static_cast<std::size_t>(out.k2);
  const auto ns = static_cast<std::size_t>(n_steps);
  const double dt = out.dt;
  const double sqrt_dt = std::sqrt(dt);

  out.running_cost.assign(n_paths, 0.0);
  out.terminal_cost.assign(n_paths, 0.0);
  out.sup_norm.assign(n_paths, 0.0);
  out.y_final.assign(n_paths * d, 0.0);
  if (dfield != nullptr) {
    out.hamiltonian_defect.assign(n_paths, 0.0);
    out.stochastic_integral.assign(n_paths, 0.0);
  }
  if (options.store_paths) {
    out.dW.assign(n_paths * ns * m, 0.0);
    out.y.assign(n_paths * (ns + 1) * d, 0.0);
    out.u1.assign(n_paths * ns * k1, 0.0);
    out.u2.assign(n_paths * ns * k2, 0.0);
  }

  const bool static_table = !spec.control_terms().time && !spec.control_terms().state;
  const bool static_coeffs = !spec.uncontrolled_terms().time && !spec.uncontrolled_terms().state;
  std::vector<double> b_static(d), sigma_static(d * m);
  if (static_coeffs) {
    spec.eval_b(t, x0, b_static);
    spec.eval_sigma(t, x0, sigma_static);
  }
  const bool synth1 = policy1.kind() == FeedbackPolicy::Kind::Synthesized;
  const bool synth2 = policy2.kind() == FeedbackPolicy::Kind::Synthesized;
  const bool use_lower =
      dfield != nullptr && dfield->equation() != Equation::UpperIsaacs;

  const unsigned workers = options.workers == 0 ? default_workers() : options.workers;
  std::vector<WorkerState> states;
  states.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) states.emplace_back(spec);
  std::vector<unsigned char> bad(n_paths, 0);

  parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end, unsigned w) {
    WorkerState& st = states[w];
    std::vector<double> y(d), y_next(d), u1(k1), u2(k2), f(d), b(d), sigma(d * m), dw(m);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t path = begin; path < end; ++path) {
      std::mt19937_64 rng(path_seed(base_seed, path));
      normal.reset();
      std::copy(x0.begin(), x0.end(), y.begin());
      double sup = norm(y), running = 0.0, defect = 0.0, stochastic = 0.0;
      if (options.store_paths) std::copy(y.begin(), y.end(), out.y.begin() + path * (ns + 1) * d);
      bool ok = true;
      for (std::size_t k = 0; k < ns; ++k) {
        const double s = t + (spec.T - t) * static_cast<double>(k) / n_steps;
        PolicyEval e1, e2;
        try {
          e1 = policy1.evaluate(spec, Player::One, s, y, u1, st.scratch);
          e2 = policy2.evaluate(spec, Player::Two, s, y, u2, st.scratch);
        } catch (const Error& e) {
          std::ostringstream os;
          os << "path " << path << ", step " << k << ": " << e.what();
          throw SimulationError(os.str());
        }
        if (synth1) {
          ++st.evaluations;
          st.clamped += e1.clamped_gradient;
        }
        if (synth2) {
          ++st.evaluations;
          st.clamped += e2.clamped_gradient;
        }

        double l;
        if (static_table && e1.index && e2.index) {
          const ControlTable& table = st.scratch.workspace().table(s, y);
          const auto fi = table.f1(*e1.index, *e2.index);
          std::copy(fi.begin(), fi.end(), f.begin());
          l = table.l(*e1.index, *e2.index);
        } else {
          try {
            spec.eval_f1(s, y, u1, u2, f);
          } catch (const Error& e) {
            throw SimulationError("path " + std::to_string(path) + ": " + e.what());
          }
          l = guarded([&] { return spec.eval_l(s, y, u1, u2); });
        }
        if (static_coeffs) {
          std::copy(b_static.begin(), b_static.end(), b.begin());
          std::copy(sigma_static.begin(), sigma_static.end(), sigma.begin());
        } else {
          try {
            spec.eval_b(s, y, b);
            spec.eval_sigma(s, y, sigma);
          } catch (const Error& e) {
            throw SimulationError("path " + std::to_string(path) + ": " + e.what());
          }
        }
        for (std::size_t j = 0; j < m; ++j) dw[j] = sqrt_dt * normal(rng);

        if (dfield != nullptr) {
          const auto& sel = st.scratch.select(*dfield, s, y);
          double hcv = l;
          for (std::size_t r = 0; r < d; ++r) hcv += f[r] * sel.p[r];
          defect += (hcv - (use_lower ? sel.lower : sel.upper)) * dt;
          for (std::size_t r = 0; r < d; ++r) {
            double sd = 0.0;
            for (std::size_t j = 0; j < m; ++j) sd += sigma[r * m + j] * dw[j];
            stochastic += sel.p[r] * sd;
          }
        }
        running += l * dt;
        for (std::size_t r = 0; r < d; ++r) {
          double acc = y[r] + (b[r] + f[r]) * dt;
          for (std::size_t j = 0; j < m; ++j) acc += sigma[r * m + j] * dw[j];
          y_next[r] = acc;
        }
        if (options.store_paths) {
          std::copy(dw.begin(), dw.end(), out.dW.begin() + (path * ns + k) * m);
          std::copy(u1.begin(), u1.end(), out.u1.begin() + (path * ns + k) * k1);
          std::copy(u2.begin(), u2.end(), out.u2.begin() + (path * ns + k) * k2);
          std::copy(y_next.begin(), y_next.end(), out.y.begin() + (path * (ns + 1) + k + 1) * d);
        }
        y.swap(y_next);
        if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
          ok = false;
          break;
        }
        sup = std::max(sup, norm(y));
      }
      if (!ok) {
        bad[path] = 1;
        continue;
      }
      out.running_cost[path] = running;
      out.terminal_cost[path] = guarded([&] { return spec.eval_g(y); });
      out.sup_norm[path] = sup;
      std::copy(y.begin(), y.end(), out.y_final.begin() + path * d);
      if (dfield != nullptr) {
        out.hamiltonian_defect[path] = defect;
        out.stochastic_integral[path] = stochastic;
      }
    }
  });

  for (const auto& st : states) {
    out.policy_evaluations += st.evaluations;
    out.clamped_evaluations += st.clamped;
  }
  const auto first_bad = std::find(bad.begin(), bad.end(), 1);
  if (first_bad != bad.end()) {
    out.failed = true;
    out.failed_path = static_cast<std::size_t>(first_bad - bad.begin());
  }
  return out;
}

MomentEstimate estimate_moments(const PathBundle& bundle, int p) {
  if (p < 2 || p % 2 != 0) throw SimulationError("moment order must be an even integer >= 2");
  if (bundle.failed) throw SimulationError("moment estimate needs a bundle without failed paths");
  const std::size_t n = bundle.n_paths;
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::pow(bundle.sup_norm[i], p);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  MomentEstimate out;
  out.mean = mean;
  out.standard_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  return out;
}

}  // namespace isaacslab
