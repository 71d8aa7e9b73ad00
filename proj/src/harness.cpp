#include "spde/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>

#include "spde/dalang.hpp"
#include "spde/errors.hpp"
#include "spde/picard.hpp"
#include "spde/verify.hpp"
#include "spde/wave.hpp"

namespace spde {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

const std::set<std::string> kSubcommands = {"upsilon", "gate", "minbeta", "simulate", "verify", "anderson", "wave"};

// %.17g round-trips every double; the CSV bytes depend only on the values.
class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const char* header) : file_(std::fopen(path.c_str(), "wb")) {
    if (file_ == nullptr) throw Error("cannot open " + path.string() + " for writing");
    std::fputs(header, file_);
    std::fputc('\n', file_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  ~CsvWriter() {
    if (file_ != nullptr) std::fclose(file_);
  }

  void row(std::initializer_list<std::size_t> ints, std::initializer_list<double> reals) {
    bool first = true;
    for (std::size_t v : ints) {
      std::fprintf(file_, first ? "%zu" : ",%zu", v);
      first = false;
    }
    for (double v : reals) {
      std::fprintf(file_, first ? "%.17g" : ",%.17g", v);
      first = false;
    }
    std::fputc('\n', file_);
  }

  void close() {
    const bool failed = std::ferror(file_) != 0;
    if (std::fclose(file_) != 0 || failed) {
      file_ = nullptr;
      throw Error("write failed");
    }
    file_ = nullptr;
  }

 private:
  std::FILE* file_;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  os << j.dump(2) << '\n';
  if (!os) throw Error("cannot write " + path.string());
}

std::optional<fs::path> artifact(const RunOptions& opts, const std::string& name) {
  if (!opts.out_dir) return std::nullopt;
  return *opts.out_dir / name;
}

void write_ensemble_csv(const fs::path& path, const FieldEnsemble& ens, std::size_t stride_t, std::size_t stride_x) {
  const GridSpec& g = ens.grid();
  CsvWriter csv(path, "replica,j,i,t,x,u");
  for (std::size_t r = 0; r < ens.replicas(); ++r) {
    for (std::size_t j = 0; j < g.n_t; j += stride_t) {
      for (std::size_t i = 0; i < g.n_x; i += stride_x) csv.row({r, j, i}, {g.t(j), g.x(i), ens.at(r, j, i)});
    }
  }
  csv.close();
}

std::shared_ptr<const SpectralKernel> heat_kernel(const LevyModel& model, const GridSpec& grid) {
  return std::make_shared<const SpectralKernel>(TransitionKernel(model).table(grid));
}

SolverOptions solver_options(const ExperimentConfig& c, const RunOptions& opts) {
  return SolverOptions{c.method, opts.workers};
}

int verdict(bool pass) { return pass ? kExitOk : kExitVerificationFailed; }

RunOutcome run_upsilon(const ExperimentConfig& c) {
  const auto ups = upsilon(c.model, c.norm.beta);
  json r = ups.to_json();
  r["beta"] = c.norm.beta;
  r["model"] = c.model.to_json();
  return {kExitOk, r};
}

RunOutcome run_gate(const ExperimentConfig& c) {
  GateParams p{c.norm.k, c.norm.beta, c.gate_lip(), c.l_sigma};
  const auto gate = existence_gate(c.model, p);
  json r = gate.to_json();
  r["upsilon"] = gate.upsilon.diverges ? json(nullptr) : json(gate.upsilon.value);
  r["upsilon_detail"] = gate.upsilon.to_json();
  r["k"] = c.norm.k;
  r["beta"] = c.norm.beta;
  r["lip"] = c.gate_lip();
  if (c.l_sigma) r["sharpness"] = sharpness_bound(c.model, c.norm.beta, *c.l_sigma).to_json();
  return {gate.pass ? kExitOk : kExitGateRefused, r};
}

RunOutcome run_minbeta(const ExperimentConfig& c) {
  const double b = min_beta(c.model, c.norm.k, c.gate_lip());
  return {kExitOk,
          {{"min_beta", b}, {"k", c.norm.k}, {"lip", c.gate_lip()}, {"z_k", burkholder_constant(c.norm.k)}}};
}

RunOutcome run_simulate(const ExperimentConfig& c, const RunOptions& opts) {
  const GridSpec& g = c.require_grid();
  auto res = picard_solve(c.model, c.sigma, c.mu, g, c.norm, c.seed, c.replicas, c.tol, c.max_iter,
                          solver_options(c, opts));
  json r = {{"picard", res.report.to_json()},
            {"norm", norm_estimate(res.ensemble, c.norm).to_json()},
            {"provenance", res.ensemble.provenance.to_json()}};
  if (auto p = artifact(opts, "simulate.csv")) write_ensemble_csv(*p, res.ensemble, c.stride_t, c.stride_x);
  return {kExitOk, r};
}

std::vector<Probe> default_probes(const GridSpec& g) {
  return {{g.n_t - 1, g.center()}, {g.n_t / 2, g.center() + g.n_x / 8}, {g.n_t - 1, g.n_x / 4}};
}

RunOutcome run_verify(const ExperimentConfig& c, const RunOptions& opts) {
  const GridSpec& g = c.require_grid();
  const auto kernel = heat_kernel(c.model, g);
  const auto so = solver_options(c, opts);
  CheckReport rep;
  if (c.check == "young") {
    const auto ups = upsilon(c.model, c.norm.beta);
    if (ups.diverges) throw ParameterError("young: Upsilon(beta) diverges for this model");
    rep = young_check(kernel, ups.value, FieldEnsemble(g, 1, 1.0), c.norm, c.seed, c.replicas, so);
  } else if (c.check == "lipschitz") {
    // Two stochastic convolutions of Z = 1 from distinct streams, paired by replica.
    const FieldEnsemble ones(g, 1, 1.0);
    const auto z = convolve_ensemble(kernel, ones, c.seed, c.replicas, so);
    const auto z_star = convolve_ensemble(kernel, ones, c.seed ^ 0x9e3779b97f4a7c15ULL, c.replicas, so);
    rep = lipschitz_composition_check(z, z_star, c.sigma, c.norm);
  } else if (c.check == "orthogonality") {
    auto res = picard_solve(c.model, c.sigma, c.mu, g, c.norm, c.seed, c.replicas, c.tol, c.max_iter, so);
    rep = orthogonality_check(res.ensemble, res.deterministic, c.norm.beta, c.norm.eta, c.norm.horizon(g));
    rep.details["picard"] = res.report.to_json();
  } else if (c.check == "isometry") {
    const std::vector<double> ones(g.cells(), 1.0);
    rep = isometry_check(kernel, ones, g, c.probes.empty() ? default_probes(g) : c.probes, c.seed, c.replicas, so);
  } else {
    throw ConfigError("check: expected young, lipschitz, orthogonality or isometry, got \"" + c.check + "\"");
  }
  json r = rep.to_json();
  r["check"] = c.check;
  return {verdict(rep.pass), r};
}

RunOutcome run_anderson(const ExperimentConfig& c, const RunOptions& opts) {
  const GridSpec& g = c.require_grid();
  if (c.sigma.kind() != SigmaSpec::Kind::linear) throw ConfigError("sigma: anderson requires a linear sigma");
  const double lambda = c.sigma.lip();
  const double beta = c.norm.beta;
  const auto gate = existence_gate(c.model, GateParams{c.norm.k, beta, lambda, std::nullopt});
  if (!gate.pass) throw GateRefusal(gate);
  const double ups = gate.upsilon.value;
  if (!(lambda * lambda * ups < 1.0)) throw ParameterError("anderson: lambda^2 Upsilon(beta) >= 1, no finite fixed point");
  const double target = ups / (1.0 - lambda * lambda * ups);
  const double horizon = c.norm.horizon(g);

  const auto det = deterministic_part(c.model, c.mu, g);
  MarchOptions mo;
  mo.beta = beta;
  mo.eta = c.norm.eta;
  mo.horizon = horizon;
  mo.stride_t = c.stride_t;
  mo.stride_x = c.stride_x;
  mo.workers = opts.workers;
  const auto mc = march_solve(c.model, c.sigma, det, g, c.seed, c.replicas, mo);
  const auto volterra = second_moment_volterra(c.model, lambda, c.mu, g);

  const double q_det = m_norm_term(det, g, beta, c.norm.eta, horizon);
  double max_row = 0.0;
  for (std::size_t j = 0; j < g.n_t; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.n_x; ++i) acc += c.norm.eta.density(g.x(i)) * g.dx * volterra[j * g.n_x + i];
    max_row = std::max(max_row, acc);
  }
  const auto m_mc = m_norm_from_terms(mc.q_solution, g, beta, horizon, max_row);
  const double m_volterra = m_norm_squared_of_moments(volterra, g, beta, c.norm.eta, horizon);
  const auto ortho = orthogonality_from_terms(mc.q_solution, mc.q_noise, q_det);

  const double rel_mc = std::abs(m_mc.squared - target) / target;
  const double rel_volterra = std::abs(m_volterra - target) / target;
  const double combined_se = m_mc.squared_std_error;  // the Volterra oracle is deterministic
  const bool agree = std::abs(m_mc.squared - m_volterra) <= 3.0 * combined_se;
  const bool pass = rel_mc <= 0.07 && rel_volterra <= 0.07 && agree && ortho.pass;

  json r = {{"pass", pass},
            {"gate", gate.to_json()},
            {"lambda", lambda},
            {"beta", beta},
            {"upsilon", ups},
            {"fixed_point", target},
            {"monte_carlo", m_mc.to_json()},
            {"monte_carlo_relative_error", rel_mc},
            {"volterra_m_squared", m_volterra},
            {"volterra_relative_error", rel_volterra},
            {"relative_tolerance", 0.07},
            {"difference", m_mc.squared - m_volterra},
            {"combined_std_error", combined_se},
            {"estimators_agree", agree},
            {"discrete_upsilon", q_det},
            {"discrete_fixed_point", q_det < 1.0 / (lambda * lambda) ? q_det / (1.0 - lambda * lambda * q_det)
                                                                     : std::numeric_limits<double>::infinity()},
            {"orthogonality", ortho.to_json()},
            {"domain_leakage", domain_leakage(c.model, c.mu, g)},
            {"time_horizon", horizon},
            {"stencil_half_width", mc.stencil_half_width},
            {"replicas", mc.replicas}};
  if (!std::isfinite(r["discrete_fixed_point"].get<double>())) r["discrete_fixed_point"] = nullptr;

  if (auto p = artifact(opts, "anderson.csv")) {
    CsvWriter csv(*p, "j,i,t,x,deterministic,mean,second_moment,volterra");
    for (std::size_t a = 0; a < mc.rows; ++a) {
      const std::size_t j = a * mc.stride_t;
      for (std::size_t b = 0; b < mc.cols; ++b) {
        const std::size_t i = b * mc.stride_x;
        const std::size_t k = a * mc.cols + b;
        csv.row({j, i}, {g.t(j), g.x(i), det[j * g.n_x + i], mc.mean[k], mc.second[k], volterra[j * g.n_x + i]});
      }
    }
    csv.close();
  }
  return {verdict(pass), r};
}

RunOutcome run_wave(const ExperimentConfig& c, const RunOptions& opts) {
  const GridSpec& g = c.require_grid();
  auto res = wave_picard_solve(c.sigma, c.mu, c.nu, c.kappa, g, c.norm, c.seed, c.replicas, c.tol, c.max_iter,
                               solver_options(c, opts));
  json r = {{"picard", res.report.to_json()}, {"kappa", c.kappa}};
  if (c.sigma.value_at_zero() == 0.0) {
    const auto v = light_cone_violations(res.ensemble, c.mu, c.nu, c.kappa, g.dx);
    r["finite_speed"] = {{"applicable", true}, {"violations", v}, {"pass", v == 0}};
  } else {
    r["finite_speed"] = {{"applicable", false}, {"reason", "sigma(0) != 0 drives noise everywhere"}};
  }
  if (auto p = artifact(opts, "wave.csv")) write_ensemble_csv(*p, res.ensemble, c.stride_t, c.stride_x);
  const bool pass = !r["finite_speed"]["applicable"].get<bool>() || r["finite_speed"]["pass"].get<bool>();
  r["pass"] = pass;
  return {verdict(pass), r};
}

}  // namespace

bool known_subcommand(const std::string& name) { return kSubcommands.contains(name); }

nlohmann::json anderson_defaults() {
  return {{"model", {{"family", "gaussian"}, {"kappa", 1.0}}},
          {"sigma", {{"kind", "linear"}, {"lambda", 1.0}}},
          {"mu", {{"atoms", {{0.0, 1.0}}}, {"density", nullptr}}},
          {"grid", {{"T", 4.0}, {"dt", 1.0 / 2048.0}, {"L", 8.0}, {"dx", 1.0 / 32.0}}},
          {"norm", {{"k", 2.0}, {"beta", 2.0}, {"eta", {{"kind", "lebesgue"}}}}},
          {"seed", 20240601},
          {"replicas", 10000},
          {"output", {{"stride_t", 64}, {"stride_x", 4}}}};
}

ExperimentConfig resolve_config(const std::string& subcommand, const nlohmann::json& raw) {
  if (!known_subcommand(subcommand)) throw ConfigError("subcommand: unknown \"" + subcommand + "\"");
  if (!raw.is_object()) throw ConfigError("config: expected a JSON object");
  json merged = raw;
  if (subcommand == "anderson") {
    merged = anderson_defaults();
    merged.merge_patch(raw);
  } else if (raw.empty()) {
    throw ConfigError("config: empty; " + subcommand + " needs at least a model");
  }
  auto c = ExperimentConfig::from_json(merged);
  const bool needs_grid = subcommand == "simulate" || subcommand == "verify" || subcommand == "wave";
  if (needs_grid) c.require_grid();
  if ((subcommand == "upsilon" || subcommand == "gate" || subcommand == "minbeta") && !raw.contains("model")) {
    throw ConfigError("model: missing");
  }
  if (subcommand == "verify" && !raw.contains("check")) throw ConfigError("check: missing");
  c.norm.validate();
  return c;
}

RunOutcome execute(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& opts) {
  if (opts.out_dir) fs::create_directories(*opts.out_dir);
  if (auto p = artifact(opts, subcommand + ".config.json")) write_json(*p, config.to_json());
  RunOutcome out;
  if (subcommand == "upsilon") {
    out = run_upsilon(config);
  } else if (subcommand == "gate") {
    out = run_gate(config);
  } else if (subcommand == "minbeta") {
    out = run_minbeta(config);
  } else if (subcommand == "simulate") {
    out = run_simulate(config, opts);
  } else if (subcommand == "verify") {
    out = run_verify(config, opts);
  } else if (subcommand == "anderson") {
    out = run_anderson(config, opts);
  } else if (subcommand == "wave") {
    out = run_wave(config, opts);
  } else {
    throw ConfigError("subcommand: unknown \"" + subcommand + "\"");
  }
  out.report["subcommand"] = subcommand;
  out.report["status"] = out.status;
  if (auto p = artifact(opts, subcommand + ".report.json")) write_json(*p, out.report);
  return out;
}

int run(const std::string& subcommand, const ExperimentConfig& config, const RunOptions& opts, std::ostream& out,
        std::ostream& err) {
  try {
    const auto outcome = execute(subcommand, config, opts);
    out << outcome.report.dump(2) << '\n';
    return outcome.status;
  } catch (const GateRefusal& e) {
    json r = {{"subcommand", subcommand}, {"status", kExitGateRefused}, {"gate", e.report().to_json()}};
    if (auto p = artifact(opts, subcommand + ".report.json")) write_json(*p, r);
    out << r.dump(2) << '\n';
    err << "spde: " << e.what() << '\n';
    return kExitGateRefused;
  } catch (const std::exception& e) {
    err << "spde: " << e.what() << '\n';
    return kExitOperational;
  }
}

}  // namespace spde
