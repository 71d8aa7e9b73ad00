#include "spde/norms.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "spde/errors.hpp"

namespace spde {

namespace {

std::size_t covered_rows(const GridSpec& grid, double horizon) {
  const auto rows = static_cast<std::size_t>(std::ceil(horizon / grid.dt - 1e-9));
  return std::min(grid.n_t, rows);
}

std::vector<double> eta_weights(const GridSpec& grid, const WeightMeasure& eta) {
  std::vector<double> w(grid.n_x);
  for (std::size_t i = 0; i < grid.n_x; ++i) w[i] = eta.density(grid.x(i)) * grid.dx;
  return w;
}

// Sum over j of e^{-beta t_j} dt * row(j); also reports the largest row value.
struct TimeSum {
  double total = 0.0;
  double max_row = 0.0;
};

template <class Row>
TimeSum time_sum(const GridSpec& grid, double beta, std::size_t rows, Row&& row) {
  TimeSum s;
  for (std::size_t j = 0; j < rows; ++j) {
    const double r = row(j);
    s.total += std::exp(-beta * grid.t(j)) * grid.dt * r;
    s.max_row = std::max(s.max_row, r);
  }
  return s;
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

void NormParams::validate() const {
  if (!(k >= 2.0)) throw ParameterError("norm: k must be >= 2");
  if (!(beta > 0.0)) throw ParameterError("norm: beta must be > 0");
  if (time_horizon && !(*time_horizon > 0.0)) throw ParameterError("norm: time horizon must be > 0");
}

double NormParams::horizon(const GridSpec& grid) const {
  return time_horizon.value_or(std::max(grid.T, 8.0 / beta));
}

nlohmann::json NormParams::to_json() const {
  nlohmann::json j = {{"k", k},
                      {"beta", beta},
                      {"eta", eta.to_json()},
                      {"bootstrap_resamples", bootstrap_resamples},
                      {"bootstrap_seed", bootstrap_seed}};
  j["shift_cells"] = shift_cells ? nlohmann::json(*shift_cells) : nlohmann::json(nullptr);
  j["time_horizon"] = time_horizon ? nlohmann::json(*time_horizon) : nlohmann::json(nullptr);
  return j;
}

NormParams NormParams::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("norm: expected an object");
  NormParams p;
  auto number = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError(std::string("norm.") + key + ": not a number");
    return j.at(key).get<double>();
  };
  p.k = number("k", p.k);
  if (!j.contains("beta")) throw ConfigError("norm.beta: missing");
  p.beta = number("beta", p.beta);
  if (j.contains("eta")) p.eta = WeightMeasure::from_json(j.at("eta"));
  if (j.contains("shift_cells") && !j.at("shift_cells").is_null()) {
    if (!j.at("shift_cells").is_number_unsigned()) throw ConfigError("norm.shift_cells: expected a count");
    p.shift_cells = j.at("shift_cells").get<std::size_t>();
  }
  if (j.contains("time_horizon") && !j.at("time_horizon").is_null()) p.time_horizon = number("time_horizon", 0.0);
  if (j.contains("bootstrap_resamples")) {
    if (!j.at("bootstrap_resamples").is_number_unsigned()) {
      throw ConfigError("norm.bootstrap_resamples: expected a count");
    }
    p.bootstrap_resamples = j.at("bootstrap_resamples").get<std::size_t>();
  }
  if (j.contains("bootstrap_seed")) {
    if (!j.at("bootstrap_seed").is_number_unsigned()) throw ConfigError("norm.bootstrap_seed: expected an integer");
    p.bootstrap_seed = j.at("bootstrap_seed").get<std::uint64_t>();
  }
  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

nlohmann::json NormEstimate::to_json() const {
  return {{"value", value},         {"std_error", std_error}, {"squared", squared},
          {"squared_std_error", squared_std_error},         {"tail_bound", tail_bound},
          {"horizon", horizon},     {"shift_extent", shift_extent}, {"replicas", replicas}};
}

std::vector<double> moment_field(const FieldEnsemble& ens, double k) {
  if (ens.replicas() == 0) throw InvalidEnsembleError("empty ensemble");
  const std::size_t cells = ens.cells();
  std::vector<double> m(cells, 0.0);
  for (std::size_t r = 0; r < ens.replicas(); ++r) {
    const auto u = ens.replica(r);
    if (k == 2.0) {
      for (std::size_t c = 0; c < cells; ++c) m[c] += u[c] * u[c];
    } else {
      for (std::size_t c = 0; c < cells; ++c) m[c] += std::pow(std::abs(u[c]), k);
    }
  }
  const double inv = 1.0 / static_cast<double>(ens.replicas());
  for (std::size_t c = 0; c < cells; ++c) {
    m[c] *= inv;
    if (!std::isfinite(m[c])) {
      throw InvalidEnsembleError("k-th moment estimate is not finite at cell " + std::to_string(c));
    }
  }
  return m;
}

double norm_squared_from_moments(std::span<const double> moments, const GridSpec& grid, const NormParams& p) {
  const auto w = eta_weights(grid, p.eta);
  const auto s = static_cast<std::ptrdiff_t>(p.shifts(grid));
  const auto n = static_cast<std::ptrdiff_t>(grid.n_x);
  const std::size_t rows = covered_rows(grid, p.horizon(grid));
  std::vector<double> norm_k(grid.n_x);
  return time_sum(grid, p.beta, rows, [&](std::size_t j) {
           const double* m = moments.data() + j * grid.n_x;
           for (std::size_t i = 0; i < grid.n_x; ++i) norm_k[i] = p.k == 2.0 ? m[i] : std::pow(m[i], 2.0 / p.k);
           double best = 0.0;
           // Row value at shift z: sum_i eta(x_i) dx ||u(x_i - z)||_k^2; outside the window u = 0.
           for (std::ptrdiff_t z = -s; z <= s; ++z) {
             double acc = 0.0;
             const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, z);
             const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n, n + z);
             for (std::ptrdiff_t i = lo; i < hi; ++i) acc += w[static_cast<std::size_t>(i)] * norm_k[static_cast<std::size_t>(i - z)];
             best = std::max(best, acc);
           }
           return best;
         }).total;
}

NormEstimate norm_estimate(const FieldEnsemble& ens, const NormParams& p) {
  p.validate();
  const GridSpec& grid = ens.grid();
  const auto moments = moment_field(ens, p.k);
  NormEstimate est;
  est.replicas = ens.replicas();
  est.squared = norm_squared_from_moments(moments, grid, p);
  est.value = std::sqrt(est.squared);
  const std::size_t rows = covered_rows(grid, p.horizon(grid));
  est.horizon = static_cast<double>(rows) * grid.dt;
  est.shift_extent = static_cast<double>(p.shifts(grid)) * grid.dx;

  // Tail: each omitted row is bounded by the largest computed row value.
  const auto w = eta_weights(grid, p.eta);
  double max_row = 0.0;
  for (std::size_t j = 0; j < rows; ++j) {
    double acc = 0.0;
    double wsum = 0.0;
    double mmax = 0.0;
    for (std::size_t i = 0; i < grid.n_x; ++i) {
      const double nk = std::pow(moments[j * grid.n_x + i], 2.0 / p.k);
      acc += w[i] * nk;
      wsum += w[i];
      mmax = std::max(mmax, nk);
    }
    // With shifts the row value is at most sup ||u||^2 times the window mass.
    max_row = std::max(max_row, std::max(acc, mmax * wsum));
  }
  est.tail_bound = std::exp(-p.beta * est.horizon) / p.beta * max_row;

  const std::size_t R = ens.replicas();
  if (p.bootstrap_resamples > 0 && R > 1) {
    std::mt19937_64 gen(p.bootstrap_seed);
    std::uniform_int_distribution<std::size_t> pick(0, R - 1);
    std::vector<double> powered(ens.values().size());
    const auto all = ens.values();
    for (std::size_t c = 0; c < powered.size(); ++c) {
      powered[c] = p.k == 2.0 ? all[c] * all[c] : std::pow(std::abs(all[c]), p.k);
    }
    std::vector<double> draws;
    draws.reserve(p.bootstrap_resamples);
    std::vector<std::size_t> count(R);
    std::vector<double> m(ens.cells());
    for (std::size_t b = 0; b < p.bootstrap_resamples; ++b) {
      std::fill(count.begin(), count.end(), 0);
      for (std::size_t r = 0; r < R; ++r) ++count[pick(gen)];
      std::fill(m.begin(), m.end(), 0.0);
      for (std::size_t r = 0; r < R; ++r) {
        if (count[r] == 0) continue;
        const double c = static_cast<double>(count[r]);
        const double* src = powered.data() + r * ens.cells();
        for (std::size_t k = 0; k < m.size(); ++k) m[k] += c * src[k];
      }
      for (double& v : m) v /= static_cast<double>(R);
      draws.push_back(norm_squared_from_moments(m, grid, p));
    }
    est.squared_std_error = sample_sd(draws);
    for (double& d : draws) d = std::sqrt(d);
    est.std_error = sample_sd(draws);
  }
  return est;
}

double m_norm_term(std::span<const double> field, const GridSpec& grid, double beta, const WeightMeasure& eta,
                   double horizon) {
  const auto w = eta_weights(grid, eta);
  const std::size_t rows = covered_rows(grid, horizon);
  return time_sum(grid, beta, rows, [&](std::size_t j) {
           const double* u = field.data() + j * grid.n_x;
           double acc = 0.0;
           for (std::size_t i = 0; i < grid.n_x; ++i) acc += w[i] * (u[i] * u[i]);
           return acc;
         }).total;
}

double m_norm_squared_of_moments(std::span<const double> second_moment, const GridSpec& grid, double beta,
                                 const WeightMeasure& eta, double horizon) {
  if (second_moment.size() != grid.cells()) throw ContractError("second-moment field and grid differ");
  const auto w = eta_weights(grid, eta);
  return time_sum(grid, beta, covered_rows(grid, horizon), [&](std::size_t j) {
           const double* f = second_moment.data() + j * grid.n_x;
           double acc = 0.0;
           for (std::size_t i = 0; i < grid.n_x; ++i) acc += w[i] * f[i];
           return acc;
         }).total;
}

NormEstimate m_norm_from_terms(std::span<const double> terms, const GridSpec& grid, double beta, double horizon,
                               double max_row_sum) {
  if (terms.empty()) throw InvalidEnsembleError("empty ensemble");
  NormEstimate est;
  est.replicas = terms.size();
  double mean = 0.0;
  for (double q : terms) mean += q;
  mean /= static_cast<double>(terms.size());
  if (!std::isfinite(mean)) throw InvalidEnsembleError("second-moment estimate is not finite");
  est.squared = mean;
  est.squared_std_error = sample_sd(terms) / std::sqrt(static_cast<double>(terms.size()));
  est.value = std::sqrt(mean);
  est.std_error = mean > 0.0 ? est.squared_std_error / (2.0 * est.value) : 0.0;
  est.horizon = static_cast<double>(covered_rows(grid, horizon)) * grid.dt;
  est.tail_bound = std::exp(-beta * est.horizon) / beta * max_row_sum;
  return est;
}

NormEstimate m_norm_estimate(const FieldEnsemble& ens, double beta, const WeightMeasure& eta,
                             std::optional<double> horizon) {
  if (!(beta > 0.0)) throw ParameterError("norm: beta must be > 0");
  ens.validate();
  const GridSpec& grid = ens.grid();
  const double h = horizon.value_or(std::max(grid.T, 8.0 / beta));
  std::vector<double> terms(ens.replicas());
  for (std::size_t r = 0; r < ens.replicas(); ++r) terms[r] = m_norm_term(ens.replica(r), grid, beta, eta, h);
  // Largest row of the mean second-moment field, for the tail bound.
  const auto m2 = moment_field(ens, 2.0);
  const auto w = eta_weights(grid, eta);
  double max_row = 0.0;
  for (std::size_t j = 0; j < grid.n_t; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.n_x; ++i) acc += w[i] * m2[j * grid.n_x + i];
    max_row = std::max(max_row, acc);
  }
  return m_norm_from_terms(terms, grid, beta, h, max_row);
}

}  // namespace spde
