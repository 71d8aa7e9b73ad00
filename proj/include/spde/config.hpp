#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "spde/convolution.hpp"
#include "spde/grid.hpp"
#include "spde/levy.hpp"
#include "spde/measures.hpp"
#include "spde/norms.hpp"
#include "spde/sigma.hpp"
#include "spde/verify.hpp"

namespace spde {

/// Fully resolved experiment description. Serializes every field, defaults
/// included, so the emitted config reproduces the run.
struct ExperimentConfig {
  LevyModel model = LevyModel::gaussian(1.0);
  SigmaSpec sigma = SigmaSpec::linear(1.0);
  SignedMeasure mu = SignedMeasure::dirac();
  std::optional<SignedMeasure> nu;  ///< wave initial velocity
  double kappa = 1.0;               ///< wave speed
  std::optional<GridSpec> grid;
  NormParams norm;
  std::uint64_t seed = 1;
  std::size_t replicas = 100;
  double tol = 1e-6;
  std::size_t max_iter = 10;
  ConvolutionMethod method = ConvolutionMethod::fft;
  std::optional<double> lip;  ///< gate Lipschitz constant; default sigma's
  std::optional<double> l_sigma;
  std::string check = "young";
  std::vector<Probe> probes;  ///< isometry probes; empty means defaults
  std::size_t stride_t = 1;
  std::size_t stride_x = 1;

  double gate_lip() const { return lip.value_or(sigma.lip()); }
  /// Throws ConfigError naming the missing field when no grid was given.
  const GridSpec& require_grid() const;

  nlohmann::json to_json() const;
  /// Field-level diagnostics through ConfigError. Unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Parses inline JSON text or, failing that, reads it from a file path.
nlohmann::json load_json_argument(const std::string& text_or_path);

}  // namespace spde
