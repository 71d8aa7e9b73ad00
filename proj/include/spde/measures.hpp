#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "spde/grid.hpp"
#include "spde/levy.hpp"

namespace spde {

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

/// Compactly supported density. Either a uniform piecewise-linear table
/// (zero outside the tabulated range) or an analytic function restricted to
/// a support interval.
class Density {
 public:
  static Density tabulated(double x0, double dx, std::vector<double> values);
  static Density analytic(std::function<double(double)> f, double lower, double upper);

  double operator()(double x) const;
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  bool is_tabulated() const { return std::holds_alternative<Table>(repr_); }

  /// int_a^b rho(y) dy.
  double integral(double a, double b) const;
  /// int |rho|.
  double abs_integral() const;
  /// sup |rho|.
  double sup_abs() const;
  /// int e^{i xi x} rho(x) dx.
  std::complex<double> fourier(double xi) const;
  /// Points where rho may have kinks (table nodes or support ends).
  std::vector<double> kinks() const;
  /// Total variation of rho as a function on R, jumps at the support ends
  /// included. Bounds |rho_hat(xi)| by variation() / |xi|.
  double variation() const;

  nlohmann::json to_json() const;

 private:
  struct Table {
    double x0;
    double dx;
    std::vector<double> values;
    std::vector<double> cumulative;  ///< int_{x0}^{x_k} rho
  };
  struct Analytic {
    std::function<double(double)> f;
  };

  Density(std::variant<Table, Analytic> repr, double lower, double upper)
      : repr_(std::move(repr)), lower_(lower), upper_(upper) {}

  std::variant<Table, Analytic> repr_;
  double lower_;
  double upper_;
};

/// Signed Borel initial datum: finitely many atoms plus an optional density.
/// The zero measure is rejected at construction.
class SignedMeasure {
 public:
  SignedMeasure(std::vector<Atom> atoms, std::optional<Density> density = std::nullopt);

  static SignedMeasure dirac(double location = 0.0, double weight = 1.0) {
    return SignedMeasure({{location, weight}});
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::optional<Density>& density() const { return density_; }
  bool has_atoms() const { return !atoms_.empty(); }

  /// |mu|(R).
  double total_variation() const;
  /// mu(R) = mu_hat(0).
  double total_mass() const;
  /// Density part at x (atoms are not functions and contribute nothing).
  double density_at(double x) const;
  /// mu([a, b]), closed interval.
  double window_mass(double a, double b) const;

  nlohmann::json to_json() const;
  static SignedMeasure from_json(const nlohmann::json& j);

 private:
  std::vector<Atom> atoms_;
  std::optional<Density> density_;
};

std::complex<double> fourier_transform(const SignedMeasure& mu, double xi);

/// Weight measure eta for the norms: Lebesgue, e^{-|x|/m} dx, or a finite
/// nonnegative tabulated density.
class WeightMeasure {
 public:
  enum class Kind { lebesgue, exponential, tabulated };

  static WeightMeasure lebesgue() { return WeightMeasure(Kind::lebesgue, 0.0, std::nullopt); }
  static WeightMeasure exponential(double m);
  static WeightMeasure tabulated(Density density);

  Kind kind() const { return kind_; }
  double m() const { return m_; }
  double density(double x) const;
  /// eta(R); infinite for Lebesgue.
  double mass() const;
  bool finite() const { return kind_ != Kind::lebesgue; }
  double sup_density() const;
  /// The table behind the tabulated kind.
  const std::optional<Density>& table() const { return table_; }

  nlohmann::json to_json() const;
  static WeightMeasure from_json(const nlohmann::json& j);

 private:
  WeightMeasure(Kind kind, double m, std::optional<Density> table)
      : kind_(kind), m_(m), table_(std::move(table)) {}

  Kind kind_;
  double m_;
  std::optional<Density> table_;
};

struct AdmissibilityValue {
  bool diverges = false;
  double value = 0.0;
  double abs_error = 0.0;
};

/// int |mu_hat(xi)|^2 / (beta + 2 Psi(xi)) dxi over R. Divergence is
/// decided analytically: atoms together with a failing Dalang condition.
AdmissibilityValue admissibility_lebesgue(const SignedMeasure& mu, const LevyModel& model,
                                          double beta);

struct GeneralAdmissibility {
  double value = 0.0;
  double abs_error = 0.0;  ///< spread between two s-mesh resolutions
  double shift_extent = 0.0;
  double shift_spacing = 0.0;
  std::size_t shift_count = 0;
  bool lower_bound = true;  ///< the supremum is taken over a finite lattice

  nlohmann::json to_json() const;
};

/// int_0^inf e^{-beta s} ds sup_z int eta(dx) |(P_s mu)(x - z)|^2 with the
/// supremum over the shift lattice [-L/2, L/2] step dx of `grid`.
GeneralAdmissibility admissibility_general(const SignedMeasure& mu, const WeightMeasure& eta,
                                           const LevyModel& model, double beta,
                                           const GridSpec& grid);

}  // namespace spde
