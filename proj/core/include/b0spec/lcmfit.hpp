#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "b0spec/spectrum.hpp"

namespace b0spec::lcm {

struct LcmParams {
    double shift_lo = -10.0;  ///< Hz
    double shift_hi = 10.0;
    double sigma_lo = 0.0;  ///< Gaussian broadening, Hz
    double sigma_hi = 12.0;
    double grid_step = 1.0;
    int baseline_degree = 4;
    bool refine = true;

    /// Throws ConfigError for inverted bounds, a negative sigma, a
    /// non-positive step or degree outside [0, 8].
    void validate() const;
    nlohmann::json to_json() const;
};

struct LcmFitResult {
    Amplitudes amplitudes{};
    double shift_hz = 0.0;
    double sigma_hz = 0.0;
    std::vector<double> baseline_coeffs;  ///< Legendre coefficients over the axis mapped to [−1, 1]
    double residual_mse = 0.0;
    double coarse_residual_mse = 0.0;  ///< best value seen on the coarse grid

    nlohmann::json to_json() const;
};

/// Basis spectra (columns) with a global shift and Gaussian broadening.
/// sigma == 0 is the analytic Lorentzian synthesis; otherwise the Lorentzians
/// are convolved with the Gaussian on a 4× oversampled, margin-extended grid.
Eigen::MatrixXd broadened_basis(const BasisSet& basis, double shift_hz, double sigma_hz);

/// Legendre polynomials P_0..P_degree sampled on the axis mapped to [−1, 1].
Eigen::MatrixXd legendre_design(std::size_t n_points, int degree);

struct InnerFit {
    Amplitudes amplitudes{};
    std::vector<double> baseline_coeffs;
    double residual_mse = 0.0;
};

/// Amplitudes by NNLS after projecting out the polynomial subspace, then the
/// baseline by least squares on the remainder.
InnerFit fit_fixed(const Spectrum& s, const BasisSet& basis, double shift_hz, double sigma_hz, int degree);

/// Grid search over (shift, sigma) with golden-section refinement per axis.
/// Ties go to the lowest shift, then the lowest sigma.
LcmFitResult lcm_fit(const Spectrum& s, const BasisSet& basis, const LcmParams& params = {});

/// Amplitudes over the tCr aggregate. Throws ZeroReferenceError if it is zero.
MetaboliteRatios lcm_ratios(const LcmFitResult& r);

}  // namespace b0spec::lcm
