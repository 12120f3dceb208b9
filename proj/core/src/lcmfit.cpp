#include "b0spec/lcmfit.hpp"

#include <cmath>
#include <limits>

#include "b0spec/errors.hpp"
#include "b0spec/lineshape.hpp"
#include "b0spec/nnls.hpp"
#include "b0spec/parallel.hpp"

namespace b0spec::lcm {

namespace {

constexpr int kOversample = 4;
constexpr double kKernelHalfWidthSigmas = 5.0;

struct Candidate {
    double shift = 0.0;
    double sigma = 0.0;
    InnerFit fit;
};

// Strictly better, with ties broken towards lower shift, then lower sigma.
bool better(const Candidate& a, const Candidate& b) {
    if (a.fit.residual_mse != b.fit.residual_mse) return a.fit.residual_mse < b.fit.residual_mse;
    if (a.shift != b.shift) return a.shift < b.shift;
    return a.sigma < b.sigma;
}

}  // namespace

void LcmParams::validate() const {
    if (!(shift_lo <= shift_hi)) throw ConfigError("shift bounds are inverted");
    if (!(sigma_lo >= 0.0 && sigma_lo <= sigma_hi)) throw ConfigError("sigma bounds must satisfy 0 ≤ lo ≤ hi");
    if (!(grid_step > 0.0)) throw ConfigError("grid step must be positive");
    if (baseline_degree < 0 || baseline_degree > 8) throw ConfigError("baseline degree must be in [0, 8]");
}

nlohmann::json LcmParams::to_json() const {
    return {{"shift_hz", {shift_lo, shift_hi}}, {"sigma_hz", {sigma_lo, sigma_hi}}, {"grid_step", grid_step},
            {"baseline_degree", baseline_degree}, {"refine", refine}};
}

nlohmann::json LcmFitResult::to_json() const {
    nlohmann::json amps = nlohmann::json::object();
    for (std::size_t i = 0; i < kNumMetabolites; ++i) amps[std::string(metabolite_name(i))] = amplitudes[i];
    return {{"amplitudes", amps},
            {"shift_hz", shift_hz},
            {"sigma_hz", sigma_hz},
            {"baseline_coeffs", baseline_coeffs},
            {"residual_mse", residual_mse},
            {"coarse_residual_mse", coarse_residual_mse}};
}

Eigen::MatrixXd broadened_basis(const BasisSet& basis, double shift_hz, double sigma_hz) {
    if (!(sigma_hz >= 0.0)) throw InputError("broadening sigma must be non-negative");
    const SpectralAxis& axis = basis.axis();
    const auto n = static_cast<Eigen::Index>(axis.n_points);
    Eigen::MatrixXd A(n, static_cast<Eigen::Index>(basis.size()));
    if (sigma_hz == 0.0) {
        for (std::size_t j = 0; j < basis.size(); ++j) {
            std::span<double> col(A.col(static_cast<Eigen::Index>(j)).data(), axis.n_points);
            std::fill(col.begin(), col.end(), 0.0);
            accumulate_lorentzian(basis[j].peaks, shift_hz, axis, col);
        }
        return A;
    }
    const double h_ppm = axis.step_ppm() / kOversample;
    const double h_hz = axis.step_hz() / kOversample;
    const std::size_t half = static_cast<std::size_t>(std::ceil(kKernelHalfWidthSigmas * sigma_hz / h_hz));
    std::vector<double> kernel(2 * half + 1);
    double ksum = 0.0;
    for (std::size_t k = 0; k < kernel.size(); ++k) {
        const double d = (static_cast<double>(k) - static_cast<double>(half)) * h_hz / sigma_hz;
        kernel[k] = std::exp(-0.5 * d * d);
        ksum += kernel[k];
    }
    for (double& k : kernel) k /= ksum;

    SpectralAxis fine = axis;
    fine.n_points = (axis.n_points - 1) * kOversample + 1 + 2 * half;
    fine.ppm_min = axis.ppm_min - static_cast<double>(half) * h_ppm;
    fine.ppm_max = axis.ppm_max + static_cast<double>(half) * h_ppm;
    std::vector<double> buf(fine.n_points);
    for (std::size_t j = 0; j < basis.size(); ++j) {
        std::fill(buf.begin(), buf.end(), 0.0);
        accumulate_lorentzian(basis[j].peaks, shift_hz, fine, buf);
        for (std::size_t i = 0; i < axis.n_points; ++i) {
            const double* src = buf.data() + i * kOversample;  // centre at i*kOversample + half
            double acc = 0.0;
            for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * src[k];
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
        }
    }
    return A;
}

Eigen::MatrixXd legendre_design(std::size_t n_points, int degree) {
    const auto n = static_cast<Eigen::Index>(n_points);
    Eigen::MatrixXd P(n, degree + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = n > 1 ? -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
        P(i, 0) = 1.0;
        if (degree >= 1) P(i, 1) = x;
        for (int k = 2; k <= degree; ++k)
            P(i, k) = ((2.0 * k - 1.0) * x * P(i, k - 1) - (k - 1.0) * P(i, k - 2)) / static_cast<double>(k);
    }
    return P;
}

InnerFit fit_fixed(const Spectrum& s, const BasisSet& basis, double shift_hz, double sigma_hz, int degree) {
    const Eigen::MatrixXd A = broadened_basis(basis, shift_hz, sigma_hz);
    const auto v = s.values();
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::MatrixXd P = legendre_design(v.size(), degree);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(P);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(P.rows(), P.cols());
    const Eigen::MatrixXd Ap = A - Q * (Q.transpose() * A);
    const Eigen::VectorXd bp = b - Q * (Q.transpose() * b);
    const NnlsResult r = nnls(Ap, bp);
    const Eigen::VectorXd rest = b - A * r.x;
    const Eigen::VectorXd c = qr.solve(rest);
    const Eigen::VectorXd resid = rest - P * c;

    InnerFit f;
    for (std::size_t j = 0; j < kNumMetabolites; ++j) f.amplitudes[j] = r.x(static_cast<Eigen::Index>(j));
    f.baseline_coeffs.assign(c.data(), c.data() + c.size());
    f.residual_mse = resid.squaredNorm() / static_cast<double>(resid.size());
    return f;
}

LcmFitResult lcm_fit(const Spectrum& s, const BasisSet& basis, const LcmParams& params) {
    params.validate();
    if (!s.all_finite()) throw InputError("spectrum contains non-finite values");
    if (s.axis() != basis.axis()) throw ShapeError("spectrum and basis use different axes");
    {
        const Eigen::MatrixXd A = broadened_basis(basis, 0.0, 0.0);
        const Eigen::MatrixXd P = legendre_design(A.rows(), params.baseline_degree);
        Eigen::MatrixXd AP(A.rows(), A.cols() + P.cols());
        AP << A, P;
        require_full_column_rank(AP, "basis plus baseline design");
    }

    std::vector<double> shifts, sigmas;
    for (double x = params.shift_lo; x <= params.shift_hi + 1e-9; x += params.grid_step) shifts.push_back(x);
    for (double x = params.sigma_lo; x <= params.sigma_hi + 1e-9; x += params.grid_step) sigmas.push_back(x);
    std::vector<Candidate> grid(shifts.size() * sigmas.size());
    parallel_for(grid.size(), [&](std::size_t k) {
        Candidate& c = grid[k];
        c.shift = shifts[k / sigmas.size()];
        c.sigma = sigmas[k % sigmas.size()];
        c.fit = fit_fixed(s, basis, c.shift, c.sigma, params.baseline_degree);
    });
    Candidate best = grid.front();
    for (const Candidate& c : grid)
        if (better(c, best)) best = c;
    const double coarse = best.fit.residual_mse;

    if (params.refine) {
        auto eval = [&](double shift, double sigma) {
            Candidate c{shift, sigma, fit_fixed(s, basis, shift, sigma, params.baseline_degree)};
            if (better(c, best)) best = c;
            return c.fit.residual_mse;
        };
        // Golden-section on each axis in turn, within one grid step of the incumbent.
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        for (int sweep = 0; sweep < 2; ++sweep) {
            for (int axis = 0; axis < 2; ++axis) {
                const double lo_b = axis == 0 ? params.shift_lo : params.sigma_lo;
                const double hi_b = axis == 0 ? params.shift_hi : params.sigma_hi;
                const double centre = axis == 0 ? best.shift : best.sigma;
                const double other = axis == 0 ? best.sigma : best.shift;
                double a = std::max(lo_b, centre - params.grid_step);
                double b = std::min(hi_b, centre + params.grid_step);
                auto f = [&](double x) { return axis == 0 ? eval(x, other) : eval(other, x); };
                double x1 = b - g * (b - a), x2 = a + g * (b - a);
                double f1 = f(x1), f2 = f(x2);
                while (b - a > 1e-3) {
                    if (f1 <= f2) {
                        b = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = b - g * (b - a);
                        f1 = f(x1);
                    } else {
                        a = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = a + g * (b - a);
                        f2 = f(x2);
                    }
                }
            }
        }
    }

    LcmFitResult r;
    r.amplitudes = best.fit.amplitudes;
    r.shift_hz = best.shift;
    r.sigma_hz = best.sigma;
    r.baseline_coeffs = best.fit.baseline_coeffs;
    r.residual_mse = best.fit.residual_mse;
    r.coarse_residual_mse = coarse;
    return r;
}

MetaboliteRatios lcm_ratios(const LcmFitResult& r) { return MetaboliteRatios::from_amplitudes(r.amplitudes); }

}  // namespace b0spec::lcm
