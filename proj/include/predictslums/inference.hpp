#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "predictslums/grid.hpp"

namespace psl {

struct TTestResult {
    double mean_a = 0.0, mean_b = 0.0;
    double sd_a = 0.0, sd_b = 0.0;
    double se_a = 0.0, se_b = 0.0;
    std::size_t n_a = 0, n_b = 0;
    double t = 0.0;
    double df = 0.0;  // Welch-Satterthwaite
    double se_diff = 0.0;
    double ci_low = 0.0, ci_high = 0.0;  // 95% CI of mean_a - mean_b
    double p_value = 1.0;                // two-tailed
};

/// Welch unequal-variance two-sample t-test.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Same test from summary moments (sample sd, n-1 denominator).
TTestResult welch_t_test(double mean_a, double sd_a, std::size_t n_a, double mean_b, double sd_b, std::size_t n_b);

// ---------------------------------------------------------------------------
// Multinomial logit of hot-spot category on (NNeighbors, Formal dummy).
// NotSignificant is the reference category; its utility is fixed at 0.

struct MnlSample {
    Category category = Category::NotSignificant;
    double nneighbors = 0.0;
    int formal = 0;  // 1 formal, 0 informal
};

/// Coefficient rows for the two free categories, each (intercept, b_nneighbors, b_formal).
enum MnlRow : std::size_t { kMnlCold = 0, kMnlHot = 1 };
using MnlCoefficients = std::array<std::array<double, 3>, 2>;

struct MnlModel {
    MnlCoefficients coefficients{};
    MnlCoefficients std_errors{};  // Wald, from the inverse observed information
    double log_likelihood = 0.0;
    double null_log_likelihood = 0.0;
    std::size_t iterations_used = 0;
    std::size_t n = 0;
};

inline constexpr std::size_t kDefaultMnlMaxIter = 100;
inline constexpr double kDefaultMnlTol = 1e-8;
inline constexpr double kSeparationMagnitude = 30.0;

/// Probabilities in Category order (Hot, NotSignificant, Cold).
std::array<double, 3> mnl_predict(const MnlCoefficients& b, double nneighbors, int formal);
inline std::array<double, 3> mnl_predict(const MnlModel& m, double nneighbors, int formal) {
    return mnl_predict(m.coefficients, nneighbors, formal);
}

/// Log-likelihood, score and observed information of the sample at b. The
/// flattened parameter order is (cold: int, nn, formal, hot: int, nn, formal).
double mnl_log_likelihood(const MnlCoefficients& b, std::span<const MnlSample> samples);
std::array<double, 6> mnl_score(const MnlCoefficients& b, std::span<const MnlSample> samples);

/// Newton-Raphson with step halving. Throws Numerical on a singular
/// information matrix (collinear predictors) or on separation.
MnlModel fit_mnl(std::span<const MnlSample> samples, std::size_t max_iter = kDefaultMnlMaxIter,
                 double tol = kDefaultMnlTol);

struct MnlDiagnostics {
    double log_likelihood = 0.0;
    double null_log_likelihood = 0.0;
    double pseudo_r2 = 0.0;  // McFadden
    double lr_chi2 = 0.0;
    std::size_t lr_df = 4;
    double lr_p = 1.0;
    std::array<std::array<std::size_t, 3>, 3> confusion{};  // [observed][predicted], Category order
    double accuracy = 0.0;
};

MnlDiagnostics mnl_diagnostics(const MnlCoefficients& b, std::span<const MnlSample> samples);
inline MnlDiagnostics mnl_diagnostics(const MnlModel& m, std::span<const MnlSample> samples) {
    return mnl_diagnostics(m.coefficients, samples);
}

/// Labelled, categorised cells as MNL samples (unlabelled cells skipped).
std::vector<MnlSample> mnl_samples_from_grid(const GridLattice& grid);

/// Splits labelled cells by formality for the t-tests: nneighbors or gi_z values.
enum class TTestVariable { NNeighbors, GiZ };
TTestResult formal_vs_informal_t_test(const GridLattice& grid, TTestVariable var);

}  // namespace psl
