#include "predictslums/inference.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "predictslums/error.hpp"

namespace psl {

namespace {

void moments(std::span<const double> v, double& mean, double& sd) {
    double s = 0.0;
    for (double x : v) s += x;
    mean = s / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

int category_slot(Category c) {
    switch (c) {
        case Category::Cold: return kMnlCold;
        case Category::Hot: return kMnlHot;
        case Category::NotSignificant: break;
    }
    return -1;
}

// Utilities (cold, hot) relative to the reference and the softmax probabilities
// (cold, hot, reference).
struct Probs {
    double cold, hot, ref;
};

Probs probabilities(const MnlCoefficients& b, double nn, int formal) {
    const double f = formal;
    const double v_cold = b[kMnlCold][0] + b[kMnlCold][1] * nn + b[kMnlCold][2] * f;
    const double v_hot = b[kMnlHot][0] + b[kMnlHot][1] * nn + b[kMnlHot][2] * f;
    const double m = std::max({0.0, v_cold, v_hot});
    const double e_c = std::exp(v_cold - m), e_h = std::exp(v_hot - m), e_r = std::exp(-m);
    const double z = e_c + e_h + e_r;
    return {e_c / z, e_h / z, e_r / z};
}

double log_prob(const MnlCoefficients& b, const MnlSample& s) {
    const double f = s.formal;
    const double v_cold = b[kMnlCold][0] + b[kMnlCold][1] * s.nneighbors + b[kMnlCold][2] * f;
    const double v_hot = b[kMnlHot][0] + b[kMnlHot][1] * s.nneighbors + b[kMnlHot][2] * f;
    const double m = std::max({0.0, v_cold, v_hot});
    const double lse = m + std::log(std::exp(v_cold - m) + std::exp(v_hot - m) + std::exp(-m));
    switch (s.category) {
        case Category::Cold: return v_cold - lse;
        case Category::Hot: return v_hot - lse;
        case Category::NotSignificant: break;
    }
    return -lse;
}

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

MnlCoefficients unflatten(const Vec6& v) {
    MnlCoefficients b{};
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t a = 0; a < 3; ++a) b[k][a] = v(static_cast<Eigen::Index>(3 * k + a));
    return b;
}

Vec6 flatten(const MnlCoefficients& b) {
    Vec6 v;
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t a = 0; a < 3; ++a) v(static_cast<Eigen::Index>(3 * k + a)) = b[k][a];
    return v;
}

// Score and observed information (negative Hessian), fixed sample order.
void score_and_information(const MnlCoefficients& b, std::span<const MnlSample> samples, Vec6& g, Mat6& info) {
    g.setZero();
    info.setZero();
    for (const MnlSample& s : samples) {
        const Probs p = probabilities(b, s.nneighbors, s.formal);
        const double x[3] = {1.0, s.nneighbors, static_cast<double>(s.formal)};
        const double pk[2] = {p.cold, p.hot};
        const int slot = category_slot(s.category);
        for (int k = 0; k < 2; ++k) {
            const double resid = (slot == k ? 1.0 : 0.0) - pk[k];
            for (int a = 0; a < 3; ++a) g(3 * k + a) += resid * x[a];
            for (int l = 0; l < 2; ++l) {
                const double c = pk[k] * ((k == l ? 1.0 : 0.0) - pk[l]);
                for (int a = 0; a < 3; ++a)
                    for (int bb = 0; bb < 3; ++bb) info(3 * k + a, 3 * l + bb) += c * x[a] * x[bb];
            }
        }
    }
}

}  // namespace

TTestResult welch_t_test(double mean_a, double sd_a, std::size_t n_a, double mean_b, double sd_b, std::size_t n_b) {
    require(n_a >= 2 && n_b >= 2, "t-test needs at least 2 values per group");
    TTestResult r;
    r.mean_a = mean_a;
    r.mean_b = mean_b;
    r.sd_a = sd_a;
    r.sd_b = sd_b;
    r.n_a = n_a;
    r.n_b = n_b;
    const double va = sd_a * sd_a / static_cast<double>(n_a);
    const double vb = sd_b * sd_b / static_cast<double>(n_b);
    if (!(va + vb > 0.0)) fail(ErrorKind::Data, "t-test is degenerate: both groups have zero variance");
    r.se_a = std::sqrt(va);
    r.se_b = std::sqrt(vb);
    r.se_diff = std::sqrt(va + vb);
    const double diff = mean_a - mean_b;
    r.t = diff / r.se_diff;
    r.df = (va + vb) * (va + vb) /
           (va * va / static_cast<double>(n_a - 1) + vb * vb / static_cast<double>(n_b - 1));
    const boost::math::students_t_distribution<double> dist(r.df);
    r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))));
    const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
    r.ci_low = diff - q * r.se_diff;
    r.ci_high = diff + q * r.se_diff;
    return r;
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    require(a.size() >= 2 && b.size() >= 2, "t-test needs at least 2 values per group");
    double ma, sa, mb, sb;
    moments(a, ma, sa);
    moments(b, mb, sb);
    return welch_t_test(ma, sa, a.size(), mb, sb, b.size());
}

std::array<double, 3> mnl_predict(const MnlCoefficients& b, double nneighbors, int formal) {
    const Probs p = probabilities(b, nneighbors, formal);
    return {p.hot, p.ref, p.cold};
}

double mnl_log_likelihood(const MnlCoefficients& b, std::span<const MnlSample> samples) {
    double ll = 0.0;
    for (const MnlSample& s : samples) ll += log_prob(b, s);
    return ll;
}

std::array<double, 6> mnl_score(const MnlCoefficients& b, std::span<const MnlSample> samples) {
    Vec6 g;
    Mat6 info;
    score_and_information(b, samples, g, info);
    std::array<double, 6> out{};
    for (int i = 0; i < 6; ++i) out[static_cast<std::size_t>(i)] = g(i);
    return out;
}

MnlModel fit_mnl(std::span<const MnlSample> samples, std::size_t max_iter, double tol) {
    require(max_iter >= 1, "max_iter must be >= 1");
    std::array<std::size_t, 3> counts{};
    for (const MnlSample& s : samples) {
        require(s.nneighbors >= 0.0, "nneighbors must be >= 0");
        ++counts[static_cast<std::size_t>(s.category)];
    }
    for (std::size_t c = 0; c < 3; ++c)
        if (counts[c] == 0)
            fail(ErrorKind::Data, std::string("MNL needs at least one sample of category ") +
                                      category_code(static_cast<Category>(c)));

    const double nd = static_cast<double>(samples.size());
    const auto n_hot = static_cast<double>(counts[0]), n_ns = static_cast<double>(counts[1]),
               n_cold = static_cast<double>(counts[2]);

    MnlModel m;
    m.n = samples.size();
    m.null_log_likelihood = n_hot * std::log(n_hot / nd) + n_ns * std::log(n_ns / nd) + n_cold * std::log(n_cold / nd);

    // start from the intercept-only optimum
    MnlCoefficients b{};
    b[kMnlCold][0] = std::log(n_cold / n_ns);
    b[kMnlHot][0] = std::log(n_hot / n_ns);
    double ll = mnl_log_likelihood(b, samples);

    Vec6 g;
    Mat6 info;
    double prev_gnorm = -1.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        score_and_information(b, samples, g, info);
        // checked before convergence: a singular design can start at a zero score
        Eigen::SelfAdjointEigenSolver<Mat6> eig(info);
        const double lmax = eig.eigenvalues().maxCoeff();
        const double lmin = eig.eigenvalues().minCoeff();
        if (!(lmax > 0.0) || lmin <= 1e-10 * lmax)
            fail(ErrorKind::Numerical,
                 "MNL information matrix is singular; check for collinear or constant predictors");

        const double gmax = g.cwiseAbs().maxCoeff();
        const double gnorm = g.norm();
        m.iterations_used = it - 1;
        if (gmax < tol) break;
        if (prev_gnorm > 0.0 && std::fabs(gnorm - prev_gnorm) / prev_gnorm < tol) break;
        prev_gnorm = gnorm;
        const Vec6 step = info.ldlt().solve(g);

        const Vec6 base = flatten(b);
        double scale = 1.0;
        MnlCoefficients trial{};
        double ll_trial = -INFINITY;
        for (int h = 0; h < 40; ++h, scale *= 0.5) {
            trial = unflatten(base + scale * step);
            ll_trial = mnl_log_likelihood(trial, samples);
            if (ll_trial >= ll) break;
        }
        if (!(ll_trial >= ll)) break;  // no ascent possible at machine precision
        b = trial;
        ll = ll_trial;
        m.iterations_used = it;

        const double bmax = flatten(b).cwiseAbs().maxCoeff();
        if (bmax > kSeparationMagnitude) {
            score_and_information(b, samples, g, info);
            if (g.cwiseAbs().maxCoeff() >= tol)
                fail(ErrorKind::Numerical,
                     "MNL coefficients diverge (|b| > 30 with non-vanishing score): the categories are "
                     "perfectly or quasi-perfectly separated by the predictors");
        }
    }
    m.coefficients = b;
    m.log_likelihood = ll;

    score_and_information(b, samples, g, info);
    Eigen::SelfAdjointEigenSolver<Mat6> eig(info);
    if (eig.eigenvalues().minCoeff() > 0.0) {
        const Mat6 cov = info.inverse();
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t a = 0; a < 3; ++a) {
                const auto i = static_cast<Eigen::Index>(3 * k + a);
                m.std_errors[k][a] = std::sqrt(cov(i, i));
            }
    }
    return m;
}

MnlDiagnostics mnl_diagnostics(const MnlCoefficients& b, std::span<const MnlSample> samples) {
    MnlDiagnostics d;
    std::array<std::size_t, 3> counts{};
    for (const MnlSample& s : samples) {
        ++counts[static_cast<std::size_t>(s.category)];
        const auto p = mnl_predict(b, s.nneighbors, s.formal);
        const auto pred = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        ++d.confusion[static_cast<std::size_t>(s.category)][pred];
    }
    const double nd = static_cast<double>(samples.size());
    d.log_likelihood = mnl_log_likelihood(b, samples);
    d.null_log_likelihood = 0.0;
    for (std::size_t c : counts)
        if (c > 0) d.null_log_likelihood += static_cast<double>(c) * std::log(static_cast<double>(c) / nd);
    d.pseudo_r2 = d.null_log_likelihood < 0.0 ? 1.0 - d.log_likelihood / d.null_log_likelihood : 0.0;
    d.lr_chi2 = std::max(0.0, 2.0 * (d.log_likelihood - d.null_log_likelihood));
    d.lr_df = 4;
    d.lr_p = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(4.0), d.lr_chi2));
    std::size_t hit = 0;
    for (std::size_t c = 0; c < 3; ++c) hit += d.confusion[c][c];
    d.accuracy = samples.empty() ? 0.0 : static_cast<double>(hit) / nd;
    return d;
}

std::vector<MnlSample> mnl_samples_from_grid(const GridLattice& grid) {
    std::vector<MnlSample> out;
    for (const GridCell& c : grid.cells) {
        if (c.label == Label::Unlabeled) continue;
        if (!c.category || !c.nneighbors)
            fail(ErrorKind::State, "MNL samples need categorised cells with nneighbors; run the hotspot stage first");
        out.push_back({*c.category, static_cast<double>(*c.nneighbors), c.label == Label::Formal ? 1 : 0});
    }
    return out;
}

TTestResult formal_vs_informal_t_test(const GridLattice& grid, TTestVariable var) {
    std::vector<double> formal, informal;
    for (const GridCell& c : grid.cells) {
        if (c.label == Label::Unlabeled) continue;
        double v = 0.0;
        if (var == TTestVariable::NNeighbors) {
            if (!c.nneighbors) fail(ErrorKind::State, "t-test needs nneighbors");
            v = *c.nneighbors;
        } else {
            if (!c.gi_z) fail(ErrorKind::State, "t-test needs gi_z");
            v = *c.gi_z;
        }
        (c.label == Label::Formal ? formal : informal).push_back(v);
    }
    if (formal.size() < 2 || informal.size() < 2)
        fail(ErrorKind::Data, "t-test needs at least 2 formal and 2 informal labelled cells");
    return welch_t_test(formal, informal);
}

}  // namespace psl
