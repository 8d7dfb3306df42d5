#include "tite_stein/selection.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace tite_stein;

namespace {

using Vec = std::vector<double>;

DesignParams doses(int d) {
    DesignParams p;
    p.num_doses = d;
    p.start_dose = 1;
    return p;
}

// Model average recomputed from oracle fits.
std::pair<Vec, Vec> oracle_average(const std::vector<int>& n, const std::vector<int>& y,
                                   bool grid) {
    const std::size_t d = n.size();
    Vec rate(d), w(d), yd(d);
    for (std::size_t i = 0; i < d; ++i) {
        rate[i] = n[i] ? static_cast<double>(y[i]) / n[i] : 0.0;
        w[i] = n[i];
        yd[i] = y[i];
    }
    std::vector<Vec> fits;
    Vec like;
    for (int mode = 1; mode <= static_cast<int>(d); ++mode) {
        fits.push_back(grid ? oracle::unimodal_grid3(rate, w, mode, 0.001).values
                            : oracle::unimodal(rate, w, mode).values);
        like.push_back(oracle::binomial_likelihood(fits.back(), n, yd));
    }
    double total = 0.0;
    for (double l : like) total += l;
    Vec pi(d), q(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        pi[k] = like[k] / total;
        for (std::size_t i = 0; i < d; ++i) q[i] += pi[k] * fits[k][i];
    }
    return {q, pi};
}

}  // namespace

TEST_CASE("single dose averages to the observed rate") {
    FinalData data{{10}, {1}, {7}, {}};
    const auto avg = model_average_efficacy(data);
    CHECK(avg.weights == Vec{1.0});
    CHECK(avg.q[0] == doctest::Approx(0.7));
}

TEST_CASE("one tried dose among three") {
    FinalData data{{0, 9, 0}, {0, 1, 0}, {0, 6, 0}, {}};
    const auto avg = model_average_efficacy(data);
    CHECK(avg.q[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    for (const auto& fit : avg.fits) CHECK(fit[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("three-dose model average agrees with grid and exact oracles") {
    const std::vector<int> n{9, 9, 9}, y{2, 6, 3};
    FinalData data{n, {0, 0, 0}, y, {}};
    const auto avg = model_average_efficacy(data);
    const auto [q_exact, pi_exact] = oracle_average(n, y, false);
    const auto [q_grid, pi_grid] = oracle_average(n, y, true);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(avg.q[i] - q_exact[i]) < 1e-9);
        CHECK(std::abs(avg.weights[i] - pi_exact[i]) < 1e-9);
        CHECK(std::abs(avg.q[i] - q_grid[i]) < 2e-3);
        CHECK(std::abs(avg.weights[i] - pi_grid[i]) < 1e-2);
    }
    // the peaked mode explains these data best
    CHECK(avg.weights[1] > avg.weights[0]);
    CHECK(avg.weights[1] > avg.weights[2]);
}

TEST_CASE("model weights form a distribution and estimates stay in range") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> size(0, 15);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = 1 + trial % 6;
        FinalData data;
        for (int i = 0; i < d; ++i) {
            const int n = size(rng);
            data.n.push_back(n);
            data.y_tox.push_back(0);
            data.y_eff.push_back(static_cast<int>(std::floor(u(rng) * (n + 1))) % (n + 1));
        }
        if (std::all_of(data.n.begin(), data.n.end(), [](int n) { return n == 0; })) continue;
        const auto avg = model_average_efficacy(data);
        double sum = 0.0;
        for (double p : avg.weights) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
        double lo = 1.0, hi = 0.0;
        for (int i = 0; i < d; ++i) {
            if (data.n[i] == 0) continue;
            const double r = static_cast<double>(data.y_eff[i]) / data.n[i];
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        for (int i = 0; i < d; ++i) {
            if (data.n[i] == 0) continue;
            CHECK(avg.q[i] >= lo - 1e-12);
            CHECK(avg.q[i] <= hi + 1e-12);
        }
        for (int mode = 1; mode <= d; ++mode) {
            const auto& f = avg.fits[mode - 1];
            for (int i = 1; i < mode; ++i) CHECK(f[i] >= f[i - 1] - 1e-12);
            for (int i = mode; i < d; ++i) CHECK(f[i] <= f[i - 1] + 1e-12);
        }
    }
}

TEST_CASE("no tried dose is an error") {
    FinalData data{{0, 0}, {0, 0}, {0, 0}, {}};
    CHECK_THROWS_AS(model_average_efficacy(data), contract_error);
}

TEST_CASE("utilities of a constructed curve pick the middle dose") {
    const DesignParams p;
    CHECK(utility(0.05, 0.20, p) == doctest::Approx(0.1835));
    CHECK(utility(0.20, 0.45, p) == doctest::Approx(0.384));
    CHECK(utility(0.35, 0.55, p) == doctest::Approx(0.053));

    FinalData data{{20, 20, 20}, {1, 4, 7}, {4, 9, 11}, {}};
    const auto r = select_candidate(data, doses(3));
    CHECK(r.p_tilde[0] == doctest::Approx(0.05));
    CHECK(r.p_tilde[1] == doctest::Approx(0.20));
    CHECK(r.p_tilde[2] == doctest::Approx(0.35));
    CHECK(r.candidate == 2);
    for (int d = 0; d < 3; ++d) CHECK(r.utilities[d] == doctest::Approx(utility(r.p_tilde[d], r.q_tilde[d], doses(3))));
}

TEST_CASE("rising efficacy at low toxicity picks the top dose") {
    FinalData data{{30, 30, 30}, {0, 3, 6}, {6, 12, 18}, {}};
    const auto r = select_candidate(data, doses(3));
    CHECK(r.candidate == 3);
}

TEST_CASE("eligibility and ties") {
    FinalData one{{0, 12, 0}, {0, 2, 0}, {0, 3, 0}, {}};
    auto r = select_candidate(one, doses(3));
    CHECK(r.candidate == 2);
    CHECK(r.eligible == std::vector<bool>{false, true, false});
    CHECK(std::isnan(r.utilities[0]));

    FinalData tie{{10, 10}, {1, 1}, {5, 5}, {}};
    CHECK(select_candidate(tie, doses(2)).candidate == 1);

    FinalData elim{{10, 10}, {1, 1}, {2, 8}, {false, true}};
    CHECK(select_candidate(elim, doses(2)).candidate == 1);

    FinalData none{{10, 10}, {1, 1}, {2, 8}, {true, true}};
    CHECK(select_candidate(none, doses(2)).candidate == 0);

    FinalData empty{{0, 0}, {0, 0}, {0, 0}, {}};
    CHECK(select_candidate(empty, doses(2)).candidate == 0);
}

TEST_CASE("toxicity estimates are non-decreasing") {
    FinalData data{{6, 9, 12, 3}, {2, 1, 5, 0}, {1, 4, 6, 2}, {}};
    const auto r = select_candidate(data, doses(4));
    for (std::size_t i = 1; i < r.p_tilde.size(); ++i) CHECK(r.p_tilde[i] >= r.p_tilde[i - 1]);
}

TEST_CASE("data validation") {
    FinalData bad{{3, 3}, {4, 0}, {0, 0}, {}};
    CHECK_THROWS_AS(bad.validate(), contract_error);
    FinalData ragged{{3, 3}, {0}, {0, 0}, {}};
    CHECK_THROWS_AS(ragged.validate(), contract_error);
    FinalData ok{{3, 3}, {0, 1}, {0, 2}, {}};
    CHECK_THROWS_AS(select_candidate(ok, doses(3)), contract_error);
}
