#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "remest/link.hpp"

using namespace remest;
using link::CodeParams;

namespace {

// ---- test-local oracles, kept independent of the library implementation ----

double oracle_eps(double gamma, double rate, int l) {
    if (gamma <= 1e-12) return 1.0;
    const double log2e = std::log2(std::exp(1.0));
    const double cap = std::log2(1.0 + gamma);
    const double disp = (1.0 - std::pow(1.0 + gamma, -2.0)) * log2e * log2e;
    const double z = (cap - rate) / std::sqrt(disp / l);
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// One sequential-SIC trial: strongest first per channel, stop a channel at its
// first decode failure. Returns success flags.
std::vector<int> oracle_trial(const std::vector<int>& assign, const std::vector<double>& power,
                              double noise, double rate, int l, Rng& rng) {
    const int n = static_cast<int>(assign.size());
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
        if (assign[i] > 0 && power[i] > 0.0) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return power[a] > power[b]; });

    std::vector<int> ok(n, 0);
    std::vector<int> stopped(16, 0);
    for (size_t k = 0; k < idx.size(); ++k) {
        const int i = idx[k];
        if (stopped[assign[i]]) continue;
        double interf = 0.0;
        for (size_t j = k + 1; j < idx.size(); ++j)
            if (assign[idx[j]] == assign[i]) interf += power[idx[j]];
        const double gamma = power[i] / (interf + noise);
        if (rng.uniform() < 1.0 - oracle_eps(gamma, rate, l)) ok[i] = 1;
        else stopped[assign[i]] = 1;
    }
    return ok;
}

}  // namespace

TEST_CASE("packet error: capacity equal to code rate gives exactly one half") {
    const CodeParams code{2.0, 200, 1.0};
    CHECK(link::packet_error_prob(3.0, code) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("packet error: zero and near-zero SNR give certain failure") {
    const CodeParams code{2.0, 200, 1.0};
    CHECK(link::packet_error_prob(0.0, code) == 1.0);
    CHECK(link::packet_error_prob(1e-13, code) == 1.0);
}

TEST_CASE("packet error: pinned high-precision value at SNR 15") {
    // Q(2 / sqrt(V(15)/200)) evaluated at 40-digit precision.
    const CodeParams code{2.0, 200, 1.0};
    const double expected = 3.281160755914333e-86;
    CHECK(link::packet_error_prob(15.0, code) / expected == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("packet error: monotonically non-increasing in SNR") {
    const CodeParams code{2.0, 200, 1.0};
    double prev = 1.0;
    for (int i = 0; i < 1000; ++i) {
        const double gamma = std::pow(10.0, -9.0 + 18.0 * i / 999.0);
        const double eps = link::packet_error_prob(gamma, code);
        CHECK(eps <= prev + 1e-15);
        CHECK(eps >= 0.0);
        CHECK(eps <= 1.0);
        prev = eps;
    }
}

TEST_CASE("sic order: decreasing power with index tie-break, idles excluded") {
    {
        const std::vector<double> powers{1.0, 3.0, 2.0};
        const std::vector<int> assign{1, 1, 1};
        CHECK(link::sic_order(powers, assign) == std::vector<int>{1, 2, 0});
    }
    {
        const std::vector<double> powers{5.0, 5.0};
        const std::vector<int> assign{1, 1};
        CHECK(link::sic_order(powers, assign) == std::vector<int>{0, 1});
    }
    {
        const std::vector<double> powers{5.0, 7.0};
        const std::vector<int> assign{1, 0};  // sensor 1 idle
        CHECK(link::sic_order(powers, assign) == std::vector<int>{0});
    }
}

TEST_CASE("sinr: interference comes only from weaker co-channel sensors") {
    const double noise = 2.0;
    {
        const std::vector<double> powers{6.0};
        const std::vector<int> assign{1};
        const auto order = link::sic_order(powers, assign);
        CHECK(link::sinr(0, order, assign, powers, noise) == doctest::Approx(3.0));
    }
    {
        const std::vector<double> powers{8.0, 2.0};
        const std::vector<int> assign{1, 1};
        const auto order = link::sic_order(powers, assign);
        CHECK(link::sinr(0, order, assign, powers, noise) == doctest::Approx(8.0 / 4.0));
        CHECK(link::sinr(1, order, assign, powers, noise) == doctest::Approx(1.0));
    }
    {
        const std::vector<double> powers{8.0, 2.0};
        const std::vector<int> assign{1, 2};  // orthogonal channels
        const auto order = link::sic_order(powers, assign);
        CHECK(link::sinr(0, order, assign, powers, noise) == doctest::Approx(4.0));
        CHECK(link::sinr(1, order, assign, powers, noise) == doctest::Approx(1.0));
    }
}

TEST_CASE("decode failure: single transmitter and the two-sensor expansion") {
    const CodeParams code{2.0, 200, 1.0};
    {
        const std::vector<double> powers{3.0};
        const std::vector<int> assign{1};
        const auto out = link::decode_failure_probs(assign, powers, code);
        CHECK(out.failure_probs(0) == doctest::Approx(0.5).epsilon(1e-12));
    }
    {
        // gamma_0 = 12/(3+1) = 3 and gamma_1 = 3/1 = 3, both eps = 1/2
        const std::vector<double> powers{12.0, 3.0};
        const std::vector<int> assign{1, 1};
        const auto out = link::decode_failure_probs(assign, powers, code);
        const double e0 = out.failure_probs(0);
        const double e1 = out.failure_probs(1);
        CHECK(e0 == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(e1 == doctest::Approx(e0 + (1.0 - e0) * 0.5).epsilon(1e-12));
    }
    {
        // non-transmitting sensor: failure probability 1, SINR 0
        const std::vector<double> powers{3.0, 0.0};
        const std::vector<int> assign{1, 0};
        const auto out = link::decode_failure_probs(assign, powers, code);
        CHECK(out.failure_probs(1) == 1.0);
        CHECK(out.sinrs(1) == 0.0);
    }
}

TEST_CASE("decode failure: Monte-Carlo agreement on a mixed three-sensor slot") {
    const CodeParams code{2.0, 200, 1.0};
    const std::vector<double> powers{12.0, 3.0, 3.0};
    const std::vector<int> assign{1, 1, 2};
    const auto out = link::decode_failure_probs(assign, powers, code);

    const long trials = 1000000;
    std::vector<long> failures(3, 0);
    Rng rng(2024);
    for (long t = 0; t < trials; ++t) {
        const auto ok = oracle_trial(assign, powers, 1.0, 2.0, 200, rng);
        for (int i = 0; i < 3; ++i) failures[i] += 1 - ok[i];
    }
    for (int i = 0; i < 3; ++i) {
        const double freq = static_cast<double>(failures[i]) / trials;
        const double p = out.failure_probs(i);
        const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / trials);
        CHECK(std::abs(freq - p) <= 3.0 * se + 1e-9);
    }
}

TEST_CASE("sample receptions: marginals match the analytic failure probabilities") {
    const CodeParams code{2.0, 200, 1.0};
    const std::vector<double> powers{12.0, 3.0};
    const std::vector<int> assign{1, 1};
    const auto out = link::decode_failure_probs(assign, powers, code);

    const long trials = 1000000;
    std::vector<long> failures(2, 0);
    Rng rng(99);
    for (long t = 0; t < trials; ++t) {
        const auto ok = link::sample_receptions(assign, powers, code, rng);
        for (int i = 0; i < 2; ++i) failures[i] += 1 - ok[i];
    }
    for (int i = 0; i < 2; ++i) {
        const double freq = static_cast<double>(failures[i]) / trials;
        const double p = out.failure_probs(i);
        const double se = std::sqrt(p * (1.0 - p) / trials);
        CHECK(std::abs(freq - p) <= 3.0 * se);
    }
}

TEST_CASE("sample receptions: idle sensors never succeed, huge SNR always does") {
    const CodeParams code{2.0, 200, 1e-9};
    const std::vector<double> powers{0.0, 0.02};
    const std::vector<int> assign{0, 2};
    Rng rng(7);
    for (int t = 0; t < 10000; ++t) {
        const auto ok = link::sample_receptions(assign, powers, code, rng);
        CHECK(ok[0] == 0);
        CHECK(ok[1] == 1);  // gamma = 2e7, eps below 1e-12
    }
}

TEST_CASE("decode failure: equivariant under sensor relabeling") {
    const CodeParams code{2.0, 200, 1.0};
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 4;
        std::vector<double> powers(n);
        std::vector<int> assign(n);
        for (int i = 0; i < n; ++i) {
            powers[i] = rng.uniform(0.5, 20.0);
            assign[i] = rng.uniform_int(3);  // 0 idle, channels 1..2
        }
        const auto base = link::decode_failure_probs(assign, powers, code);

        const std::vector<int> perm{2, 0, 3, 1};
        std::vector<double> ppow(n);
        std::vector<int> passign(n);
        for (int i = 0; i < n; ++i) {
            ppow[perm[i]] = powers[i];
            passign[perm[i]] = assign[i];
        }
        const auto permuted = link::decode_failure_probs(passign, ppow, code);
        for (int i = 0; i < n; ++i)
            CHECK(permuted.failure_probs(perm[i]) ==
                  doctest::Approx(base.failure_probs(i)).epsilon(1e-12));
    }
}

TEST_CASE("decode failure: adding an interferer never helps co-channel sensors") {
    const CodeParams code{2.0, 200, 1.0};
    Rng rng(55);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 3;
        std::vector<double> powers(n);
        std::vector<int> assign(n);
        for (int i = 0; i < n; ++i) {
            powers[i] = rng.uniform(0.5, 20.0);
            assign[i] = 1;
        }
        std::vector<int> without = assign;
        without[2] = 0;
        std::vector<double> wpow = powers;
        wpow[2] = 0.0;

        const auto base = link::decode_failure_probs(without, wpow, code);
        const auto more = link::decode_failure_probs(assign, powers, code);
        for (int i = 0; i < 2; ++i)
            CHECK(more.failure_probs(i) >= base.failure_probs(i) - 1e-12);
    }
}
