#include <doctest.h>

#include <cmath>

#include "sdi/driver.hpp"
#include "sdi/errors.hpp"

using namespace sdi;

TEST_CASE("generation is bitwise deterministic in (seed, path)") {
    const BrownianPath a = generate_brownian(42, 7, 3, 1.0, 1.0 / 64.0);
    const BrownianPath b = generate_brownian(42, 7, 3, 1.0, 1.0 / 64.0);
    CHECK(a.increments == b.increments);
    CHECK(a.terminal_ == b.terminal_);

    const BrownianPath c = generate_brownian(43, 7, 3, 1.0, 1.0 / 64.0);
    CHECK(a.increments != c.increments);
}

TEST_CASE("single-step increments have variance T") {
    const double T = 0.7;
    const std::int64_t N = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t p = 0; p < N; ++p) {
        const BrownianPath w = generate_brownian(5, p, 1, T, T);
        const double inc = w.increment(0, 0);
        sum += inc;
        sumsq += inc * inc;
    }
    const double mean = sum / N;
    const double var = sumsq / N - mean * mean;
    const double se_mean = std::sqrt(T / N);
    const double se_var = T * std::sqrt(2.0 / (N - 1.0));
    CHECK(std::abs(mean) <= 3.0 * se_mean);
    CHECK(std::abs(var - T) <= 3.0 * se_var);
}

TEST_CASE("streams across path indices are uncorrelated") {
    const std::int64_t N = 20000;
    const BrownianPath a = generate_brownian(11, 0, 1, 1.0, 1.0 / N);
    const BrownianPath b = generate_brownian(11, 1, 1, 1.0, 1.0 / N);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::int64_t k = 0; k < N; ++k) {
        sxy += a.increment(k, 0) * b.increment(k, 0);
        sxx += a.increment(k, 0) * a.increment(k, 0);
        syy += b.increment(k, 0) * b.increment(k, 0);
    }
    const double rho = sxy / std::sqrt(sxx * syy);
    CHECK(std::abs(rho) <= 3.0 / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("restriction sums blocks exactly and preserves the terminal value") {
    const BrownianPath fine = generate_brownian(3, 2, 2, 1.0, 1.0 / 128.0);

    const BrownianPath same = restrict_path(fine, 1.0 / 128.0);
    CHECK(same.increments == fine.increments);

    const BrownianPath coarse = restrict_path(fine, 1.0 / 32.0);
    CHECK(coarse.steps == 32);
    for (std::int64_t k = 0; k < coarse.steps; ++k)
        for (int c = 0; c < 2; ++c) {
            double block = 0.0;  // ascending order, as the implementation sums
            for (std::int64_t i = 0; i < 4; ++i) block += fine.increment(4 * k + i, c);
            CHECK(coarse.increment(k, c) == block);
        }

    for (int c = 0; c < 2; ++c) {
        CHECK(coarse.terminal(c) == fine.terminal(c));
        CHECK(restrict_path(fine, 0.5).terminal(c) == fine.terminal(c));
    }
}

TEST_CASE("grid mismatches are rejected") {
    CHECK_THROWS_AS((void)generate_brownian(1, 0, 1, 1.0, 0.3), Error);
    const BrownianPath fine = generate_brownian(1, 0, 1, 1.0, 1.0 / 64.0);
    CHECK_THROWS_AS((void)restrict_path(fine, 1.0 / 48.0), Error);
    CHECK_THROWS_AS((void)generate_brownian(1, 0, 0, 1.0, 0.5), Error);
}
