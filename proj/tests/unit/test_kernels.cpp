#include <doctest.h>

#include <omp.h>

#include "deeptrust/kernels.hpp"
#include "deeptrust/rng.hpp"

using namespace deeptrust;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (auto& v : m.values()) v = rng.uniform(-2.0, 2.0);
    return m;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

}  // namespace

TEST_CASE("affine kernels agree with a naive product") {
    Rng rng(1);
    const auto x = random_matrix(rng, 5, 7);
    const auto w = random_matrix(rng, 7, 3);
    const auto b = random_vector(rng, 3);
    Matrix y(5, 3);
    kernels::serial::affine_forward(x, w, b, y);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            long double s = b[j];
            for (std::size_t k = 0; k < 7; ++k) s += static_cast<long double>(x(i, k)) * w(k, j);
            CHECK(std::abs(static_cast<double>(s) - y(i, j)) < 1e-12);
        }

    const auto dy = random_matrix(rng, 5, 3);
    Matrix dw(7, 3);
    std::vector<double> db(3);
    kernels::serial::affine_backward_params(x, dy, dw, db);
    Matrix dx(5, 7);
    kernels::serial::affine_backward_input(dy, w, dx);
    for (std::size_t k = 0; k < 7; ++k)
        for (std::size_t j = 0; j < 3; ++j) {
            long double s = 0;
            for (std::size_t i = 0; i < 5; ++i) s += static_cast<long double>(x(i, k)) * dy(i, j);
            CHECK(std::abs(static_cast<double>(s) - dw(k, j)) < 1e-12);
        }
    for (std::size_t j = 0; j < 3; ++j) {
        long double s = 0;
        for (std::size_t i = 0; i < 5; ++i) s += dy(i, j);
        CHECK(std::abs(static_cast<double>(s) - db[j]) < 1e-12);
    }
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t k = 0; k < 7; ++k) {
            long double s = 0;
            for (std::size_t j = 0; j < 3; ++j) s += static_cast<long double>(dy(i, j)) * w(k, j);
            CHECK(std::abs(static_cast<double>(s) - dx(i, k)) < 1e-12);
        }
}

TEST_CASE("OpenMP kernels are bit-identical to the serial reference for any thread count") {
    Rng rng(2);
    for (int threads : {1, 2, 3, 8}) {
        omp_set_num_threads(threads);
        for (int trial = 0; trial < 10; ++trial) {
            const auto n = 1 + rng.below(70), in = 1 + rng.below(40), out = 1 + rng.below(30);
            const auto x = random_matrix(rng, n, in);
            const auto w = random_matrix(rng, in, out);
            const auto b = random_vector(rng, out);
            Matrix y1(n, out), y2(n, out);
            kernels::serial::affine_forward(x, w, b, y1);
            kernels::omp::affine_forward(x, w, b, y2);
            CHECK(y1 == y2);

            const auto dy = random_matrix(rng, n, out);
            Matrix dw1(in, out), dw2(in, out);
            std::vector<double> db1(out), db2(out);
            kernels::serial::affine_backward_params(x, dy, dw1, db1);
            kernels::omp::affine_backward_params(x, dy, dw2, db2);
            CHECK(dw1 == dw2);
            CHECK(db1 == db2);

            Matrix dx1(n, in), dx2(n, in);
            kernels::serial::affine_backward_input(dy, w, dx1);
            kernels::omp::affine_backward_input(dy, w, dx2);
            CHECK(dx1 == dx2);

            auto p1 = random_vector(rng, 500);
            auto p2 = p1;
            const auto g = random_vector(rng, 500);
            kernels::serial::sgd_update(p1, g, 0.01);
            kernels::omp::sgd_update(p2, g, 0.01);
            CHECK(p1 == p2);
        }
    }
}
