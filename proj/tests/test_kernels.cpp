#include <omp.h>

#include <vector>

#include "doctest.h"
#include "fuzzyppo/kernels.hpp"
#include "fuzzyppo/rng.hpp"

using namespace fuzzyppo;
using namespace fuzzyppo::kernels;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Forces a real thread team even on a single-core machine.
struct ThreadTeam {
  int saved = omp_get_max_threads();
  explicit ThreadTeam(int n) { omp_set_num_threads(n); }
  ~ThreadTeam() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("affine_forward examples") {
  const AffineShape s{1, 2, 2};
  std::vector<double> y(2);
  serial::affine_forward(s, std::vector<double>{1, 1}, std::vector<double>{1, 2, 3, 4},
                         std::vector<double>{1, 1}, y);
  CHECK(y == std::vector<double>{4, 8});

  serial::affine_forward(s, std::vector<double>{0.3, -2}, std::vector<double>{1, 0, 0, 1},
                         std::vector<double>{0, 0}, y);
  CHECK(y == std::vector<double>{0.3, -2});

  serial::affine_forward(s, std::vector<double>{5, 7}, std::vector<double>{0, 0, 0, 0},
                         std::vector<double>{-1.5, 2.5}, y);
  CHECK(y == std::vector<double>{-1.5, 2.5});
}

TEST_CASE("gaussian membership of a single dimension") {
  std::vector<double> firing(1);
  serial::gaussian_mf_forward({1, 1, 1}, std::vector<double>{1.0}, std::vector<double>{0.0},
                              std::vector<double>{1.0}, firing);
  CHECK(firing[0] == doctest::Approx(0.6065306597126334).epsilon(1e-12));
}

TEST_CASE("OpenMP kernels are bitwise identical to the serial reference") {
  ThreadTeam team(4);
  Rng rng(2024);
  for (const std::size_t batch : {1u, 3u, 64u}) {
    SUBCASE("affine") {
      const AffineShape s{batch, 37, 29};
      const auto x = random_vec(rng, batch * s.in);
      const auto w = random_vec(rng, s.out * s.in);
      const auto b = random_vec(rng, s.out);
      const auto dy = random_vec(rng, batch * s.out);
      std::vector<double> y1(batch * s.out), y2(batch * s.out);
      serial::affine_forward(s, x, w, b, y1);
      omp::affine_forward(s, x, w, b, y2);
      CHECK(y1 == y2);
      std::vector<double> dx1(x.size(), 0.5), dx2(x.size(), 0.5);
      std::vector<double> dw1(w.size(), 0.1), dw2(w.size(), 0.1);
      std::vector<double> db1(b.size()), db2(b.size());
      serial::affine_backward(s, x, w, dy, dx1, dw1, db1);
      omp::affine_backward(s, x, w, dy, dx2, dw2, db2);
      CHECK(dx1 == dx2);
      CHECK(dw1 == dw2);
      CHECK(db1 == db2);
    }
    SUBCASE("gaussian membership") {
      const MembershipShape s{batch, 5, 41};
      const auto f = random_vec(rng, batch * s.dims, 0.0, 0.5);
      const auto c = random_vec(rng, s.rules * s.dims, -0.2, 0.2);
      const auto sg = random_vec(rng, s.rules * s.dims, 0.25, 0.75);
      const auto g = random_vec(rng, batch * s.rules);
      std::vector<double> p1(batch * s.rules), p2(batch * s.rules);
      serial::gaussian_mf_forward(s, f, c, sg, p1);
      omp::gaussian_mf_forward(s, f, c, sg, p2);
      CHECK(p1 == p2);
      std::vector<double> df1(f.size()), df2(f.size()), dc1(c.size()), dc2(c.size()),
          ds1(sg.size()), ds2(sg.size());
      serial::gaussian_mf_backward(s, f, c, sg, p1, g, df1, dc1, ds1);
      omp::gaussian_mf_backward(s, f, c, sg, p2, g, df2, dc2, ds2);
      CHECK(df1 == df2);
      CHECK(dc1 == dc2);
      CHECK(ds1 == ds2);
    }
    SUBCASE("tsk mixture") {
      const MixtureShape s{batch, 6, 2, 13};
      const auto w = random_vec(rng, batch * s.rules, 0.0, 1.0);
      const auto x = random_vec(rng, batch * s.dims);
      const auto a = random_vec(rng, s.rules * s.actions * s.dims);
      const auto b = random_vec(rng, s.rules * s.actions);
      const auto g = random_vec(rng, batch * s.actions);
      std::vector<double> o1(batch * s.rules * s.actions), o2(o1.size());
      std::vector<double> z1(batch * s.actions), z2(z1.size());
      serial::tsk_forward(s, w, x, a, b, o1, z1);
      omp::tsk_forward(s, w, x, a, b, o2, z2);
      CHECK(o1 == o2);
      CHECK(z1 == z2);
      std::vector<double> dw1(w.size()), dw2(w.size()), dx1(x.size()), dx2(x.size()),
          da1(a.size()), da2(a.size()), db1(b.size()), db2(b.size());
      serial::tsk_backward(s, w, x, a, o1, g, dw1, dx1, da1, db1);
      omp::tsk_backward(s, w, x, a, o2, g, dw2, dx2, da2, db2);
      CHECK(dw1 == dw2);
      CHECK(dx1 == dx2);
      CHECK(da1 == da2);
      CHECK(db1 == db2);
    }
  }
}

TEST_CASE("dispatch honours the execution mode") {
  const Execution saved = execution();
  set_execution(Execution::kParallel);
  CHECK(execution() == Execution::kParallel);
  std::vector<double> y(2);
  affine_forward({1, 2, 2}, std::vector<double>{1, 1}, std::vector<double>{1, 2, 3, 4},
                 std::vector<double>{1, 1}, y);
  CHECK(y == std::vector<double>{4, 8});
  set_execution(saved);
}
