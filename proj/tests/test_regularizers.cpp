#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "spml/model.hpp"
#include "spml/regularizers.hpp"
#include "spml/rng.hpp"

using namespace spml;

namespace {
const double kLn2 = std::log(2.0);
}

TEST_CASE("init lands in [0.4, 0.6], deterministic, mean near 0.5") {
  std::vector<std::int64_t> ids(500);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int64_t>(i * 3);
  PseudoTargetStore a = init_pseudo_targets(ids, 20, 8, 42, 0.01, 0.01);
  PseudoTargetStore b = init_pseudo_targets(ids, 20, 8, 42, 0.01, 0.01);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [id, e] : a.entries) {
    CHECK(e.y_bar == b.entries.at(id).y_bar);
    for (double v : e.y_bar) {
      CHECK(v >= 0.4);
      CHECK(v <= 0.6);
      sum += v;
      ++n;
    }
    for (double v : e.d_bar) CHECK(v == 0.0);
  }
  CHECK(n == 500 * 20);
  CHECK(std::abs(sum / static_cast<double>(n) - 0.5) < 0.005);
}

TEST_CASE("rp value at p == y_bar is the mean binary entropy") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + rng.uniform_below(8);
    std::vector<double> y(m);
    double want = 0.0;
    for (double& v : y) {
      v = rng.uniform(0.05, 0.95);
      want += -(v * std::log(v) + (1.0 - v) * std::log(1.0 - v));
    }
    want /= static_cast<double>(m);
    RegTerm t = rp_term(y, y);
    CHECK(t.value == doctest::Approx(want).epsilon(1e-12));
    // gradient in z-space is (p - y)/M = 0; in p-space the terms cancel too
    for (std::size_t c = 0; c < m; ++c) {
      const double gz = t.grad[c] * y[c] * (1.0 - y[c]);
      CHECK(std::abs(gz) < 1e-12);
    }
  }
}

TEST_CASE("rp at uniform targets is ln 2 at the symmetric point") {
  std::vector<double> p(6, 0.5), y(6, 0.5);
  CHECK(std::abs(rp_term(p, y).value - kLn2) < 1e-9);
}

TEST_CASE("rp cross-entropy never drops below the target entropy") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.uniform_below(6);
    std::vector<double> p(m), y(m);
    double entropy = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      p[c] = rng.uniform(0.01, 0.99);
      y[c] = rng.uniform(0.01, 0.99);
      entropy += -(y[c] * std::log(y[c]) + (1.0 - y[c]) * std::log(1.0 - y[c]));
    }
    CHECK(rp_term(p, y).value >= entropy / static_cast<double>(m) - 1e-12);
  }
}

TEST_CASE("rp is invariant under a consistent class permutation") {
  Rng rng(11);
  std::vector<double> p(8), y(8);
  for (std::size_t c = 0; c < 8; ++c) {
    p[c] = rng.uniform(0.05, 0.95);
    y[c] = rng.uniform(0.05, 0.95);
  }
  const double base = rp_term(p, y).value;
  std::vector<std::size_t> perm = {3, 1, 7, 0, 5, 2, 6, 4};
  std::vector<double> p2(8), y2(8);
  for (std::size_t c = 0; c < 8; ++c) {
    p2[c] = p[perm[c]];
    y2[c] = y[perm[c]];
  }
  CHECK(rp_term(p2, y2).value == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("rp matches an independent scalar evaluation and finite differences") {
  Rng rng(13);
  std::vector<double> p(6), y(6);
  for (std::size_t c = 0; c < 6; ++c) {
    p[c] = rng.uniform(0.05, 0.95);
    y[c] = rng.uniform(0.05, 0.95);
  }
  long double want = 0.0L;
  for (std::size_t c = 0; c < 6; ++c)
    want += -(static_cast<long double>(y[c]) * std::log(static_cast<long double>(p[c])) +
              (1.0L - y[c]) * std::log(1.0L - static_cast<long double>(p[c])));
  want /= 6.0L;
  RegTerm t = rp_term(p, y);
  CHECK(t.value == doctest::Approx(static_cast<double>(want)).epsilon(1e-12));
  const double h = 1e-6;
  for (std::size_t c = 0; c < 6; ++c) {
    std::vector<double> pp = p, pm = p;
    pp[c] += h;
    pm[c] -= h;
    const double fd = (rp_term(pp, y).value - rp_term(pm, y).value) / (2.0 * h);
    CHECK(t.grad[c] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("ema endpoints") {
  std::vector<double> y = {0.2, 0.8}, p = {0.9, 0.1};
  CHECK(ema_update(y, p, 0.0) == y);
  CHECK(ema_update(y, p, 1.0) == p);
}

TEST_CASE("ema contraction closed form") {
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    std::vector<double> y0 = {0.47, 0.56, 0.41};
    std::vector<double> p = {0.9, 0.05, 0.5};
    std::vector<double> y = y0;
    const int steps = 25;
    for (int t = 0; t < steps; ++t) y = ema_update(y, p, eps);
    const double factor = std::pow(1.0 - eps, steps);
    for (std::size_t c = 0; c < y.size(); ++c)
      CHECK(std::abs(std::abs(y[c] - p[c]) - factor * std::abs(y0[c] - p[c])) < 1e-12);
  }
}

TEST_CASE("ema stays inside the convex hull of init and inputs") {
  Rng rng(17);
  std::vector<double> y = {0.5};
  double lo = 0.5, hi = 0.5;
  for (int t = 0; t < 500; ++t) {
    const double p = clamp_prob(rng.uniform(0.0, 1.0));
    lo = std::min(lo, p);
    hi = std::max(hi, p);
    y = ema_update(y, {p}, 0.05);
    CHECK(y[0] >= lo - 1e-15);
    CHECK(y[0] <= hi + 1e-15);
  }
}

TEST_CASE("re term basics") {
  std::vector<double> d = {1.0, -1.0}, d_bar = {0.0, 0.0};
  RegTerm t = re_term(d, d_bar);
  CHECK(t.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t.grad[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t.grad[1] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(re_term(d, d).value == 0.0);
  // homogeneity: scaling the residual by c scales the value by c^2
  std::vector<double> d3 = {3.0, -3.0};
  CHECK(re_term(d3, d_bar).value == doctest::Approx(9.0).epsilon(1e-12));
  CHECK_THROWS_AS(re_term(d, std::vector<double>{0.0}), std::invalid_argument);
}

TEST_CASE("attach_regularizer arithmetic") {
  ValueGrad base{0.5, Matrix(1, 2)};
  base.grad(0, 0) = 1.0;
  ValueGrad reg{0.2, Matrix(1, 2)};
  reg.grad(0, 1) = 4.0;
  ValueGrad out = attach_regularizer(base, reg, 0.1);
  CHECK(out.value == doctest::Approx(0.52).epsilon(1e-15));
  CHECK(out.grad(0, 0) == doctest::Approx(1.0));
  CHECK(out.grad(0, 1) == doctest::Approx(0.4));
  ValueGrad zero = attach_regularizer(base, reg, 0.0);
  CHECK(zero.value == base.value);
  CHECK(zero.grad == base.grad);
}

TEST_CASE("pseudo-target store round trips through disk") {
  PseudoTargetStore store = init_pseudo_targets({1, 5, 9}, 4, 3, 7, 0.01, 0.001);
  store.entries.at(5).d_bar = {0.25, -1.5, 3.0};
  const char* path = "pseudo_targets_test.json";
  save_pseudo_targets(store, path);
  PseudoTargetStore back = load_pseudo_targets(path);
  CHECK(back.eps_ema == store.eps_ema);
  CHECK(back.eps_ema_embed == store.eps_ema_embed);
  CHECK(back.entries.size() == 3);
  CHECK(back.entries.at(5).d_bar == store.entries.at(5).d_bar);
  CHECK(back.entries.at(9).y_bar == store.entries.at(9).y_bar);
  std::remove(path);
}
