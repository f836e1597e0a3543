#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "spml/losses.hpp"
#include "spml/rng.hpp"

using namespace spml;

namespace {

const double kLn2 = std::log(2.0);

// labels as strings, one character per class: P / N / U
BatchContext make_ctx(const std::vector<std::string>& labels, double p, int epoch = 1) {
  BatchContext ctx;
  ctx.epoch = epoch;
  const std::size_t batch = labels.size();
  const std::size_t m = labels[0].size();
  ctx.probs = Matrix(batch, m, p);
  for (std::size_t i = 0; i < batch; ++i) {
    TriStateLabelVector v(m);
    for (std::size_t c = 0; c < m; ++c)
      v.set(c, labels[i][c] == 'P'   ? LabelState::Positive
               : labels[i][c] == 'N' ? LabelState::Negative
                                     : LabelState::Unknown);
    ctx.labels.push_back(v);
    ctx.example_ids.push_back(static_cast<std::int64_t>(i));
  }
  return ctx;
}

BatchContext random_ctx(Rng& rng, std::size_t batch, std::size_t m, bool with_negatives) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < batch; ++i) {
    std::string row(m, 'U');
    row[rng.uniform_below(m)] = 'P';
    if (with_negatives)
      for (std::size_t c = 0; c < m; ++c)
        if (row[c] == 'U' && rng.uniform() < 0.3) row[c] = 'N';
    labels.push_back(row);
  }
  BatchContext ctx = make_ctx(labels, 0.5, 1 + rng.uniform_below(5));
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t c = 0; c < m; ++c)
      ctx.probs(i, c) = clamp_prob(1.0 / (1.0 + std::exp(-rng.uniform(-3.0, 3.0))));
  return ctx;
}

void check_same(const LossOutput& a, const LossOutput& b, double tol = 1e-12) {
  CHECK(std::abs(a.value - b.value) < tol);
  REQUIRE(a.grad_logits.rows() == b.grad_logits.rows());
  for (std::size_t i = 0; i < a.grad_logits.rows(); ++i)
    for (std::size_t c = 0; c < a.grad_logits.cols(); ++c)
      CHECK(std::abs(a.grad_logits(i, c) - b.grad_logits(i, c)) < tol);
}

}  // namespace

TEST_CASE("scalar BCE terms") {
  CHECK(term_bce_pos(1.0).value == 0.0);
  CHECK(term_bce_pos(0.5).value == doctest::Approx(kLn2).epsilon(1e-12));
  // independent high-precision evaluation at p = 0.9
  const long double want_v = oracles::bce_pos_ld(0.9L);
  CHECK(term_bce_pos(0.9).value == doctest::Approx(static_cast<double>(want_v)).epsilon(1e-12));
  CHECK(term_bce_pos(0.9).value == doctest::Approx(0.105361).epsilon(1e-4));
  CHECK(term_bce_pos(0.9).d_dp == doctest::Approx(-1.111111).epsilon(1e-5));

  CHECK(term_bce_neg(0.0).value == 0.0);
  CHECK(term_bce_neg(0.5).value == doctest::Approx(kLn2).epsilon(1e-12));
}

TEST_CASE("neg term mirrors pos term under p -> 1-p") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.uniform(1e-6, 1.0 - 1e-6);
    CHECK(term_bce_neg(p).value ==
          doctest::Approx(term_bce_pos(1.0 - p).value).epsilon(1e-12));
  }
}

TEST_CASE("AN at the symmetric point is ln 2") {
  BatchContext ctx = make_ctx({"PUUUU"}, 0.5);
  LossSpec spec;
  spec.kind = LossKind::AN;
  CHECK(std::abs(spml_loss(spec, ctx).value - kLn2) < 1e-9);
}

TEST_CASE("WAN with gamma=1/99 at M=100") {
  std::string row(100, 'U');
  row[17] = 'P';
  BatchContext ctx = make_ctx({row}, 0.5);
  LossSpec spec;
  spec.kind = LossKind::WAN;
  spec.gamma = 1.0 / 99.0;
  // (ln2 + 99 * (1/99) ln2) / 100 = 2 ln2 / 100
  CHECK(std::abs(spml_loss(spec, ctx).value - 2.0 * kLn2 / 100.0) < 1e-9);
  CHECK(spml_loss(spec, ctx).value == doctest::Approx(0.013863).epsilon(1e-4));
}

TEST_CASE("EM unknown term at the symmetric point") {
  BatchContext ctx = make_ctx({"UUUU"}, 0.5);
  LossSpec spec;
  spec.kind = LossKind::EM;
  spec.alpha_em = 0.1;
  CHECK(std::abs(spml_loss(spec, ctx).value - (-0.1 * kLn2)) < 1e-9);
}

TEST_CASE("EM unknown term equals the negative scaled entropy") {
  Rng rng(5);
  LossSpec spec;
  spec.kind = LossKind::EM;
  spec.alpha_em = 0.2;
  for (int trial = 0; trial < 200; ++trial) {
    const double p = clamp_prob(rng.uniform(0.001, 0.999));
    BatchContext ctx = make_ctx({"UU"}, p);
    const double entropy = -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p));
    CHECK(spml_loss(spec, ctx).value == doctest::Approx(-0.2 * entropy).epsilon(1e-10));
  }
  // vanishes toward the endpoints, peaks at 0.5
  BatchContext lo = make_ctx({"UU"}, 1e-6);
  BatchContext mid = make_ctx({"UU"}, 0.5);
  CHECK(std::abs(spml_loss(spec, lo).value) < 1e-4);
  CHECK(std::abs(spml_loss(spec, mid).value) > std::abs(spml_loss(spec, lo).value));
}

TEST_CASE("LS mixture value at eps=0.1") {
  BatchContext ctx = make_ctx({"PUU"}, 0.5);
  LossSpec spec;
  spec.kind = LossKind::LS;
  spec.eps_ls = 0.1;
  // every term mixes to ((1-eps)/2 + eps/2) ln2 = 0.5 ln2
  CHECK(std::abs(spml_loss(spec, ctx).value - 0.5 * kLn2) < 1e-9);
}

TEST_CASE("LS halves the AN objective at eps=0") {
  // the table's (1-eps)/2 coefficients make eps=0 a half-weight AN
  Rng rng(7);
  LossSpec ls;
  ls.kind = LossKind::LS;
  ls.eps_ls = 0.0;
  LossSpec an;
  an.kind = LossKind::AN;
  for (int trial = 0; trial < 50; ++trial) {
    BatchContext ctx = random_ctx(rng, 1 + rng.uniform_below(3), 2 + rng.uniform_below(4), true);
    LossOutput a = spml_loss(ls, ctx);
    LossOutput b = spml_loss(an, ctx);
    // known negatives carry b * L- in both kinds; only P/U terms halve
    BatchContext no_neg = ctx;
    for (auto& v : no_neg.labels)
      for (std::size_t c = 0; c < v.size(); ++c)
        if (v[c] == LabelState::Negative) v.set(c, LabelState::Unknown);
    a = spml_loss(ls, no_neg);
    b = spml_loss(an, no_neg);
    CHECK(a.value == doctest::Approx(0.5 * b.value).epsilon(1e-12));
    for (std::size_t i = 0; i < a.grad_logits.rows(); ++i)
      for (std::size_t c = 0; c < a.grad_logits.cols(); ++c)
        CHECK(a.grad_logits(i, c) == doctest::Approx(0.5 * b.grad_logits(i, c)).epsilon(1e-12));
  }
}

TEST_CASE("reduction: WAN(gamma=1) == AN") {
  Rng rng(11);
  LossSpec wan;
  wan.kind = LossKind::WAN;
  wan.gamma = 1.0;
  LossSpec an;
  an.kind = LossKind::AN;
  for (int trial = 0; trial < 50; ++trial) {
    BatchContext ctx = random_ctx(rng, 1 + rng.uniform_below(4), 2 + rng.uniform_below(5), true);
    check_same(spml_loss(wan, ctx), spml_loss(an, ctx));
  }
}

TEST_CASE("reduction: LL variants at epoch 1 == AN") {
  Rng rng(13);
  LossSpec an;
  an.kind = LossKind::AN;
  for (LossKind kind : {LossKind::LLR, LossKind::LLCt, LossKind::LLCp}) {
    LossSpec ll;
    ll.kind = kind;
    ll.delta_rel = 0.4;
    for (int trial = 0; trial < 30; ++trial) {
      BatchContext ctx = random_ctx(rng, 1 + rng.uniform_below(4), 2 + rng.uniform_below(5), true);
      ctx.epoch = 1;
      FlipStore flips;
      ctx.flip_store = &flips;
      check_same(spml_loss(ll, ctx), spml_loss(an, ctx));
      CHECK(flips.size() == 0);
    }
  }
}

TEST_CASE("reduction: AN on a fully labeled batch == BCE-Full") {
  Rng rng(17);
  LossSpec an;
  an.kind = LossKind::AN;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t batch = 1 + rng.uniform_below(4);
    const std::size_t m = 2 + rng.uniform_below(5);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < batch; ++i) {
      std::string row(m, 'N');
      for (std::size_t c = 0; c < m; ++c)
        if (rng.uniform() < 0.5) row[c] = 'P';
      labels.push_back(row);
    }
    BatchContext ctx = make_ctx(labels, 0.5);
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t c = 0; c < m; ++c)
        ctx.probs(i, c) = clamp_prob(1.0 / (1.0 + std::exp(-rng.uniform(-3.0, 3.0))));
    check_same(spml_loss(an, ctx), loss_bce_full(ctx));
  }
}

TEST_CASE("prior combinator with a=1,b=1 and no Unknowns == BCE-Full") {
  Rng rng(19);
  // LS is excluded: its positive term mixes in (eps/2) L- by definition
  for (LossKind kind : {LossKind::AN, LossKind::WAN, LossKind::EM, LossKind::LLR}) {
    LossSpec spec;
    spec.kind = kind;
    spec.a = 1;
    spec.b = 1.0;
    spec.delta_rel = 0.3;
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t batch = 1 + rng.uniform_below(3);
      const std::size_t m = 2 + rng.uniform_below(5);
      std::vector<std::string> labels;
      for (std::size_t i = 0; i < batch; ++i) {
        std::string row(m, 'N');
        row[rng.uniform_below(m)] = 'P';
        labels.push_back(row);
      }
      BatchContext ctx = make_ctx(labels, 0.5, 4);
      for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t c = 0; c < m; ++c)
          ctx.probs(i, c) = clamp_prob(1.0 / (1.0 + std::exp(-rng.uniform(-3.0, 3.0))));
      check_same(spml_loss(spec, ctx), loss_bce_full(ctx));
    }
  }
}

TEST_CASE("combinator a=0 silences unknown terms") {
  BatchContext ctx = make_ctx({"PUUN"}, 0.3);
  LossSpec spec;
  spec.kind = LossKind::EM;
  spec.a = 0;
  spec.b = 2.0;
  const double expect =
      (term_bce_pos(0.3).value + 0.0 + 0.0 + 2.0 * term_bce_neg(0.3).value) / 4.0;
  CHECK(spml_loss(spec, ctx).value == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("bce-full rejects Unknown labels") {
  BatchContext ctx = make_ctx({"PU"}, 0.5);
  CHECK_THROWS_AS(loss_bce_full(ctx), std::invalid_argument);
}

TEST_CASE("bce-full hand example and gradient identity") {
  BatchContext ctx = make_ctx({"PN"}, 0.5);
  ctx.probs(0, 0) = 0.8;
  ctx.probs(0, 1) = 0.3;
  LossOutput out = loss_bce_full(ctx);
  CHECK(out.value == doctest::Approx(0.2899092).epsilon(1e-5));
  CHECK(out.value ==
        doctest::Approx((-std::log(0.8) - std::log(0.7)) / 2.0).epsilon(1e-12));
  // d/dz = (p - y)/M
  CHECK(out.grad_logits(0, 0) == doctest::Approx((0.8 - 1.0) / 2.0).epsilon(1e-12));
  CHECK(out.grad_logits(0, 1) == doctest::Approx((0.3 - 0.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("bce-full at p == y is tiny") {
  BatchContext ctx = make_ctx({"PN"}, 0.5);
  ctx.probs(0, 0) = clamp_prob(1.0);
  ctx.probs(0, 1) = clamp_prob(0.0);
  CHECK(loss_bce_full(ctx).value <= 2.0 * -std::log(1.0 - 1e-7));
}

TEST_CASE("ll_select: epoch 1 never selects") {
  std::vector<char> mask = ll_select({3, 1, 2, 5}, 1, 50.0);
  for (char c : mask) CHECK(c == 0);
}

TEST_CASE("ll_select: worked example") {
  std::vector<char> mask = ll_select({3, 1, 2, 5}, 2, 50.0);
  CHECK(mask[0] == 1);  // 3
  CHECK(mask[1] == 0);
  CHECK(mask[2] == 0);
  CHECK(mask[3] == 1);  // 5
}

TEST_CASE("ll_select: schedule arithmetic at delta 0.4") {
  // fraction = 9 * 0.4 / 100 = 0.036 -> floor(0.036 * 1000) = 36 entries
  std::vector<double> losses(1000);
  std::iota(losses.begin(), losses.end(), 0.0);
  std::vector<char> mask = ll_select(losses, 10, 0.4);
  int n = 0;
  for (char c : mask) n += c;
  CHECK(n == 36);
}

TEST_CASE("ll_select matches a brute-force sort oracle") {
  Rng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.uniform_below(40);
    std::vector<double> losses(n);
    for (double& v : losses) v = static_cast<double>(rng.uniform_below(10));  // ties likely
    const int epoch = 1 + static_cast<int>(rng.uniform_below(12));
    const double delta = rng.uniform(0.0, 15.0);
    std::vector<char> mask = ll_select(losses, epoch, delta);

    const double fraction = std::min(1.0, (epoch - 1) * delta / 100.0);
    const std::size_t k = static_cast<std::size_t>(std::floor(fraction * n));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });
    std::vector<char> want(n, 0);
    for (std::size_t i = 0; i < k; ++i) want[idx[i]] = 1;
    CHECK(mask == want);
  }
}

TEST_CASE("ll_select: selections grow monotonically with the fraction") {
  Rng rng(29);
  std::vector<double> losses(60);
  for (double& v : losses) v = rng.uniform(0.0, 4.0);
  std::vector<char> prev(losses.size(), 0);
  for (int epoch = 1; epoch <= 11; ++epoch) {
    std::vector<char> mask = ll_select(losses, epoch, 10.0);
    for (std::size_t i = 0; i < losses.size(); ++i)
      if (prev[i]) CHECK(mask[i] == 1);  // superset of the previous mask
    prev = mask;
  }
  // at fraction >= 1 everything is selected
  bool clamped = false;
  std::vector<char> all = ll_select(losses, 12, 10.0, &clamped);
  CHECK(clamped);
  for (char c : all) CHECK(c == 1);
}

TEST_CASE("ll-r zeroes selected terms; ll-ct converts them") {
  BatchContext ctx = make_ctx({"PUU"}, 0.5, 2);
  ctx.probs(0, 1) = 0.9;  // largest assumed-negative loss
  ctx.probs(0, 2) = 0.2;
  LossSpec llr;
  llr.kind = LossKind::LLR;
  llr.delta_rel = 50.0;  // fraction 0.5 of 2 candidates -> k = 1
  LossOutput r = spml_loss(llr, ctx);
  CHECK(r.ll_selected_count == 1);
  const double expect_r = (term_bce_pos(0.5).value + 0.0 + term_bce_neg(0.2).value) / 3.0;
  CHECK(r.value == doctest::Approx(expect_r).epsilon(1e-12));

  LossSpec llct = llr;
  llct.kind = LossKind::LLCt;
  LossOutput t = spml_loss(llct, ctx);
  const double expect_t =
      (term_bce_pos(0.5).value + term_bce_pos(0.9).value + term_bce_neg(0.2).value) / 3.0;
  CHECK(t.value == doctest::Approx(expect_t).epsilon(1e-12));
}

TEST_CASE("known negatives are never rejected") {
  BatchContext ctx = make_ctx({"PNU"}, 0.5, 11);
  ctx.probs(0, 1) = 0.99;  // enormous loss, but a known negative
  ctx.probs(0, 2) = 0.01;
  LossSpec llr;
  llr.kind = LossKind::LLR;
  llr.delta_rel = 10.0;  // fraction 1.0 -> every candidate selected
  LossOutput out = spml_loss(llr, ctx);
  CHECK(out.ll_selected_count == 1);  // only the Unknown entry
  // the known negative still contributes b * L-
  const double expect = (term_bce_pos(0.5).value + term_bce_neg(0.99).value + 0.0) / 3.0;
  CHECK(out.value == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ll-cp flips persist across batches") {
  FlipStore flips;
  BatchContext ctx = make_ctx({"PUU"}, 0.5, 3);
  ctx.flip_store = &flips;
  ctx.probs(0, 1) = 0.95;
  ctx.probs(0, 2) = 0.1;
  LossSpec llcp;
  llcp.kind = LossKind::LLCp;
  llcp.delta_rel = 25.0;  // fraction 0.5 of 2 candidates -> 1 selected
  LossOutput first = spml_loss(llcp, ctx);
  CHECK(first.ll_selected_count == 1);
  CHECK(flips.is_flipped(0, 1));

  // same example at epoch 1 (no fresh selection): the flip still applies
  BatchContext later = make_ctx({"PUU"}, 0.5, 1);
  later.flip_store = &flips;
  later.probs(0, 1) = 0.4;
  later.probs(0, 2) = 0.4;
  LossOutput second = spml_loss(llcp, later);
  const double expect =
      (term_bce_pos(0.5).value + term_bce_pos(0.4).value + term_bce_neg(0.4).value) / 3.0;
  CHECK(second.value == doctest::Approx(expect).epsilon(1e-12));
  CHECK(second.ll_selected_count == 0);
}

TEST_CASE("role: estimate gradient vanishes where estimates match predictions") {
  BatchContext ctx = make_ctx({"UUUU"}, 0.5);
  RoleState role;
  role.estimates = Matrix(1, 4, 0.5);
  LossOutput out = role_step(role, ctx, 0.0, 1);
  for (std::size_t c = 0; c < 4; ++c)
    CHECK(std::abs(out.grad_estimates(0, c)) < 1e-12);
}

TEST_CASE("role: expected-positive regularizer value") {
  std::string row(100, 'U');
  BatchContext ctx = make_ctx({row}, 0.5);
  RoleState role;
  role.estimates = Matrix(1, 100, 0.5);
  LossOutput with_reg = role_step(role, ctx, 1.0, 1);
  LossOutput without = role_step(role, ctx, 0.0, 1);
  CHECK(std::abs((with_reg.value - without.value) - 0.2401) < 1e-9);
}

TEST_CASE("role: gradients match finite differences on a 3x4 instance") {
  Rng rng(43);
  BatchContext ctx = make_ctx({"PUUU", "UPUU", "UUUN"}, 0.5, 1);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 4; ++c)
      ctx.probs(i, c) = clamp_prob(1.0 / (1.0 + std::exp(-rng.uniform(-2.0, 2.0))));
  RoleState role;
  role.estimates = Matrix(3, 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 4; ++c)
      role.estimates(i, c) = ctx.labels[i][c] == LabelState::Positive ? 1.0 : rng.uniform(0.2, 0.8);

  LossSpec spec;
  spec.kind = LossKind::ROLE;
  spec.lambda_role = 1.0;
  LossOutput base = spml_loss(spec, ctx, &role);
  const double h = 1e-6;
  double max_rel = 0.0;
  // z side
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t c = 0; c < 4; ++c) {
      const double z = std::log(ctx.probs(i, c) / (1.0 - ctx.probs(i, c)));
      auto eval = [&](double zz) {
        BatchContext ctx2 = ctx;
        ctx2.probs(i, c) = clamp_prob(1.0 / (1.0 + std::exp(-zz)));
        return spml_loss_masked(spec, ctx2, {}, &role).value_logit_path;
      };
      const double fd = (eval(z + h) - eval(z - h)) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(base.grad_logits(i, c)), 1e-8});
      max_rel = std::max(max_rel, std::abs(fd - base.grad_logits(i, c)) / denom);
    }
  }
  // estimate side (skip pinned entries)
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (ctx.labels[i][c] == LabelState::Positive) continue;
      auto eval = [&](double delta) {
        RoleState r2 = role;
        r2.estimates(i, c) += delta;
        return spml_loss_masked(spec, ctx, {}, &r2).value_estimate_path;
      };
      const double fd = (eval(h) - eval(-h)) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(base.grad_estimates(i, c)), 1e-8});
      max_rel = std::max(max_rel, std::abs(fd - base.grad_estimates(i, c)) / denom);
    }
  }
  CHECK(max_rel < 1e-5);
}

TEST_CASE("role requires state") {
  BatchContext ctx = make_ctx({"PU"}, 0.5);
  LossSpec spec;
  spec.kind = LossKind::ROLE;
  CHECK_THROWS_AS(spml_loss(spec, ctx), std::invalid_argument);
}

TEST_CASE("role state init lands in [0.4, 0.6] deterministically") {
  RoleState a = RoleState::init(200, 10, 77);
  RoleState b = RoleState::init(200, 10, 77);
  CHECK(a.estimates == b.estimates);
  for (double v : a.estimates.data()) {
    CHECK(v >= 0.4);
    CHECK(v <= 0.6);
  }
}

TEST_CASE("loss presets carry the reported hyperparameters") {
  CHECK(loss_preset("l48-targetonly-wan").gamma == doctest::Approx(1.0 / 99.0));
  CHECK(loss_preset("coco-targetonly-wan").gamma == doctest::Approx(1.0 / 79.0));
  CHECK(loss_preset("l48-targetonly-ls").eps_ls == 0.1);
  CHECK(loss_preset("coco-targetonly-ll-r").delta_rel == 0.4);
  CHECK(loss_preset("l48-targetonly-ll-ct").delta_rel == 0.1);
  CHECK(loss_preset("l48-targetonly-em").alpha_em == 0.2);
  CHECK(loss_preset("coco-targetonly-role").lambda_role == 1.0);
  CHECK(loss_preset("coco-geo-em").a == 1);
  CHECK(loss_preset("coco-geo-em").b == 0.01);
  CHECK(loss_preset("l48-checklist-ls").a == 1);
  CHECK(loss_preset("l48-checklist-ls").b == 1.0);
  CHECK_THROWS_AS(loss_preset("nope"), std::invalid_argument);
  for (const std::string& name : loss_preset_names()) CHECK_NOTHROW(loss_preset(name));
}

TEST_CASE("loss spec invariants are enforced") {
  LossSpec s;
  s.gamma = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = LossSpec{};
  s.eps_ls = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = LossSpec{};
  s.a = 2;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = LossSpec{};
  s.b = -0.5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
