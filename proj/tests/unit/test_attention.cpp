#include <doctest.h>

#include <cmath>
#include <set>

#include "../support/gradients.hpp"
#include "../support/oracles.hpp"
#include "higenet/attention.hpp"

using namespace higenet;

namespace {

void check_row(const Tensor& got, std::size_t r, const std::vector<double>& expect, double tol = 1e-12) {
  for (std::size_t c = 0; c < expect.size(); ++c) CHECK(got(r, c) == doctest::Approx(expect[c]).epsilon(tol));
}

std::vector<double> random_scores(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  std::vector<double> s(n);
  for (double& x : s) x = d(rng);
  return s;
}

}  // namespace

TEST_CASE("top-n count examples") {
  CHECK(top_n_count(96, 5.0) == 23);
  CHECK(top_n_count(1, 5.0) == 1);
  CHECK(top_n_count(8, 5.0) == 8);
  CHECK(top_n_count(8, 1.0) == 3);
  CHECK(top_n_count(2, 1.0) == 1);
  CHECK(top_n_count(1024, 5.0) == 35);
  CHECK_THROWS(top_n_count(0, 5.0));
}

TEST_CASE("query selection keeps the n largest, ties to the lower index") {
  const std::vector<double> s{0.1, 0.9, 0.5, 0.9, 0.2, 0.3, 0.8, 0.0};
  CHECK(select_top_queries(s, 1.0) == std::vector<std::size_t>{1, 3, 6});
  const std::vector<double> flat(8, 1.0);
  CHECK(select_top_queries(flat, 1.0) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("canonical attention examples") {
  // Identical keys: uniform weights, output is the mean of V.
  const Tensor q = Tensor::from_rows({{1, 2}, {-3, 0.5}});
  const Tensor k = Tensor::from_rows({{1, 1}, {1, 1}, {1, 1}});
  const Tensor v = Tensor::from_rows({{1, 0}, {2, 3}, {6, 3}});
  const Tensor out = canonical_attention(q, k, v);
  for (std::size_t r = 0; r < 2; ++r) check_row(out, r, {3.0, 2.0});

  // One dominant key.
  const Tensor q1 = Tensor::from_rows({{100, 0}});
  const Tensor k1 = Tensor::from_rows({{1, 0}, {0, 1}});
  const Tensor v1 = Tensor::from_rows({{7, -1}, {0, 5}});
  check_row(canonical_attention(q1, k1, v1), 0, {7.0, -1.0}, 1e-9);

  ScoreBudget budget;
  canonical_attention(Tensor::matrix(5, 4), Tensor::matrix(7, 4), Tensor::matrix(7, 3), nullptr, &budget);
  CHECK(budget.dot_products == 35);

  CHECK_THROWS(canonical_attention(Tensor::matrix(3, 4), Tensor::matrix(3, 5), Tensor::matrix(3, 2)));
  CHECK_THROWS(canonical_attention(Tensor::matrix(3, 4), Tensor::matrix(3, 4), Tensor::matrix(2, 2)));
}

TEST_CASE("canonical attention matches the brute-force oracle, masked and unmasked") {
  std::mt19937_64 rng(1);
  const Tensor q = oracle::random_matrix(9, 4, rng), k = oracle::random_matrix(9, 4, rng),
               v = oracle::random_matrix(9, 3, rng);
  const ops::Mask causal = ops::Mask::causal(9);
  for (bool masked : {false, true}) {
    const Tensor got = canonical_attention(q, k, v, masked ? &causal : nullptr);
    const auto expect = oracle::dense_attention(oracle::to_mat(q), oracle::to_mat(k), oracle::to_mat(v), masked);
    for (std::size_t r = 0; r < 9; ++r) check_row(got, r, expect[r]);
  }
}

TEST_CASE("neural sparse attention: selected rows are dense, lazy rows get mean(V)") {
  std::mt19937_64 rng(4);
  const std::size_t L = 40;
  const Tensor q = oracle::random_matrix(L, 6, rng), k = oracle::random_matrix(L, 6, rng),
               v = oracle::random_matrix(L, 5, rng);
  const auto importance = random_scores(L, rng);
  const auto r = neural_sparse_attention(q, k, v, importance, 2.0);
  const std::size_t n = top_n_count(L, 2.0);
  CHECK(r.selected.size() == n);
  CHECK(r.selected == select_top_queries(importance, 2.0));
  CHECK(r.budget.dot_products == n * L);
  CHECK(r.budget.rows_selected == n);

  const auto qm = oracle::to_mat(q), km = oracle::to_mat(k), vm = oracle::to_mat(v);
  const auto mean = oracle::column_means(vm);
  const std::set<std::size_t> chosen(r.selected.begin(), r.selected.end());
  for (std::size_t i = 0; i < L; ++i) {
    check_row(r.output, i, chosen.count(i) ? oracle::attention_row(qm, km, vm, i, L) : mean);
  }
}

TEST_CASE("neural sparse attention equals canonical when every query is selected") {
  std::mt19937_64 rng(5);
  const Tensor q = oracle::random_matrix(6, 4, rng), k = oracle::random_matrix(6, 4, rng),
               v = oracle::random_matrix(6, 4, rng);
  const auto importance = random_scores(6, rng);
  const auto sparse = neural_sparse_attention(q, k, v, importance, 5.0);
  const Tensor dense = canonical_attention(q, k, v);
  for (std::size_t i = 0; i < dense.size(); ++i) CHECK(sparse.output[i] == doctest::Approx(dense[i]).epsilon(1e-13));

  const ops::Mask causal = ops::Mask::causal(6);
  const auto msparse = masked_neural_sparse_attention(q, k, v, importance, 5.0);
  const Tensor mdense = canonical_attention(q, k, v, &causal);
  for (std::size_t i = 0; i < mdense.size(); ++i) CHECK(msparse.output[i] == doctest::Approx(mdense[i]).epsilon(1e-13));
}

TEST_CASE("masked neural sparse attention fills lazy rows causally") {
  std::mt19937_64 rng(6);
  const std::size_t L = 30;
  const Tensor q = oracle::random_matrix(L, 4, rng), k = oracle::random_matrix(L, 4, rng),
               v = oracle::random_matrix(L, 3, rng);
  const auto importance = random_scores(L, rng);
  const auto qm = oracle::to_mat(q), km = oracle::to_mat(k), vm = oracle::to_mat(v);
  const auto prefix = oracle::prefix_sums(vm);
  for (CausalFill fill : {CausalFill::cumsum, CausalFill::running_mean}) {
    const auto r = masked_neural_sparse_attention(q, k, v, importance, 1.0, fill);
    const std::set<std::size_t> chosen(r.selected.begin(), r.selected.end());
    for (std::size_t i = 0; i < L; ++i) {
      if (chosen.count(i)) {
        check_row(r.output, i, oracle::attention_row(qm, km, vm, i, i + 1));
      } else {
        std::vector<double> expect = prefix[i];
        if (fill == CausalFill::running_mean)
          for (double& x : expect) x /= static_cast<double>(i + 1);
        check_row(r.output, i, expect);
      }
    }
  }
}

TEST_CASE("masked kernels never read the future") {
  std::mt19937_64 rng(7);
  const std::size_t L = 24, t = 11;
  const Tensor q = oracle::random_matrix(L, 4, rng), k = oracle::random_matrix(L, 4, rng),
               v = oracle::random_matrix(L, 4, rng);
  Tensor k2 = k, v2 = v;
  for (std::size_t j = t + 1; j < L; ++j)
    for (std::size_t c = 0; c < 4; ++c) {
      k2(j, c) += 10.0;
      v2(j, c) -= 7.0;
    }
  const auto importance = random_scores(L, rng);
  const auto a = masked_neural_sparse_attention(q, k, v, importance, 1.0);
  const auto b = masked_neural_sparse_attention(q, k2, v2, importance, 1.0);
  Rng r1(3), r2(3);
  const auto pa = prob_sparse_attention(q, k, v, 1.0, true, r1);
  const auto pb = prob_sparse_attention(q, k2, v2, 1.0, true, r2);
  const ops::Mask causal = ops::Mask::causal(L);
  const Tensor ca = canonical_attention(q, k, v, &causal);
  const Tensor cb = canonical_attention(q, k2, v2, &causal);
  for (std::size_t i = 0; i <= t; ++i)
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(a.output(i, c) == b.output(i, c));
      CHECK(ca(i, c) == cb(i, c));
      // The sparsity ranking may look at later keys; only rows that share a
      // selection decision are comparable.
      if (pa.selected == pb.selected) CHECK(pa.output(i, c) == pb.output(i, c));
    }
}

TEST_CASE("importance scores are a conv over Q + K") {
  std::mt19937_64 rng(8);
  const Tensor q = oracle::random_matrix(10, 6, rng), k = oracle::random_matrix(10, 6, rng);
  const Tensor kernel = Tensor::normal({3, 6, 3}, 1.0, rng);
  const Tensor bias = Tensor::normal({3}, 1.0, rng);
  Tensor sum = q;
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += k[i];
  const std::vector<double> b(bias.values().begin(), bias.values().end());
  const auto expect = oracle::conv1d(oracle::to_mat(sum), oracle::kernel_from_tensor(kernel), 1, &b);
  const Tensor got = importance_scores(q, k, kernel, &bias);
  REQUIRE(got.rows() == 10);
  REQUIRE(got.cols() == 3);
  for (std::size_t r = 0; r < 10; ++r) check_row(got, r, expect[r]);
}

TEST_CASE("prob sparse sampling and sparsity measure") {
  Rng rng(11);
  const auto keys = sample_keys(96, 5.0, rng);
  CHECK(keys.size() == 23);
  CHECK(std::is_sorted(keys.begin(), keys.end()));
  CHECK(std::set<std::size_t>(keys.begin(), keys.end()).size() == keys.size());
  CHECK(keys.back() < 96);
  CHECK(sample_keys(1, 5.0, rng) == std::vector<std::size_t>{0});

  const Tensor q = Tensor::from_rows({{1, 0}, {0, 0}});
  const Tensor k = Tensor::from_rows({{2, 0}, {0, 0}, {-2, 0}});
  const std::vector<std::size_t> all{0, 1, 2};
  const Tensor m = sparsity_measure(q, k, all);
  // Row 0 scores: {2, 0, -2}/√2; max − mean = 2/√2.
  CHECK(m[0] == doctest::Approx(2.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(m[1] == 0.0);
}

TEST_CASE("prob sparse attention budget and structure") {
  std::mt19937_64 gen(12);
  const std::size_t L = 64;
  const Tensor q = oracle::random_matrix(L, 4, gen), k = oracle::random_matrix(L, 4, gen),
               v = oracle::random_matrix(L, 4, gen);
  Rng rng(1);
  const auto r = prob_sparse_attention(q, k, v, 2.0, false, rng);
  const std::size_t n = top_n_count(L, 2.0);
  CHECK(r.selected.size() == n);
  CHECK(r.budget.dot_products == L * n + n * L);
  const auto mean = oracle::column_means(oracle::to_mat(v));
  const std::set<std::size_t> chosen(r.selected.begin(), r.selected.end());
  for (std::size_t i = 0; i < L; ++i)
    if (!chosen.count(i)) check_row(r.output, i, mean);

  Rng again(1);
  const auto r2 = prob_sparse_attention(q, k, v, 2.0, false, again);
  CHECK(r2.selected == r.selected);
}

TEST_CASE("sparse kinds reject cross-attention shapes") {
  std::mt19937_64 rng(2);
  const Tensor q = oracle::random_matrix(5, 4, rng), k = oracle::random_matrix(7, 4, rng),
               v = oracle::random_matrix(7, 4, rng);
  const std::vector<double> imp(5, 0.0);
  CHECK_THROWS(neural_sparse_attention(q, k, v, imp, 5.0));
  Rng r(0);
  CHECK_THROWS(prob_sparse_attention(q, k, v, 5.0, false, r));
  CHECK_THROWS(AttentionConfig{3, 8}.validate());
  CHECK_THROWS(AttentionConfig{2, 8, 0.5}.validate());
}

TEST_CASE("multi-head budget law: dense L^2 per head, neural n·L per head") {
  std::mt19937_64 rng(3);
  const std::size_t L = 48, d = 8, heads = 2;
  const Tensor x = oracle::random_matrix(L, d, rng);
  for (AttentionKind kind : {AttentionKind::canonical, AttentionKind::neural_sparse,
                             AttentionKind::masked_neural_sparse, AttentionKind::prob_sparse}) {
    ParamStore store;
    AttentionConfig cfg{heads, d, 2.0, kind};
    const auto mha = MultiHeadAttention::create(store, "att", cfg, rng);
    Tape tape(false);
    Binder bind{tape, store};
    ForwardContext ctx;
    ScoreBudget budget;
    Var in = tape.constant(x);
    const Tensor out = mha(bind, in, in, ctx, &budget).value();
    CHECK(out.rows() == L);
    CHECK(out.cols() == d);
    const std::size_t n = top_n_count(L, 2.0);
    switch (kind) {
      case AttentionKind::canonical: CHECK(budget.dot_products == heads * L * L); break;
      case AttentionKind::prob_sparse: CHECK(budget.dot_products == heads * (L * n + n * L)); break;
      default: CHECK(budget.dot_products == heads * n * L); break;
    }
  }
}

TEST_CASE("single-head neural sparse with identity projections matches the plain kernel") {
  std::mt19937_64 rng(9);
  const std::size_t L = 20, d = 4;
  ParamStore store;
  const auto mha = MultiHeadAttention::create(store, "att", {1, d, 1.0, AttentionKind::neural_sparse}, rng);
  for (ParamId id : {mha.w_q, mha.w_k, mha.w_v, mha.w_o}) {
    Tensor& w = store[id];
    w.fill(0.0);
    for (std::size_t i = 0; i < d; ++i) w(i, i) = 1.0;
  }
  const Tensor x = oracle::random_matrix(L, d, rng);
  Tape tape(false);
  Binder bind{tape, store};
  ForwardContext ctx;
  Var in = tape.constant(x);
  const Tensor got = mha(bind, in, in, ctx).value();
  const Tensor imp = importance_scores(x, x, store[mha.importance->kernel], &store[*mha.importance->bias]);
  const auto expect = neural_sparse_attention(x, x, x, imp.values(), 1.0);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(expect.output[i]).epsilon(1e-13));
}

TEST_CASE("multi-head gradients match finite differences") {
  std::mt19937_64 rng(10);
  const std::size_t L = 6, d = 4;
  const Tensor x = oracle::random_matrix(L, d, rng);
  // With c = 5 and L = 6 every query is selected, so the objective is smooth.
  for (AttentionKind kind : {AttentionKind::canonical, AttentionKind::neural_sparse,
                             AttentionKind::masked_neural_sparse, AttentionKind::masked_prob_sparse}) {
    ParamStore store;
    const auto mha = MultiHeadAttention::create(store, "att", {2, d, 5.0, kind}, rng);
    auto f = [&](Tape& tape, ParamStore& p) {
      Binder bind{tape, p};
      ForwardContext ctx;
      Var in = tape.constant(x);
      return gradtest::probe_sum(tape, mha(bind, in, in, ctx), 5);
    };
    const auto report = finite_diff_check(f, store);
    INFO(attention_kind_name(kind), " worst ", report.worst_param);
    // The importance conv only ranks queries and receives no gradient.
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("sparse selection with lazy rows still differentiates through V") {
  std::mt19937_64 rng(14);
  const std::size_t L = 16, d = 4;
  const Tensor x = oracle::random_matrix(L, d, rng);
  ParamStore store;
  const auto mha = MultiHeadAttention::create(store, "att", {1, d, 1.0, AttentionKind::masked_neural_sparse}, rng);
  auto f = [&](Tape& tape, ParamStore& p) {
    Binder bind{tape, p};
    ForwardContext ctx;
    Var in = tape.constant(x);
    return gradtest::probe_sum(tape, mha(bind, in, in, ctx), 6);
  };
  CHECK(finite_diff_check(f, store, 1e-6).max_rel_error < 1e-4);
}

TEST_CASE("small attention examples") {
  std::mt19937_64 rng(21);
  // A single key: every query returns v_0.
  const Tensor q = oracle::random_matrix(4, 3, rng);
  const Tensor k1 = oracle::random_matrix(1, 3, rng);
  const Tensor v1 = Tensor::from_rows({{2.5, -1.0}});
  const Tensor single = canonical_attention(q, k1, v1);
  for (std::size_t r = 0; r < 4; ++r) check_row(single, r, {2.5, -1.0});

  // q = 50·e_2 among orthogonal unit keys picks v_2.
  const Tensor qa = Tensor::from_rows({{0, 0, 50}});
  const Tensor ka = Tensor::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const Tensor va = Tensor::from_rows({{1, 0}, {0, 1}, {4, 4}});
  const Tensor aligned = canonical_attention(qa, ka, va);
  CHECK(std::abs(aligned(0, 0) - 4.0) < 1e-6);
  CHECK(std::abs(aligned(0, 1) - 4.0) < 1e-6);
}

TEST_CASE("importance score examples") {
  std::mt19937_64 rng(22);
  const Tensor q = oracle::random_matrix(5, 2, rng);
  Tensor minus_q = q;
  for (double& x : minus_q.values()) x = -x;
  const Tensor kernel = Tensor::normal({2, 2, 3}, 1.0, rng);
  const Tensor bias({2}, std::vector<double>{0.25, -1.5});
  const Tensor cancelled = importance_scores(q, minus_q, kernel, &bias);
  for (std::size_t r = 0; r < 5; ++r) check_row(cancelled, r, {0.25, -1.5});

  // Identity tap on channel 0.
  Tensor tap({1, 2, 3});
  tap[1] = 1.0;
  const Tensor k = oracle::random_matrix(5, 2, rng);
  const Tensor ident = importance_scores(q, k, tap);
  for (std::size_t r = 0; r < 5; ++r) CHECK(ident(r, 0) == doctest::Approx(q(r, 0) + k(r, 0)).epsilon(1e-14));

  // All-ones kernel at L = 4: zero-padded window-3 sums of the channel sum.
  const Tensor q4 = Tensor::from_rows({{1, 0}, {2, 1}, {0, 3}, {-1, 1}});
  const Tensor k4 = Tensor::from_rows({{0, 1}, {1, 0}, {2, 0}, {0, 0}});
  Tensor ones({1, 2, 3});
  ones.fill(1.0);
  // Channel sums per row: 2, 4, 5, 0.
  const Tensor s = importance_scores(q4, k4, ones);
  CHECK(s(0, 0) == 6.0);
  CHECK(s(1, 0) == 11.0);
  CHECK(s(2, 0) == 9.0);
  CHECK(s(3, 0) == 5.0);
}

TEST_CASE("sparse kernel examples") {
  std::mt19937_64 rng(23);
  const std::size_t L = 9;
  const Tensor q = oracle::random_matrix(L, 3, rng), k = oracle::random_matrix(L, 3, rng);
  Tensor v = Tensor::matrix(L, 2);
  for (std::size_t r = 0; r < L; ++r) {
    v(r, 0) = 1.5;
    v(r, 1) = -2.0;
  }
  const auto importance = random_scores(L, rng);
  const auto constant = neural_sparse_attention(q, k, v, importance, 1.0);
  for (std::size_t r = 0; r < L; ++r) check_row(constant.output, r, {1.5, -2.0});

  // Row 0 selected in the causal kernel sees only key 0.
  std::vector<double> first_wins(L, 0.0);
  first_wins[0] = 10.0;
  const Tensor vr = oracle::random_matrix(L, 2, rng);
  const auto masked = masked_neural_sparse_attention(q, k, vr, first_wins, 1.0);
  REQUIRE(masked.selected.front() == 0);
  check_row(masked.output, 0, {vr(0, 0), vr(0, 1)});

  // Lazy rows of V = [[1],[2],[3]] carry the running sums 1, 3, 6.
  const Tensor q3 = oracle::random_matrix(3, 2, rng), k3 = oracle::random_matrix(3, 2, rng);
  const Tensor v3 = Tensor::column({1, 2, 3});
  const auto fills = masked_neural_sparse_attention(q3, k3, v3, std::vector<double>{3.0, 2.0, 1.0}, 0.1);
  REQUIRE(fills.selected == std::vector<std::size_t>{0});
  CHECK(fills.output(1, 0) == 3.0);
  CHECK(fills.output(2, 0) == 6.0);

  // Identical queries give identical M; the lowest indices win.
  Tensor same = Tensor::matrix(L, 3);
  for (std::size_t r = 0; r < L; ++r)
    for (std::size_t c = 0; c < 3; ++c) same(r, c) = 0.5 * static_cast<double>(c) - 0.3;
  Rng r1(4);
  const auto prob = prob_sparse_attention(same, k, vr, 1.0, false, r1);
  std::vector<std::size_t> lowest(top_n_count(L, 1.0));
  for (std::size_t i = 0; i < lowest.size(); ++i) lowest[i] = i;
  CHECK(prob.selected == lowest);

  // Large c selects every query: prob sparse equals dense, causal when masked.
  const ops::Mask causal = ops::Mask::causal(L);
  Rng r2(5), r3(5);
  const auto full = prob_sparse_attention(q, k, vr, 100.0, false, r2);
  const auto full_masked = prob_sparse_attention(q, k, vr, 100.0, true, r3);
  const Tensor dense = canonical_attention(q, k, vr);
  const Tensor dense_causal = canonical_attention(q, k, vr, &causal);
  for (std::size_t i = 0; i < dense.size(); ++i) {
    CHECK(full.output[i] == doctest::Approx(dense[i]).epsilon(1e-12));
    CHECK(full_masked.output[i] == doctest::Approx(dense_causal[i]).epsilon(1e-12));
  }
}

TEST_CASE("multi-head examples") {
  std::mt19937_64 rng(24);
  const std::size_t L = 10, d = 4;
  const Tensor x = oracle::random_matrix(L, d, rng);

  // Zero W_V: no value signal and no projection biases, so the output is zero.
  for (AttentionKind kind : {AttentionKind::canonical, AttentionKind::neural_sparse, AttentionKind::prob_sparse}) {
    ParamStore store;
    const auto mha = MultiHeadAttention::create(store, "att", AttentionConfig{2, d, 1.0, kind}, rng);
    store[mha.w_v].fill(0.0);
    Tape tape(false);
    Binder bind{tape, store};
    ForwardContext ctx;
    Var in = tape.constant(x);
    const Tensor out = mha(bind, in, in, ctx).value();
    for (double value : out.values()) CHECK(value == 0.0);
  }

  // One head, identity projections, canonical kind: plain attention on x.
  ParamStore store;
  const auto mha = MultiHeadAttention::create(store, "att", AttentionConfig{1, d, 5.0, AttentionKind::canonical}, rng);
  for (ParamId id : {mha.w_q, mha.w_k, mha.w_v, mha.w_o}) {
    Tensor& w = store[id];
    w.fill(0.0);
    for (std::size_t i = 0; i < d; ++i) w(i, i) = 1.0;
  }
  Tape tape(false);
  Binder bind{tape, store};
  ForwardContext ctx;
  Var in = tape.constant(x);
  const Tensor out = mha(bind, in, in, ctx).value();
  const Tensor expect = canonical_attention(x, x, x);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(expect[i]).epsilon(1e-12));

  // Neural sparse with every query selected agrees with canonical.
  ParamStore a, b;
  std::mt19937_64 ra(3), rb(3);
  const auto dense = MultiHeadAttention::create(a, "att", AttentionConfig{2, d, 100.0, AttentionKind::canonical}, ra);
  const auto sparse =
      MultiHeadAttention::create(b, "att", AttentionConfig{2, d, 100.0, AttentionKind::neural_sparse}, rb);
  for (ParamId id : {dense.w_q, dense.w_k, dense.w_v, dense.w_o}) b[b.id(a.name(id))] = a[id];
  Tape ta(false), tb(false);
  ForwardContext ca, cb;
  Var ia = ta.constant(x), ib = tb.constant(x);
  const Tensor ya = dense(Binder{ta, a}, ia, ia, ca).value();
  const Tensor yb = sparse(Binder{tb, b}, ib, ib, cb).value();
  for (std::size_t i = 0; i < ya.size(); ++i) CHECK(std::abs(ya[i] - yb[i]) <= 1e-12);
}
