#include <doctest.h>

#include "../support/gradients.hpp"
#include "../support/oracles.hpp"
#include "higenet/encoder.hpp"

using namespace higenet;

namespace {

oracle::Mat elu_conv(const Tensor& x, const ParamStore& store, const DistillParams& p) {
  const Tensor& b = store[*p.conv.bias];
  const std::vector<double> bias(b.values().begin(), b.values().end());
  auto f = oracle::conv1d(oracle::to_mat(x), oracle::kernel_from_tensor(store[p.conv.kernel]), 1, &bias);
  for (auto& row : f)
    for (double& v : row) v = oracle::elu(v);
  return f;
}

}  // namespace

TEST_CASE("encoder output length halves with ceiling per distill") {
  CHECK(encoder_output_length(96, 3) == 24);
  CHECK(encoder_output_length(96, 1) == 96);
  CHECK(encoder_output_length(7, 2) == 4);
  CHECK(encoder_output_length(7, 3) == 2);
  CHECK(encoder_output_length(5, 4) == 1);
  CHECK_THROWS(encoder_output_length(2, 3));
  CHECK_THROWS(encoder_output_length(8, 0));
}

TEST_CASE("distill step examples") {
  std::mt19937_64 rng(1);
  ParamStore store;
  const auto p = DistillParams::create(store, "d", 4, rng);
  CHECK(store[p.gamma][0] == 1.0);
  store[p.conv.kernel].fill(0.0);
  store[*p.conv.bias].fill(0.0);

  // With a silent conv branch only the residual down-sampling remains.
  Tape tape(false);
  Binder bind{tape, store};
  const Tensor flat = Tensor::matrix(6, 4, 1.5);
  const Tensor out = distill_step(bind, tape.constant(flat), p).value();
  CHECK(out.rows() == 3);
  for (double v : out.values()) CHECK(v == 1.5);
  const Tensor mp = distill_step(bind, tape.constant(flat), p, DistillKind::informer_maxpool).value();
  for (double v : mp.values()) CHECK(v == 0.0);

  CHECK_THROWS(distill_step(bind, tape.constant(Tensor::matrix(1, 4)), p));
}

TEST_CASE("distill step matches an independent composition of conv, ELU and pooling") {
  std::mt19937_64 rng(2);
  ParamStore store;
  const auto p = DistillParams::create(store, "d", 5, rng);
  store[p.gamma][0] = 0.37;
  for (std::size_t L : {2, 7, 12}) {
    const Tensor x = oracle::random_matrix(L, 5, rng);
    Tape tape(false);
    Binder bind{tape, store};
    const Tensor got = distill_step(bind, tape.constant(x), p).value();
    const Tensor maxonly = distill_step(bind, tape.constant(x), p, DistillKind::informer_maxpool).value();
    const auto f = elu_conv(x, store, p);
    const auto mp = oracle::pool(f, true, 3, 2, 1);
    const auto ap = oracle::pool(f, false, 3, 2, 1);
    const auto ds = oracle::pool(oracle::to_mat(x), false, 3, 2, 1);
    REQUIRE(got.rows() == (L + 1) / 2);
    for (std::size_t r = 0; r < got.rows(); ++r)
      for (std::size_t c = 0; c < 5; ++c) {
        CHECK(got(r, c) == doctest::Approx(mp[r][c] + 0.37 * ap[r][c] + ds[r][c]).epsilon(1e-12));
        CHECK(maxonly(r, c) == doctest::Approx(mp[r][c]).epsilon(1e-12));
      }
  }
}

TEST_CASE("distill gradients, including gamma") {
  std::mt19937_64 rng(3);
  ParamStore store;
  const auto p = DistillParams::create(store, "d", 3, rng);
  const Tensor x = oracle::random_matrix(9, 3, rng);
  for (DistillKind kind : {DistillKind::higenet, DistillKind::informer_maxpool}) {
    auto f = [&](Tape& tape, ParamStore& ps) {
      Binder bind{tape, ps};
      return gradtest::probe_sum(tape, distill_step(bind, tape.constant(x), p, kind), 4);
    };
    const auto report = finite_diff_check(f, store);
    INFO(distill_kind_name(kind), " worst ", report.worst_param);
    CHECK(report.max_rel_error < 1e-4);
  }
  // gamma carries gradient only in the full variant.
  store.zero_grad();
  Tape tape;
  Binder bind{tape, store};
  tape.backward(gradtest::probe_sum(tape, distill_step(bind, tape.constant(x), p), 4));
  CHECK(store[p.gamma].grad()[0] != 0.0);
}

TEST_CASE("encoder stack shape, determinism and gradients") {
  std::mt19937_64 rng(4);
  EncoderConfig cfg;
  cfg.n_blocks = 3;
  cfg.attention = AttentionConfig{2, 8, 5.0, AttentionKind::neural_sparse};
  ParamStore store;
  const auto enc = Encoder::create(store, "enc", cfg, rng);
  CHECK(enc.blocks.size() == 3);
  CHECK(enc.distills.size() == 2);

  const Tensor x = oracle::random_matrix(12, 8, rng);
  auto run = [&]() {
    Tape tape(false);
    Binder bind{tape, store};
    ForwardContext ctx;
    return enc(bind, tape.constant(x), ctx).value();
  };
  const Tensor a = run();
  CHECK(a.rows() == encoder_output_length(12, 3));
  CHECK(a.cols() == 8);
  const Tensor b = run();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  ParamStore small;
  EncoderConfig scfg = cfg;
  scfg.n_blocks = 2;
  scfg.attention.n_heads = 1;
  scfg.attention.d_model = 4;
  const auto senc = Encoder::create(small, "enc", scfg, rng);
  const Tensor sx = oracle::random_matrix(6, 4, rng);
  auto f = [&](Tape& tape, ParamStore& ps) {
    Binder bind{tape, ps};
    ForwardContext ctx;
    return gradtest::probe_sum(tape, senc(bind, tape.constant(sx), ctx), 8);
  };
  const auto report = finite_diff_check(f, small);
  INFO("worst ", report.worst_param, " a=", report.analytic, " n=", report.numeric);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("pre-norm and post-norm blocks differ but share shapes") {
  std::mt19937_64 rng(5);
  const AttentionConfig att{2, 8, 5.0, AttentionKind::canonical};
  ParamStore s1, s2;
  std::mt19937_64 r1(6), r2(6);
  const auto post = AttentionBlock::create(s1, "b", att, false, r1);
  const auto pre = AttentionBlock::create(s2, "b", att, true, r2);
  const Tensor x = oracle::random_matrix(10, 8, rng);
  Tape t1(false), t2(false);
  ForwardContext ctx;
  const Tensor a = post(Binder{t1, s1}, t1.constant(x), ctx).value();
  const Tensor b = pre(Binder{t2, s2}, t2.constant(x), ctx).value();
  CHECK(a.rows() == b.rows());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i] != b[i];
  CHECK(differs);
}

TEST_CASE("conv-ELU feature and constant-input distill examples") {
  std::mt19937_64 rng(5);
  ParamStore store;
  const std::size_t d = 3;
  const auto p = DistillParams::create(store, "d", d, rng);
  store[*p.conv.bias].fill(0.0);
  Tape tape(false);
  Binder bind{tape, store};

  const Tensor zero = conv_elu_feature(bind, tape.constant(Tensor::matrix(5, d)), p).value();
  for (double v : zero.values()) CHECK(v == 0.0);

  Tensor& kernel = store[p.conv.kernel];
  kernel.fill(0.0);
  for (std::size_t c = 0; c < d; ++c) kernel[(c * d + c) * 3 + 1] = 1.0;
  const Tensor pos = Tensor::from_rows({{0.5, 2, 3}, {1, 0.25, 7}, {4, 4, 0.1}});
  const Tensor same = conv_elu_feature(bind, tape.constant(pos), p).value();
  for (std::size_t i = 0; i < pos.size(); ++i) CHECK(same[i] == pos[i]);
  const Tensor neg = conv_elu_feature(bind, tape.constant(Tensor::matrix(4, d, -10.0)), p).value();
  for (double v : neg.values()) CHECK(v == doctest::Approx(std::exp(-10.0) - 1.0).epsilon(1e-15));

  // Constant c through each branch: MP = AP = c, DS = c.
  store[p.gamma][0] = 0.6;
  const double c = 2.5;
  const Tensor out = distill_step(bind, tape.constant(Tensor::matrix(8, d, c)), p).value();
  CHECK(out.rows() == 4);
  for (double v : out.values()) CHECK(v == doctest::Approx((1.0 + 0.6) * c + c).epsilon(1e-14));
  CHECK(distill_step(bind, tape.constant(Tensor::matrix(96, d, c)), p).value().rows() == 48);
}
