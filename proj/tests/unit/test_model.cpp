#include <doctest.h>

#include "../support/gradients.hpp"
#include "higenet/model.hpp"

using namespace higenet;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.seq_len = 12;
  cfg.label_len = 4;
  cfg.pred_len = 4;
  cfg.d_x = 3;
  cfg.d_y = 3;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.encoder_blocks = 2;
  cfg.dropout = 0.0;
  return cfg;
}

WindowSample sample_for(const ModelConfig& cfg, std::size_t index = 0) {
  const TimeSeriesFrame frame = synthetic_seasonal(80, cfg.d_x, 0.1, 3);
  return make_windows(frame, cfg.window_spec(FeatureMode::multivariate))[index];
}

}  // namespace

TEST_CASE("decoder input: label rows then zero placeholders") {
  const Tensor known = Tensor::from_rows({{1, 10}, {2, 20}, {3, 30}, {4, 40}});
  const Tensor dec = build_decoder_input(known, 2, 3);
  CHECK(dec.rows() == 5);
  CHECK(dec(0, 0) == 3);
  CHECK(dec(1, 1) == 40);
  for (std::size_t r = 2; r < 5; ++r) CHECK((dec(r, 0) == 0.0 && dec(r, 1) == 0.0));

  const Tensor none = build_decoder_input(known, 0, 2);
  CHECK(none.rows() == 2);
  CHECK_THROWS(build_decoder_input(known, 5, 1));
  CHECK_THROWS(build_decoder_input(known, 2, 0));
}

TEST_CASE("variant toggles select embedding, distill and attention kinds") {
  ModelConfig cfg = tiny_config();
  CHECK(cfg.embedding_style() == EmbeddingStyle::higenet);
  CHECK(cfg.distill_kind() == DistillKind::higenet);
  CHECK(cfg.encoder_attention() == AttentionKind::neural_sparse);
  CHECK(cfg.decoder_self_attention() == AttentionKind::masked_neural_sparse);
  cfg.variant = {false, false, false};
  CHECK(cfg.embedding_style() == EmbeddingStyle::informer);
  CHECK(cfg.distill_kind() == DistillKind::informer_maxpool);
  CHECK(cfg.encoder_attention() == AttentionKind::prob_sparse);
  CHECK(cfg.decoder_self_attention() == AttentionKind::masked_prob_sparse);
}

TEST_CASE("config validation names the offending field") {
  ModelConfig cfg = tiny_config();
  cfg.validate();
  auto expect_error = [](ModelConfig c, const std::string& needle) {
    try {
      c.validate();
      FAIL("expected validation error for ", needle);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  ModelConfig bad = cfg;
  bad.n_heads = 3;
  expect_error(bad, "n_heads");
  bad = cfg;
  bad.label_len = 13;
  expect_error(bad, "label_len");
  bad = cfg;
  bad.pred_len = 0;
  expect_error(bad, "pred_len");
}

TEST_CASE("forecast shape and one-shot decoding") {
  const ModelConfig cfg = tiny_config();
  std::mt19937_64 rng(1);
  ParamStore store;
  const HigeNet model = HigeNet::create(store, cfg, rng);
  const WindowSample s = sample_for(cfg);
  ForwardStats stats;
  const Tensor y = model.predict(store, s, &stats);
  CHECK(y.rows() == cfg.pred_len);
  CHECK(y.cols() == cfg.d_y);
  CHECK(y.all_finite());
  CHECK(stats.decoder_passes == 1);
  CHECK(stats.encoder.dot_products > 0);
  CHECK(stats.decoder.dot_products > 0);
}

TEST_CASE("prediction is deterministic and ignores the ground-truth target") {
  const ModelConfig cfg = tiny_config();
  std::mt19937_64 rng(2);
  ParamStore store;
  const HigeNet model = HigeNet::create(store, cfg, rng);
  WindowSample s = sample_for(cfg, 5);
  const Tensor a = model.predict(store, s);
  const Tensor b = model.predict(store, s);
  for (double& v : s.target.values()) v += 100.0;
  const Tensor c = model.predict(store, s);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK(a[i] == c[i]);
  }

  ParamStore other;
  std::mt19937_64 rng2(2);
  const HigeNet twin = HigeNet::create(other, cfg, rng2);
  const Tensor d = twin.predict(other, s);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == d[i]);
}

TEST_CASE("a silent projection outputs its bias on every row") {
  const ModelConfig cfg = tiny_config();
  std::mt19937_64 rng(3);
  ParamStore store;
  const HigeNet model = HigeNet::create(store, cfg, rng);
  store[model.projection.weight].fill(0.0);
  Tensor& bias = store[*model.projection.bias];
  for (std::size_t i = 0; i < bias.size(); ++i) bias[i] = 0.5 * static_cast<double>(i) - 1.0;
  const Tensor y = model.predict(store, sample_for(cfg));
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) CHECK(y(r, c) == bias[c]);
}

TEST_CASE("forward rejects mismatched windows") {
  ModelConfig cfg = tiny_config();
  std::mt19937_64 rng(4);
  ParamStore store;
  const HigeNet model = HigeNet::create(store, cfg, rng);
  ModelConfig wider = cfg;
  wider.d_x = 4;
  wider.d_y = 4;
  CHECK_THROWS_AS(model.predict(store, sample_for(wider)), std::invalid_argument);
}

TEST_CASE("mse loss examples") {
  CHECK(mse_loss(Tensor::from_rows({{1, 2}, {3, 4}}), Tensor::from_rows({{1, 2}, {3, 4}})) == 0.0);
  CHECK(mse_loss(Tensor::from_rows({{1, 2}}), Tensor::from_rows({{0, 0}})) == 2.5);
  CHECK(mse_loss(Tensor::column({3}), Tensor::column({1})) == 4.0);
  CHECK_THROWS(mse_loss(Tensor::column({1, 2}), Tensor::column({1})));

  Tape tape;
  Var loss = mse_loss(tape.constant(Tensor::from_rows({{1, 2}})), tape.constant(Tensor::from_rows({{0, 0}})));
  CHECK(loss.value().item() == 2.5);
}

TEST_CASE("full model gradients match finite differences") {
  for (VariantToggles variant : {VariantToggles{true, true, true}, VariantToggles{false, false, false}}) {
    ModelConfig cfg = tiny_config();
    cfg.variant = variant;
    std::mt19937_64 rng(5);
    ParamStore store;
    const HigeNet model = HigeNet::create(store, cfg, rng);
    const WindowSample s = sample_for(cfg, 2);
    auto f = [&](Tape& tape, ParamStore& p) {
      Binder bind{tape, p};
      ForwardContext ctx;
      return mse_loss(model.forward(bind, s, ctx), tape.constant(s.target));
    };
    const auto report = finite_diff_check(f, store);
    INFO("variant E=", variant.embedding, " D=", variant.distill, " N=", variant.neural_sparse, " worst ",
         report.worst_param, "[", report.worst_index, "] a=", report.analytic, " n=", report.numeric);
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("decoder input and loss examples") {
  std::mt19937_64 rng(8);
  Tensor known = Tensor::matrix(96, 2);
  std::normal_distribution<double> g;
  for (double& v : known.values()) v = g(rng) + 3.0;
  const Tensor dec = build_decoder_input(known, 48, 1);
  REQUIRE(dec.rows() == 49);
  CHECK(dec(0, 0) == known(48, 0));
  CHECK(dec(47, 1) == known(95, 1));
  CHECK(dec(48, 0) == 0.0);
  CHECK(dec(48, 1) == 0.0);
  const Tensor quiet = build_decoder_input(Tensor::matrix(10, 2), 4, 3);
  for (double v : quiet.values()) CHECK(v == 0.0);

  CHECK(mse_loss(Tensor::column({0, 2}), Tensor::column({1, 3})) == 1.0);
  const Tensor target = Tensor::from_rows({{1, -2, 0.5}, {3, 7, -1}});
  Tensor shifted = target;
  for (double& v : shifted.values()) v += 2.0;
  CHECK(mse_loss(shifted, target) == doctest::Approx(4.0).epsilon(1e-15));
}
