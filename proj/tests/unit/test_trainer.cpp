// Copyright 2026 The CIER Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cier/trainer/curriculum.hpp"
#include "cier/trainer/losses.hpp"
#include "cier/trainer/optimizer.hpp"
#include "cier/trainer/smoothing.hpp"
#include "cier/trainer/trainer.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace cier;
using namespace cier::trainer;
using core::RatingDistribution;

namespace {

RatingDistribution dist(double a, double b, double c, double d, double e) {
    RatingDistribution r;
    r.probs = {a, b, c, d, e};
    return r;
}

void check_close(const RatingDistribution& got, const RatingDistribution& want) {
    for (int i = 0; i < 5; ++i) CHECK(got.probs[i] == doctest::Approx(want.probs[i]).epsilon(1e-12));
}

SmoothingConfig smoothing(SmoothingStrategy s, double alpha = 0.2, int k = 2, double gamma = 1.0) {
    SmoothingConfig c;
    c.strategy = s;
    c.alpha = alpha;
    c.k = k;
    c.gamma = gamma;
    return c;
}

struct Fixture {
    std::vector<corpus::InteractionRecord> records = testing::tiny_records(32);
    corpus::BpeModel bpe = testing::tiny_bpe(records);
    backbone::BackboneConfig cfg = testing::tiny_config(bpe.size());
};

}  // namespace

TEST_CASE("neighbor smoothing worked examples") {
    const auto c = smoothing(SmoothingStrategy::kNeighbor);
    check_close(smoothed_distribution(4, c), dist(0, 0, 0.1, 0.8, 0.1));
    check_close(smoothed_distribution(1, c), dist(0.8, 0.1, 0.1, 0, 0));
    check_close(smoothed_distribution(5, c), dist(0, 0, 0.1, 0.1, 0.8));
    check_close(smoothed_distribution(3, smoothing(SmoothingStrategy::kNeighbor, 0.3, 1)), dist(0, 0.3, 0.7, 0, 0));
}

TEST_CASE("neighbor sets") {
    CHECK(neighbor_set(3, 2) == std::vector<int>{2, 4});
    CHECK(neighbor_set(1, 2) == std::vector<int>{2, 3});
    CHECK(neighbor_set(5, 2) == std::vector<int>{3, 4});
    CHECK(neighbor_set(3, 1) == std::vector<int>{2});
    CHECK(neighbor_set(2, 3) == std::vector<int>{1, 3, 4});
    CHECK(neighbor_set(4, 4) == std::vector<int>{1, 2, 3, 5});
    CHECK_THROWS_AS(neighbor_set(0, 2), ValidationError);
    CHECK_THROWS_AS(neighbor_set(3, 5), ValidationError);
}

TEST_CASE("other strategies") {
    check_close(smoothed_distribution(2, smoothing(SmoothingStrategy::kHard)), RatingDistribution::one_hot(2));
    check_close(smoothed_distribution(2, smoothing(SmoothingStrategy::kUniform)), dist(0.05, 0.8, 0.05, 0.05, 0.05));
    auto g = smoothing(SmoothingStrategy::kGaussian);
    g.sigma = 1.0;
    const double e1 = std::exp(-0.5), e2 = std::exp(-2.0);
    const double z = 1 + 2 * e1 + 2 * e2;
    check_close(smoothed_distribution(3, g), dist(e2 / z, e1 / z, 1 / z, e1 / z, e2 / z));
}

TEST_CASE("smoothing grid yields valid distributions") {
    for (auto s : {SmoothingStrategy::kHard, SmoothingStrategy::kNeighbor, SmoothingStrategy::kUniform,
                   SmoothingStrategy::kGaussian}) {
        for (int k : {1, 2}) {
            for (double alpha : {0.0, 0.1, 0.2, static_cast<double>(k) / (k + 1)}) {
                const auto c = smoothing(s, alpha, k);
                CHECK_NOTHROW(c.validate());
                for (int r = 1; r <= 5; ++r) {
                    const auto d = smoothed_distribution(r, c);
                    CHECK_NOTHROW(d.validate(1e-9));
                    if (s == SmoothingStrategy::kNeighbor) {
                        const auto nb = neighbor_set(r, k);
                        for (int x = 1; x <= 5; ++x) {
                            if (x != r && std::find(nb.begin(), nb.end(), x) == nb.end()) CHECK(d[x] == 0.0);
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("gamma gate") {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        CHECK(smooth_rating(4, smoothing(SmoothingStrategy::kNeighbor, 0.2, 2, 0.0), rng) == RatingDistribution::one_hot(4));
        CHECK(smooth_rating(4, smoothing(SmoothingStrategy::kNeighbor, 0.2, 2, 1.0), rng) ==
              smoothed_distribution(4, smoothing(SmoothingStrategy::kNeighbor)));
    }
    int fired = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) fired += smooth_rating(2, smoothing(SmoothingStrategy::kUniform, 0.2, 2, 0.3), rng)[2] < 1.0;
    CHECK(static_cast<double>(fired) / n == doctest::Approx(0.3).epsilon(0.05));

    // One draw per call regardless of strategy.
    Rng a(5), b(5);
    smooth_rating(3, smoothing(SmoothingStrategy::kHard), a);
    smooth_rating(3, smoothing(SmoothingStrategy::kGaussian), b);
    CHECK(a.uniform() == b.uniform());
    CHECK_THROWS_AS(smooth_rating(0, smoothing(SmoothingStrategy::kHard), a), ValidationError);
}

TEST_CASE("smoothing config validation") {
    CHECK_THROWS_AS(smoothing(SmoothingStrategy::kNeighbor, 0.9, 2).validate(), ValidationError);
    CHECK_THROWS_AS(smoothing(SmoothingStrategy::kNeighbor, 0.2, 0).validate(), ValidationError);
    CHECK_THROWS_AS(smoothing(SmoothingStrategy::kNeighbor, 0.2, 2, 1.5).validate(), ValidationError);
    auto g = smoothing(SmoothingStrategy::kGaussian);
    g.sigma = 0;
    CHECK_THROWS_AS(g.validate(), ValidationError);
    CHECK(smoothing_strategy_from_string("gaussian") == SmoothingStrategy::kGaussian);
    CHECK_THROWS_AS(smoothing_strategy_from_string("soft"), ValidationError);
}

TEST_CASE("curriculum schedule") {
    CHECK(transition_probability(0, 10) == 0.0);
    CHECK(transition_probability(5, 10) == 0.5);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) CHECK(curriculum_task(0, 1000, rng) == Task::kKeyword);
    int late = 0;
    for (int i = 0; i < 1000; ++i) late += curriculum_task(99999, 100000, rng) == Task::kExplanation;
    CHECK(late >= 995);
    int mid = 0;
    for (int i = 0; i < 10000; ++i) mid += curriculum_task(5000, 10000, rng) == Task::kExplanation;
    CHECK(std::abs(mid / 10000.0 - 0.5) <= 0.02);
    CHECK_THROWS_AS(curriculum_task(0, 0, rng), ValidationError);
    CHECK_THROWS_AS(curriculum_task(10, 10, rng), ValidationError);
}

TEST_CASE("rating loss") {
    CHECK(rating_loss(RatingDistribution::one_hot(3), RatingDistribution::one_hot(3)) == doctest::Approx(0.0));
    CHECK(rating_loss(RatingDistribution::uniform(), RatingDistribution::one_hot(2)) == doctest::Approx(std::log(5.0)));
    CHECK(rating_loss(RatingDistribution::one_hot(1), RatingDistribution::one_hot(2)) ==
          doctest::Approx(-std::log(kProbFloor)));
    CHECK(rating_loss({RatingDistribution::uniform(), RatingDistribution::one_hot(2)},
                      {RatingDistribution::one_hot(2), RatingDistribution::one_hot(2)}) ==
          doctest::Approx(std::log(5.0) / 2));
    CHECK_THROWS_AS(rating_loss(std::vector<RatingDistribution>{}, std::vector<RatingDistribution>{}), ValidationError);

    // Gradient with respect to the verbalizer logits, by central differences.
    std::array<double, 5> logits = {0.3, -1.2, 0.5, 2.0, -0.1};
    const auto target = dist(0.1, 0, 0.1, 0.8, 0);
    const auto g = rating_loss_grad(core::restricted_softmax(logits), target);
    for (int i = 0; i < 5; ++i) {
        auto up = logits, down = logits;
        up[i] += 1e-6;
        down[i] -= 1e-6;
        const double fd = (rating_loss(core::restricted_softmax(up), target) -
                           rating_loss(core::restricted_softmax(down), target)) / 2e-6;
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("text loss reads each target from the previous position") {
    core::SequenceLayout layout;
    layout.user = {0, 1};
    layout.item = {1, 1};
    layout.prompt = {2, 1};
    layout.target = {3, 2};
    backbone::Matrix logits = backbone::Matrix::Zero(4, 6);
    logits(2, 4) = 2.0;  // predicts the first target
    logits(3, 1) = -1.0;  // predicts the second target
    const std::vector<TokenId> targets = {4, 1};
    auto nll = [&](int row, int tok) {
        double z = 0;
        for (int v = 0; v < 6; ++v) z += std::exp(logits(row, v));
        return -(logits(row, tok) - std::log(z));
    };
    const auto tl = text_loss(logits, layout, targets, true);
    CHECK(tl.loss == doctest::Approx((nll(2, 4) + nll(3, 1)) / 2));
    REQUIRE(tl.dlogits.rows() == 4);
    CHECK(tl.dlogits.topRows(2).isZero());
    for (int r : {2, 3}) CHECK(std::abs(tl.dlogits.row(r).sum()) < 1e-12);
    CHECK(tl.dlogits(2, 4) < 0);

    // Uniform logits give log |V|.
    CHECK(text_loss(backbone::Matrix::Zero(4, 6), layout, targets).loss == doctest::Approx(std::log(6.0)));
    layout.target = {3, 0};
    CHECK_THROWS_AS(text_loss(logits, layout, {}), ValidationError);
}

TEST_CASE("AdamW first step matches a hand computation") {
    backbone::ParameterSet ps;
    backbone::Matrix w(2, 2);
    w << 1.0, -2.0, 0.5, 0.0;
    ps.add("w", backbone::ParamGroup::kBase, w);
    ps.add("bias", backbone::ParamGroup::kBase, backbone::Matrix::Constant(1, 2, 1.0));
    ps.add("lora", backbone::ParamGroup::kAdapter, backbone::Matrix::Constant(2, 1, 1.0));
    ps.add("frozen", backbone::ParamGroup::kBase, backbone::Matrix::Constant(2, 2, 3.0));
    ps[0].grad << 0.5, -0.25, 0.0, 2.0;
    ps[1].grad.setConstant(-1.0);
    ps[2].grad.setConstant(4.0);
    ps[3].grad.setConstant(9.0);
    AdamWConfig cfg;
    AdamW opt(ps, {0, 1, 2}, cfg);
    opt.step(ps);

    // First step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps).
    auto expect = [&](double p, double g, double lr, bool decay) {
        if (decay) p *= 1 - lr * cfg.weight_decay;
        return p - lr * g / (std::abs(g) + cfg.eps);
    };
    for (int i = 0; i < 4; ++i) CHECK(ps[0].value.data()[i] == doctest::Approx(expect(w.data()[i], ps[0].grad.data()[i], 1e-3, true)).epsilon(1e-12));
    CHECK(ps[1].value(0, 0) == doctest::Approx(expect(1.0, -1.0, 1e-3, false)).epsilon(1e-12));
    CHECK(ps[2].value(0, 0) == doctest::Approx(expect(1.0, 4.0, 1e-4, true)).epsilon(1e-12));
    CHECK(ps[3].value.isConstant(3.0));
    CHECK(opt.steps() == 1);
}

TEST_CASE("trainer config validation") {
    TrainerConfig c;
    CHECK_NOTHROW(c.validate());
    c.lambda = -1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("encode_examples caps targets and substitutes the keyword task") {
    Fixture f;
    const auto m = testing::tiny_model(f.records, f.bpe, f.cfg);
    const auto ex = encode_examples(m, f.records);
    REQUIRE(ex.size() == f.records.size());
    for (std::size_t i = 0; i < ex.size(); ++i) {
        CHECK(ex[i].rating == f.records[i].rating);
        CHECK(ex[i].explanation == m.text_target(f.records[i].explanation));
        CHECK(ex[i].keyword.back() == corpus::BpeModel::kEos);
        CHECK(ex[i].keyword.size() <= core::kMaxExplanationTokens + 1);
    }
    const std::vector<std::size_t> idx = {3, 1};
    const auto sub = encode_examples(m, f.records, idx);
    REQUIRE(sub.size() == 2);
    CHECK(sub[0].user_id == f.records[3].user_id);
    CHECK(m.keyword_prompt_ids() != m.explanation_prompt_ids());
}

TEST_CASE("joint loss gradients match finite differences") {
    Fixture f;
    auto m = testing::tiny_model(f.records, f.bpe, f.cfg);
    TrainerConfig tc;
    Trainer tr(m, tc);
    const auto ex = encode_examples(m, f.records, std::vector<std::size_t>{0, 1, 2});
    BatchPlan plan;
    plan.rating_context = {RatingDistribution::one_hot(ex[0].rating), dist(0, 0.1, 0.8, 0.1, 0),
                           RatingDistribution::uniform()};
    plan.tasks = {Task::kExplanation, Task::kKeyword, Task::kExplanation};
    tr.accumulate_gradients(ex, plan, 0.5);
    auto loss = [&] { return tr.accumulate_gradients(ex, plan, 0.5).total; };
    std::vector<std::size_t> all(m.backbone().params().size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    for (const auto& c : testing::check_gradients(m.backbone().params(), all, loss, 6, 2)) {
        INFO(c.name);
        CHECK(c.rel_error <= 1e-4);
    }
}

TEST_CASE("lambda zero equals skipping the rating branch") {
    Fixture f;
    auto m = testing::tiny_model(f.records, f.bpe, f.cfg);
    Trainer tr(m, TrainerConfig{});
    const auto ex = encode_examples(m, f.records, std::vector<std::size_t>{4, 5});
    BatchPlan plan{{RatingDistribution::one_hot(ex[0].rating), RatingDistribution::one_hot(ex[1].rating)},
                   {Task::kExplanation, Task::kExplanation}};
    const auto with = tr.accumulate_gradients(ex, plan, 0.0, true);
    std::vector<backbone::Matrix> g1;
    for (const auto& p : m.backbone().params()) g1.push_back(p.grad);
    const auto without = tr.accumulate_gradients(ex, plan, 0.0, false);
    CHECK(with.total == doctest::Approx(without.total).epsilon(1e-15));
    CHECK(without.rating == 0.0);
    CHECK(with.rating > 0.0);
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK((g1[i] - m.backbone().params()[i].grad).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("training lowers the loss") {
    Fixture f;
    auto m = testing::tiny_model(f.records, f.bpe, f.cfg);
    TrainerConfig tc;
    tc.curriculum = false;
    Trainer tr(m, tc);
    const auto ex = encode_examples(m, f.records);
    const double before = tr.validation_loss(ex);
    auto state = tr.make_state(200);
    for (std::size_t t = 0; t < 200; ++t) {
        const std::span<const TrainExample> all(ex);
        tr.joint_step(all.subspan((t * 8) % 32, 8), state);
    }
    CHECK(state.t == 200);
    CHECK(tr.validation_loss(ex) < 0.7 * before);
}

TEST_CASE("adapter mode only moves adapters and id tables") {
    Fixture f;
    auto cfg = f.cfg;
    cfg.adapter_rank = 2;
    auto m = testing::tiny_model(f.records, f.bpe, cfg);
    const auto before = m.backbone().params();
    TrainerConfig tc;
    tc.mode = backbone::TrainMode::kAdapter;
    tc.lr_adapter = 1e-2;
    Trainer tr(m, tc);
    const auto ex = encode_examples(m, f.records);
    auto state = tr.make_state(10);
    for (int t = 0; t < 10; ++t) tr.joint_step(std::span<const TrainExample>(ex).first(8), state);
    bool adapters_moved = false;
    for (std::size_t i = 0; i < before.size(); ++i) {
        const auto& p = m.backbone().params()[i];
        if (p.group == backbone::ParamGroup::kBase) {
            INFO(p.name);
            CHECK(p.value == before[i].value);
        } else if (p.value != before[i].value) {
            adapters_moved = true;
        }
    }
    CHECK(adapters_moved);
}

TEST_CASE("fit logs every epoch, restores the best parameters and is deterministic") {
    Fixture f;
    const auto run = [&](std::vector<EpochLog>* seen) {
        auto m = testing::tiny_model(f.records, f.bpe, f.cfg);
        TrainerConfig tc;
        tc.batch_size = 8;
        Trainer tr(m, tc);
        const auto train = encode_examples(m, f.records, std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
        const auto valid = encode_examples(m, f.records, std::vector<std::size_t>{20, 21, 22});
        const auto res = tr.fit(train, valid, [&](const EpochLog& l) { seen->push_back(l); });
        CHECK(tr.validation_loss(valid) == doctest::Approx(res.best_val_loss).epsilon(1e-12));
        return std::make_pair(res, m.infer("u1", "i1"));
    };
    std::vector<EpochLog> logs_a, logs_b;
    const auto [a, ga] = run(&logs_a);
    const auto [b, gb] = run(&logs_b);
    REQUIRE(a.log.size() == 3);
    CHECK(logs_a.size() == 3);
    CHECK(a.log[0].saved);
    double best = a.log[0].val_loss;
    for (const auto& l : a.log) best = std::min(best, l.val_loss);
    CHECK(a.best_val_loss == best);
    CHECK(a.log[static_cast<std::size_t>(a.best_epoch - 1)].val_loss == best);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a.log[i].val_loss == b.log[i].val_loss);
        CHECK(a.log[i].train_loss_e == b.log[i].train_loss_e);
        CHECK(to_json_line(a.log[i]) == to_json_line(b.log[i]));
    }
    CHECK(ga == gb);
}

TEST_CASE("best checkpoint selector keeps strict improvements") {
    BestCheckpointSelector s;
    CHECK(s.offer(3.0));
    CHECK_FALSE(s.offer(3.0));
    CHECK(s.offer(2.0));
    CHECK_FALSE(s.offer(2.5));
    CHECK(s.best() == 2.0);
    CHECK(s.best_epoch() == 3);
}

TEST_CASE("a non-finite loss stops training") {
    Fixture f;
    auto m = testing::tiny_model(f.records, f.bpe, f.cfg);
    m.backbone().params()[m.backbone().lm_head()].value(0, 0) = NAN;
    Trainer tr(m, TrainerConfig{});
    const auto ex = encode_examples(m, f.records);
    auto state = tr.make_state(4);
    CHECK_THROWS_AS(tr.joint_step(std::span<const TrainExample>(ex).first(4), state), Error);
}

TEST_CASE("language-model pretraining lowers its loss") {
    Fixture f;
    auto m = testing::tiny_model(f.records, f.bpe, f.cfg);
    Trainer tr(m, TrainerConfig{});
    const auto ex = encode_examples(m, f.records);
    const double first = tr.pretrain_base(ex, 1);
    const double later = tr.pretrain_base(ex, 5);
    CHECK(later < first);
    CHECK(tr.pretrain_base(ex, 0) == 0.0);
}
