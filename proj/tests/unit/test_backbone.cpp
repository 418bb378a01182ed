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

#include "cier/backbone/backbone.hpp"
#include "cier/backbone/checkpoint.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

using namespace cier;
using namespace cier::backbone;

namespace {

BackboneConfig small_config(int rank = 0) {
    BackboneConfig c;
    c.d_model = 16;
    c.n_layers = 2;
    c.n_heads = 2;
    c.ffn_width = 32;
    c.context_length = 12;
    c.vocab_size = 20;
    c.adapter_rank = rank;
    return c;
}

Backbone small_backbone(int rank = 0, std::uint64_t seed = 3) {
    return Backbone(small_config(rank), {"u1", "u2"}, {"i1", "i2", "i3"}, seed);
}

Matrix random_input(Eigen::Index t, Eigen::Index d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x(t, d);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform() - 0.5;
    return x;
}

}  // namespace

TEST_CASE("config validation") {
    auto c = small_config();
    CHECK_NOTHROW(c.validate());
    c.d_model = 15;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = small_config();
    c.adapted_projections = {"z"};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = small_config();
    c.vocab_size = 5;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = small_config();
    CHECK_NOTHROW(c.validate_layout(4, 5));
    CHECK_THROWS_AS(c.validate_layout(4, 6), ValidationError);
}

TEST_CASE("id tables map unseen ids to the cold-start row") {
    IdTable t({"b", "a"});
    CHECK(t.rows() == 3);
    CHECK(t.contains("a"));
    CHECK_FALSE(t.contains("zz"));
    CHECK(t.row("zz") == t.cold_start_row());
    CHECK(t.row("a") != t.row("b"));
    CHECK_THROWS_AS(IdTable({"a", "a"}), ValidationError);
}

TEST_CASE("cold-start embeddings are zero and shared by all unseen ids") {
    const Backbone b = small_backbone();
    const auto e1 = b.embed("nobody", "nothing", {4});
    const auto e2 = b.embed("ghost", "void", {4});
    CHECK(e1.user.isZero());
    CHECK(e1.item.isZero());
    CHECK(e1.user == e2.user);
    CHECK_FALSE(b.embed("u1", "i1", {}).user.isZero());
    CHECK_THROWS_AS(b.token_slot(20), ValidationError);
    CHECK_THROWS_AS(b.token_slot(-1), ValidationError);
}

TEST_CASE("forward rejects empty and overlong input") {
    const Backbone b = small_backbone();
    CHECK_THROWS_AS(b.forward(Matrix(0, 16)), ValidationError);
    CHECK_THROWS_AS(b.forward(random_input(13, 16, 1)), ValidationError);
    CHECK_THROWS_AS(b.forward(random_input(3, 8, 1)), ValidationError);
    CHECK(b.forward(random_input(12, 16, 1)).rows() == 12);
}

TEST_CASE("forward is causal") {
    const Backbone b = small_backbone();
    Matrix x = random_input(8, 16, 5);
    const Matrix before = b.forward(x);
    x.row(5).setRandom();
    const Matrix after = b.forward(x);
    CHECK((before.topRows(5) - after.topRows(5)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((before.row(5) - after.row(5)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("forward is deterministic and last_only matches the final row") {
    const Backbone a = small_backbone(0, 9);
    const Backbone b = small_backbone(0, 9);
    const Matrix x = random_input(6, 16, 2);
    const Matrix full = a.forward(x);
    CHECK(full == b.forward(x));
    const Matrix last = a.forward(x, nullptr, true);
    REQUIRE(last.rows() == 1);
    CHECK((last.row(0) - full.row(5)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(full != small_backbone(0, 10).forward(x));
}

TEST_CASE("adapted_projection") {
    Matrix W(2, 3);
    W << 1, 0, 2, 0, 1, -1;
    Vector x(3);
    x << 1, 2, 3;
    Vector base = W * x;
    CHECK(adapted_projection(x, W, Matrix(0, 3), Matrix(2, 0), 1.0) == base);
    Matrix A(1, 3), B(2, 1);
    A << 1, 1, 1;
    B.setZero();
    CHECK(adapted_projection(x, W, A, B, 1.0) == base);
    B << 1, 2;
    Vector expected(2);
    expected << base(0) + 0.5 * 6, base(1) + 0.5 * 12;
    CHECK((adapted_projection(x, W, A, B, 0.5) - expected).norm() < 1e-12);
    CHECK_THROWS_AS(adapted_projection(x, W, Matrix(1, 2), B, 1.0), ValidationError);
    CHECK_THROWS_AS(adapted_projection(x, W, A, Matrix(3, 1), 1.0), ValidationError);
    CHECK_THROWS_AS(adapted_projection(Vector(2), W, A, B, 1.0), ValidationError);
}

TEST_CASE("trainable sets per mode") {
    const Backbone full = small_backbone();
    CHECK(full.trainable_parameters(TrainMode::kFull).size() == full.params().size());
    CHECK_THROWS_AS(full.trainable_parameters(TrainMode::kAdapter), ValidationError);

    const Backbone ad = small_backbone(4);
    const auto idx = ad.trainable_parameters(TrainMode::kAdapter);
    std::size_t adapters = 0;
    for (std::size_t i : idx) {
        const auto g = ad.params()[i].group;
        CHECK(g != ParamGroup::kBase);
        adapters += g == ParamGroup::kAdapter;
    }
    CHECK(adapters == 2 * 2 * 2);  // q and v, two factors, two layers
    CHECK(idx.size() == adapters + 2);
    CHECK(ad.params().find("layers.0.attn.q.lora_a") != nullptr);
    CHECK(ad.params().find("layers.0.attn.k.lora_a") == nullptr);
}

TEST_CASE("zero-initialized adapters leave the base model unchanged") {
    Backbone plain = small_backbone(0, 4);
    Backbone adapted = small_backbone(4, 4);
    for (auto& p : adapted.params()) {
        if (p.group != ParamGroup::kAdapter) p.value = plain.params()[plain.params().index(p.name)].value;
    }
    const Matrix x = random_input(9, 16, 8);
    CHECK((plain.forward(x) - adapted.forward(x)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("analytic gradients match finite differences") {
    for (int rank : {0, 2}) {
        Backbone b = small_backbone(rank, 12);
        if (rank > 0) {
            // Non-zero B so every adapter path carries gradient.
            Rng rng(3);
            for (auto& p : b.params()) {
                if (p.name.find("lora_b") != std::string::npos) {
                    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = 0.1 * (rng.uniform() - 0.5);
                }
            }
        }
        const InputSequence seq = {b.user_slot("u1"), b.item_slot("i2"), b.token_slot(5), b.token_slot(9),
                                   b.token_slot(5)};
        const Matrix weights = random_input(5, 20, 77);
        auto loss = [&] { return (b.forward(b.materialize(seq)).array() * weights.array()).sum(); };

        b.params().zero_grad();
        ForwardCache cache;
        b.forward(b.materialize(seq), &cache);
        b.scatter_gradient(seq, b.backward(cache, weights));

        std::vector<std::size_t> all(b.params().size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        for (const auto& c : testing::check_gradients(b.params(), all, loss, 12, 5)) {
            INFO(c.name);
            CHECK(c.rel_error <= 1e-4);
        }
    }
}

TEST_CASE("last_only backward matches finite differences") {
    Backbone b = small_backbone(0, 13);
    const Matrix x = random_input(4, 16, 4);
    const Matrix w = random_input(1, 20, 6);
    auto loss = [&] { return (b.forward(x, nullptr, true).array() * w.array()).sum(); };
    b.params().zero_grad();
    ForwardCache cache;
    b.forward(x, &cache, true);
    b.backward(cache, w);
    std::vector<std::size_t> all(b.params().size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    for (const auto& c : testing::check_gradients(b.params(), all, loss, 8, 9)) {
        INFO(c.name);
        CHECK(c.rel_error <= 1e-4);
    }
}

TEST_CASE("checkpoint round trip and vocabulary guard") {
    const auto dir = testing::temp_dir("ckpt");
    Backbone b = small_backbone(2, 21);
    b.params()[b.params().index("layers.1.attn.v.lora_b")].value.setConstant(0.25);
    save_checkpoint(dir / "m.ckpt", b, 21, 0xabc, {{"note", "x"}});
    const Checkpoint back = load_checkpoint(dir / "m.ckpt", 0xabc);
    CHECK(back.seed == 21);
    CHECK(back.vocab_hash == 0xabc);
    CHECK(back.metadata["note"] == "x");
    CHECK(back.backbone.config() == b.config());
    CHECK(back.backbone.users().ids() == b.users().ids());
    REQUIRE(back.backbone.params().size() == b.params().size());
    for (std::size_t i = 0; i < b.params().size(); ++i) {
        CHECK(back.backbone.params()[i].name == b.params()[i].name);
        CHECK(back.backbone.params()[i].value == b.params()[i].value);
    }
    const Matrix x = random_input(5, 16, 3);
    CHECK(back.backbone.forward(x) == b.forward(x));

    CHECK_THROWS_AS(load_checkpoint(dir / "m.ckpt", 0xabd), ValidationError);
    CHECK_NOTHROW(load_checkpoint(dir / "m.ckpt"));

    save_checkpoint(dir / "m2.ckpt", b, 21, 0xabc, {{"note", "x"}});
    CHECK(file_hash(dir / "m.ckpt") == file_hash(dir / "m2.ckpt"));
    CHECK(testing::read_bytes(dir / "m.ckpt") == testing::read_bytes(dir / "m2.ckpt"));

    std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
    CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), ParseError);
    auto bytes = testing::read_bytes(dir / "m.ckpt");
    std::ofstream(dir / "cut.ckpt", std::ios::binary) << bytes.substr(0, bytes.size() - 9);
    CHECK_THROWS_AS(load_checkpoint(dir / "cut.ckpt"), ParseError);
    CHECK_THROWS_AS(load_checkpoint(dir / "absent.ckpt"), Error);
}
