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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Criteria are independent; an exception fails only its own line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cier/app/pipeline.hpp"
#include "cier/app/synthetic.hpp"
#include "cier/core/model.hpp"
#include "cier/corpus/splits.hpp"
#include "cier/judge/judge.hpp"
#include "cier/metrics/metrics.hpp"
#include "cier/trainer/curriculum.hpp"
#include "cier/trainer/smoothing.hpp"
#include "cier/trainer/trainer.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"
#include "support/metric_oracle.hpp"

using namespace cier;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// 1. Smoothing grid.
Outcome smoothing_suite() {
    using trainer::SmoothingStrategy;
    const auto t0 = Clock::now();
    std::size_t checked = 0;
    bool ok = true;
    for (auto s : {SmoothingStrategy::kHard, SmoothingStrategy::kNeighbor, SmoothingStrategy::kUniform,
                   SmoothingStrategy::kGaussian}) {
        for (int k : {1, 2}) {
            for (double alpha : {0.0, 0.1, 0.2, static_cast<double>(k) / (k + 1)}) {
                trainer::SmoothingConfig c;
                c.strategy = s;
                c.k = k;
                c.alpha = alpha;
                c.gamma = 1.0;
                c.validate();
                for (int r = 1; r <= 5; ++r) {
                    const auto d = trainer::smoothed_distribution(r, c);
                    double sum = 0.0;
                    for (double p : d.probs) {
                        ok = ok && p >= 0.0;
                        sum += p;
                    }
                    ok = ok && std::abs(sum - 1.0) <= 1e-9;
                    if (s == SmoothingStrategy::kNeighbor) {
                        const auto nb = trainer::neighbor_set(r, k);
                        for (int x = 1; x <= 5; ++x) {
                            const bool allowed = x == r || std::find(nb.begin(), nb.end(), x) != nb.end();
                            ok = ok && (allowed || d[x] == 0.0);
                        }
                    }
                    ++checked;
                }
            }
        }
    }
    const double t = seconds_since(t0);
    return {ok && t < 1.0, std::to_string(checked) + " distributions, " + fmt("%.3f s", t)};
}

std::vector<std::size_t> all_indices(const backbone::ParameterSet& ps) {
    std::vector<std::size_t> v(ps.size());
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

// 2. Finite-difference check of L_e + lambda L_r.
Outcome gradient_check() {
    const auto t0 = Clock::now();
    const auto records = testing::tiny_records(32);
    const auto bpe = testing::tiny_bpe(records);
    double worst = 0.0;
    std::string worst_name;
    std::size_t tensors = 0;
    for (int rank : {0, 2}) {
        auto cfg = testing::tiny_config(bpe.size(), 16, 2, rank);
        auto model = testing::tiny_model(records, bpe, cfg);
        if (rank > 0) {
            // Non-zero B so the adapter factors carry gradient.
            Rng rng(11);
            for (auto& p : model.backbone().params()) {
                if (p.group != backbone::ParamGroup::kAdapter) continue;
                for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = 0.2 * (rng.uniform() - 0.5);
            }
        }
        trainer::TrainerConfig tc;
        tc.mode = rank > 0 ? backbone::TrainMode::kAdapter : backbone::TrainMode::kFull;
        trainer::Trainer tr(model, tc);
        const auto batch = trainer::encode_examples(model, records, std::vector<std::size_t>{0, 1, 2});
        trainer::SmoothingConfig sc;
        sc.gamma = 1.0;
        trainer::BatchPlan plan;
        plan.rating_context = {trainer::smoothed_distribution(batch[0].rating, sc),
                               core::RatingDistribution::one_hot(batch[1].rating),
                               trainer::smoothed_distribution(batch[2].rating, sc)};
        plan.tasks = {trainer::Task::kExplanation, trainer::Task::kKeyword, trainer::Task::kExplanation};
        tr.accumulate_gradients(batch, plan, tc.lambda);
        auto loss = [&] { return tr.accumulate_gradients(batch, plan, tc.lambda).total; };
        const auto which = model.backbone().trainable_parameters(tc.mode);
        for (const auto& c : testing::check_gradients(model.backbone().params(), which, loss, 24, 3)) {
            ++tensors;
            if (c.rel_error > worst) {
                worst = c.rel_error;
                worst_name = c.name;
            }
        }
    }
    const double t = seconds_since(t0);
    std::ostringstream os;
    os << tensors << " tensors, max relative error " << fmt("%.2e", worst) << " (" << worst_name << "), "
       << fmt("%.1f s", t);
    return {worst <= 1e-4 && t < 60.0, os.str()};
}

// 3. Zero-initialized adapters, then ten adapter-mode steps.
Outcome adapter_identity() {
    const auto records = testing::tiny_records(32);
    const auto bpe = testing::tiny_bpe(records);
    auto base = testing::tiny_model(records, bpe, testing::tiny_config(bpe.size(), 16, 2, 0));
    auto adapted = testing::tiny_model(records, bpe, testing::tiny_config(bpe.size(), 16, 2, 4));
    for (auto& p : adapted.backbone().params()) {
        if (p.group != backbone::ParamGroup::kAdapter) p.value = base.backbone().params()[base.backbone().params().index(p.name)].value;
    }
    double max_diff = 0.0;
    for (const auto& r : records) {
        const auto ex = adapted.text_target(r.explanation);
        const auto in_b = base.build_explanation_input(r.user_id, r.item_id, core::RatingDistribution::one_hot(r.rating),
                                                       base.explanation_prompt_ids(), ex);
        const auto in_a = adapted.build_explanation_input(r.user_id, r.item_id, core::RatingDistribution::one_hot(r.rating),
                                                          adapted.explanation_prompt_ids(), ex);
        const auto lb = base.backbone().forward(base.backbone().materialize(in_b.slots));
        const auto la = adapted.backbone().forward(adapted.backbone().materialize(in_a.slots));
        max_diff = std::max(max_diff, (lb - la).cwiseAbs().maxCoeff());
    }

    const auto before = adapted.backbone().params();
    trainer::TrainerConfig tc;
    tc.mode = backbone::TrainMode::kAdapter;
    trainer::Trainer tr(adapted, tc);
    const auto ex = trainer::encode_examples(adapted, records);
    auto state = tr.make_state(10);
    for (std::size_t t = 0; t < 10; ++t) tr.joint_step(std::span<const trainer::TrainExample>(ex).subspan((t * 8) % 32, 8), state);
    bool base_unchanged = true;
    bool adapters_moved = false;
    for (std::size_t i = 0; i < before.size(); ++i) {
        const auto& now = adapted.backbone().params()[i];
        if (now.group == backbone::ParamGroup::kBase) {
            base_unchanged = base_unchanged && now.value.size() == before[i].value.size() &&
                             std::memcmp(now.value.data(), before[i].value.data(),
                                         sizeof(double) * static_cast<std::size_t>(now.value.size())) == 0;
        } else if (now.group == backbone::ParamGroup::kAdapter) {
            adapters_moved = adapters_moved || now.value != before[i].value;
        }
    }
    std::ostringstream os;
    os << "max |base - adapted| " << fmt("%.1e", max_diff) << ", base tensors "
       << (base_unchanged ? "bit-unchanged" : "CHANGED") << " after 10 steps, adapters "
       << (adapters_moved ? "updated" : "static");
    return {max_diff <= 1e-6 && base_unchanged && adapters_moved, os.str()};
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

core::CierModel make_model(const std::vector<corpus::InteractionRecord>& records, const corpus::BpeModel& bpe, int d,
                           bool mask) {
    backbone::BackboneConfig bc;
    bc.d_model = d;
    bc.n_layers = 2;
    bc.n_heads = 4;
    bc.ffn_width = 4 * d;
    bc.vocab_size = static_cast<int>(bpe.size());
    std::vector<std::string> users, items;
    for (const auto& r : records) {
        users.push_back(r.user_id);
        items.push_back(r.item_id);
    }
    return core::CierModel(backbone::Backbone(bc, sorted_unique(users), sorted_unique(items), 1), bpe, core::PromptSet{},
                           mask);
}

// 4. Memorize the bundled 32-record set in 500 steps.
Outcome overfit() {
    const auto t0 = Clock::now();
    const auto records = corpus::ingest(fs::path(CIER_SOURCE_DIR) / "tests/data/overfit32.jsonl");
    const auto bpe = corpus::train_bpe(app::tokenizer_corpus(records, core::PromptSet{}), 120);
    auto model = make_model(records, bpe, 64, false);
    trainer::TrainerConfig tc;
    tc.batch_size = 8;
    tc.epochs = 500 * tc.batch_size / static_cast<int>(records.size());  // 500 steps
    trainer::Trainer tr(model, tc);
    const auto ex = trainer::encode_examples(model, records);
    tr.fit(ex, {});
    double mae = 0.0;
    std::size_t exact = 0;
    for (const auto& r : records) {
        const auto g = model.infer(r.user_id, r.item_id);
        mae += std::abs(g.score - r.rating);
        auto want = model.text_target(r.explanation);
        want.pop_back();  // EOS
        exact += g.explanation_ids == want;
    }
    mae /= static_cast<double>(records.size());
    const double frac = static_cast<double>(exact) / static_cast<double>(records.size());
    const double t = seconds_since(t0);
    std::ostringstream os;
    os << "MAE " << fmt("%.4f", mae) << ", exact " << exact << "/" << records.size() << ", " << fmt("%.1f s", t);
    return {mae < 0.1 && frac >= 0.9 && t < 300.0, os.str()};
}

// 5. CIER vs CIER-M on a sentiment-tied corpus, lexicon oracle, mean of five splits.
Outcome coherence_gap() {
    const auto t0 = Clock::now();
    app::SyntheticConfig sc;
    sc.users = 40;
    sc.items = 30;
    sc.records = 480;
    sc.noise = 1.0;
    sc.user_spread = 1.5;
    sc.item_spread = 1.5;
    sc.seed = 1;
    const auto records = app::synthesize(sc);
    const auto bpe = corpus::train_bpe(app::tokenizer_corpus(records, core::PromptSet{}), 200);
    const auto splits = corpus::make_splits(records.size(), 42, 5);
    judge::SentimentOracle oracle{judge::JudgeConfig{}};
    double rate[2] = {0.0, 0.0};
    std::ostringstream per_split;
    for (const auto& split : splits) {
        for (int mask = 0; mask < 2; ++mask) {
            auto model = make_model(records, bpe, 32, mask == 1);
            trainer::TrainerConfig tc;
            tc.epochs = 30;
            tc.batch_size = 16;
            trainer::Trainer tr(model, tc);
            tr.fit(trainer::encode_examples(model, records, split.train),
                   trainer::encode_examples(model, records, split.valid));
            std::vector<metrics::Prediction> preds;
            for (std::size_t i : split.test) {
                const auto& r = records[i];
                const auto g = model.infer(r.user_id, r.item_id);
                preds.push_back({r.user_id, r.item_id, r.rating, g.score, r.explanation, g.explanation_text, r.features});
            }
            const double c = judge::coherence_rate(preds, oracle).rate;
            rate[mask] += c / static_cast<double>(splits.size());
            per_split << (mask ? "/" : " ") << fmt("%.1f", c);
        }
    }
    const double gap = rate[0] - rate[1];
    std::ostringstream os;
    os << "CIER " << fmt("%.2f%%", rate[0]) << " vs CIER-M " << fmt("%.2f%%", rate[1]) << ", gap "
       << fmt("%.2f pp", gap) << " (per split" << per_split.str() << "), " << fmt("%.0f s", seconds_since(t0));
    return {gap >= 10.0 && seconds_since(t0) < 900.0, os.str()};
}

std::string random_text(Rng& rng) {
    static const std::vector<std::string> words = {"the", "pool", "is", "small", "room", "was", "clean",
                                                   "very", "staff", "nice", ",", ".", "!"};
    const auto n = rng.below(13);
    std::string s;
    for (std::uint64_t i = 0; i < n; ++i) s += (i ? " " : "") + words[rng.below(words.size())];
    return s;
}

// 6. Text metrics against the brute-force reference, and worked examples.
Outcome metric_oracle() {
    Rng rng(606);
    std::size_t agree = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<std::string> c = {random_text(rng)}, r = {random_text(rng)};
        const auto ct = metrics::tokenize(c[0]), rt = metrics::tokenize(r[0]);
        const auto stats = metrics::bleu_stats({ct}, {rt}, 4);
        const auto want = testing::oracle::bleu_counts({ct}, {rt}, 4);
        bool ok = ct == testing::oracle::tokenize(c[0]) && stats.candidate_length == want.c &&
                  stats.reference_length == want.r && metrics::lcs_length(ct, rt) == testing::oracle::lcs(ct, rt);
        for (int n = 0; n < 4; ++n) {
            ok = ok && stats.orders[static_cast<std::size_t>(n)].matches == want.matches[static_cast<std::size_t>(n)] &&
                 stats.orders[static_cast<std::size_t>(n)].candidate_total == want.totals[static_cast<std::size_t>(n)];
        }
        auto same = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
        for (int n : {1, 4}) ok = ok && same(metrics::bleu(c, r, n), testing::oracle::bleu(c, r, n));
        const auto got = metrics::rouge(c, r);
        const auto ref = testing::oracle::rouge(c, r);
        ok = ok && same(got.rouge1_recall, ref.r1) && same(got.rouge2_recall, ref.r2) && same(got.rougeL_f1, ref.l);
        agree += ok;
    }

    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
    const auto e1 = metrics::explainability({"the pool is small", "room was clean"}, {{"pool"}, {"bed"}});
    const auto e2 = metrics::explainability({"nice pool", "great gym", "quiet room", "fine"},
                                            {{"pool"}, {"bed"}, {"lobby"}, {"gym"}});
    const auto e3 = metrics::explainability({"p", "p", "q"}, {{"p"}, {"q"}, {"q"}});
    const auto e4 = metrics::explainability({"a", "a", "b"}, {{}, {}, {}});
    const bool worked = near(e1.fmr, 0.5) && near(e2.fcr, 0.5) && near(e3.div, 1.0 / 3.0) && near(e4.usr, 2.0 / 3.0) &&
                        near(metrics::bleu({"the pool is small"}, {"the pool is very small"}, 1), std::exp(1.0 - 5.0 / 4.0)) &&
                        near(metrics::rouge({"a b c"}, {"a c"}).rougeL_f1, 0.8);
    std::ostringstream os;
    os << agree << "/100 random pairs agree, worked examples " << (worked ? "match" : "DIFFER");
    return {agree == 100 && worked, os.str()};
}

// 7. Curriculum schedule statistics.
Outcome curriculum_stats() {
    auto run = [](std::size_t T, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<int> task(T);
        for (std::size_t t = 0; t < T; ++t) task[t] = trainer::curriculum_task(t, T, rng) == trainer::Task::kExplanation;
        return task;
    };
    const std::size_t T = 10000;
    const auto tasks = run(T, 42);
    const double window = std::accumulate(tasks.begin() + 4000, tasks.begin() + 6001, 0.0) / 2001.0;
    const int early = std::accumulate(tasks.begin(), tasks.begin() + 50, 0);
    const auto tasks5k = run(5000, 42);
    const int early5k = std::accumulate(tasks5k.begin(), tasks5k.begin() + 50, 0);
    std::ostringstream os;
    os << "window [0.4T, 0.6T] fraction " << fmt("%.4f", window) << ", explanation batches in first 50: " << early
       << " (T=10000), " << early5k << " (T=5000)";
    return {std::abs(window - 0.5) <= 0.02 && early == 0 && early5k == 0, os.str()};
}

// 8. Two identical pipeline runs.
Outcome determinism() {
    const auto root = testing::temp_dir("acceptance_determinism");
    std::vector<std::string> files[2];
    for (int run = 0; run < 2; ++run) {
        auto cfg = testing::small_experiment(root / ("run" + std::to_string(run)));
        cfg.synthetic.users = 10;
        cfg.synthetic.items = 10;
        cfg.synthetic.records = 60;
        cfg.trainer.epochs = 3;
        app::Pipeline p(cfg);
        for (auto v : {app::Variant::kCier, app::Variant::kCierM}) p.run(v);
        for (auto v : {app::Variant::kCier, app::Variant::kCierM}) {
            for (std::size_t k = 0; k < cfg.repeats; ++k) {
                files[run].push_back(testing::read_bytes(p.workdir().predictions(v, k)));
                files[run].push_back(testing::read_bytes(p.workdir().metrics(v, k)));
                files[run].push_back(testing::read_bytes(p.workdir().checkpoint(v, k)));
            }
            files[run].push_back(testing::read_bytes(p.workdir().summary(v)));
        }
    }
    std::size_t identical = 0;
    bool non_empty = true;
    for (std::size_t i = 0; i < files[0].size(); ++i) {
        identical += files[0][i] == files[1][i];
        non_empty = non_empty && !files[0][i].empty();
    }
    fs::remove_all(root);
    std::ostringstream os;
    os << identical << "/" << files[0].size() << " prediction, metric and checkpoint files byte-identical";
    return {identical == files[0].size() && non_empty, os.str()};
}

// 9. Range and monotonicity of the expected rating.
Outcome rating_score_property() {
    Rng rng(9);
    std::size_t bad = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        core::RatingDistribution d;
        double z = 0.0;
        for (double& p : d.probs) z += (p = -std::log(1.0 - rng.uniform()));  // flat Dirichlet
        for (double& p : d.probs) p /= z;
        const double s = core::rating_score(d);
        bad += !(s >= 1.0 && s <= 5.0);
        const auto from = static_cast<std::size_t>(rng.below(4));
        const auto to = from + 1 + static_cast<std::size_t>(rng.below(4 - from));
        auto up = d;
        const double moved = up.probs[from] * rng.uniform();
        up.probs[from] -= moved;
        up.probs[to] += moved;
        bad += core::rating_score(up) < s;
    }
    return {bad == 0, "10000 distributions, " + std::to_string(bad) + " violations"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"smoothing suite", smoothing_suite},
        {"gradient check", gradient_check},
        {"adapter identity", adapter_identity},
        {"overfit fixture", overfit},
        {"coherence mechanism", coherence_gap},
        {"metric oracle equivalence", metric_oracle},
        {"curriculum statistics", curriculum_stats},
        {"determinism", determinism},
        {"rating score range", rating_score_property},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << " - "
                  << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
