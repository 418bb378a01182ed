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

#include "cier/trainer/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "cier/trainer/losses.hpp"

namespace cier::trainer {

using backbone::ForwardCache;
using backbone::Matrix;
using core::RatingDistribution;

namespace {

AdamWConfig optimizer_config(const TrainerConfig& c) {
    AdamWConfig a;
    a.lr_adapter = c.lr_adapter;
    a.lr_other = c.lr_other;
    a.weight_decay = c.weight_decay;
    return a;
}

// Forward over every slot except the last one, which is only a prediction target.
Matrix forward_teacher_forced(const backbone::Backbone& bb, const core::ModelInput& in, ForwardCache* cache) {
    Matrix x = bb.materialize(in.slots);
    return bb.forward(x.topRows(x.rows() - 1), cache);
}

void backward_teacher_forced(backbone::Backbone& bb, const core::ModelInput& in, const ForwardCache& cache,
                             const Matrix& dlogits) {
    const Matrix dx = bb.backward(cache, dlogits);
    Matrix padded = Matrix::Zero(dx.rows() + 1, dx.cols());
    padded.topRows(dx.rows()) = dx;
    bb.scatter_gradient(in.slots, padded);
}

void check_finite(double value, const char* what, std::size_t t) {
    if (!std::isfinite(value)) {
        std::ostringstream os;
        os << "non-finite " << what << " (" << value << ") at batch " << t;
        throw Error(os.str());
    }
}

}  // namespace

void TrainerConfig::validate() const {
    smoothing.validate();
    if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
    if (epochs < 1) throw ValidationError("epochs must be at least 1");
    if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
    if (!(lr_adapter > 0.0) || !(lr_other > 0.0)) throw ValidationError("learning rates must be positive");
    if (weight_decay < 0.0) throw ValidationError("weight_decay must be non-negative");
    if (pretrain_epochs < 0) throw ValidationError("pretrain_epochs must be non-negative");
}

std::vector<TrainExample> encode_examples(const core::CierModel& model,
                                          const std::vector<corpus::InteractionRecord>& records,
                                          std::span<const std::size_t> indices) {
    std::vector<TrainExample> out;
    out.reserve(indices.size());
    for (std::size_t idx : indices) {
        const auto& r = records.at(idx);
        TrainExample ex;
        ex.user_id = r.user_id;
        ex.item_id = r.item_id;
        ex.rating = r.rating;
        ex.explanation = model.text_target(r.explanation);
        std::string keywords;
        for (const auto& f : r.features) {
            if (!keywords.empty()) keywords += ' ';
            keywords += f;
        }
        if (corpus::normalize_text(keywords).empty()) {
            ex.keyword = {corpus::BpeModel::kUnk, corpus::BpeModel::kEos};
        } else {
            ex.keyword = model.text_target(keywords);
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<TrainExample> encode_examples(const core::CierModel& model,
                                          const std::vector<corpus::InteractionRecord>& records) {
    std::vector<std::size_t> all(records.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return encode_examples(model, records, all);
}

std::string to_json_line(const EpochLog& log) {
    nlohmann::json j = {{"epoch", log.epoch},
                        {"train_loss_e", log.train_loss_e},
                        {"train_loss_r", log.train_loss_r},
                        {"val_loss", log.val_loss},
                        {"task_fraction", log.task_fraction},
                        {"saved", log.saved}};
    return j.dump();
}

bool BestCheckpointSelector::offer(double val_loss) {
    ++offers_;
    if (offers_ == 1 || val_loss < best_) {
        best_ = val_loss;
        best_epoch_ = offers_;
        return true;
    }
    return false;
}

Trainer::Trainer(core::CierModel& model, TrainerConfig config)
    : model_(model),
      config_(std::move(config)),
      optimizer_(model.backbone().params(), model.backbone().trainable_parameters(config_.mode),
                 optimizer_config(config_)) {
    config_.validate();
}

TrainState Trainer::make_state(std::size_t total_batches) const {
    TrainState s;
    s.total_batches = total_batches;
    s.rng = Rng(config_.seed);
    return s;
}

BatchPlan Trainer::plan_batch(std::span<const TrainExample> batch, TrainState& state) const {
    BatchPlan plan;
    for (const auto& ex : batch) {
        plan.rating_context.push_back(smooth_rating(ex.rating, config_.smoothing, state.rng));
        if (config_.curriculum) {
            plan.tasks.push_back(curriculum_task(state.t, state.total_batches, state.rng));
        } else {
            plan.tasks.push_back(Task::kExplanation);
        }
    }
    return plan;
}

StepLosses Trainer::accumulate_gradients(std::span<const TrainExample> batch, const BatchPlan& plan, double lambda,
                                         bool include_rating) {
    if (batch.empty()) throw ValidationError("empty training batch");
    if (plan.tasks.size() != batch.size() || plan.rating_context.size() != batch.size()) {
        throw ValidationError("batch plan does not match the batch");
    }
    backbone::Backbone& bb = model_.backbone();
    bb.params().zero_grad();
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const auto vocab = static_cast<Eigen::Index>(bb.config().vocab_size);

    StepLosses out;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const TrainExample& ex = batch[i];

        if (include_rating) {
            const core::ModelInput in = model_.build_rating_input(ex.user_id, ex.item_id);
            ForwardCache cache;
            const Matrix logits = bb.forward(bb.materialize(in.slots), &cache, /*last_only=*/true);
            const RatingDistribution pred = core::restricted_softmax(model_.verbalizer_logits(logits.row(0)));
            const RatingDistribution truth = RatingDistribution::one_hot(ex.rating);
            out.rating += rating_loss(pred, truth) * inv_b;
            const auto g = rating_loss_grad(pred, truth);
            Matrix dlogits = Matrix::Zero(1, vocab);
            for (int x = 1; x <= core::kRatingClasses; ++x) {
                dlogits(0, model_.verbalizer().token(x)) = lambda * inv_b * g[static_cast<std::size_t>(x - 1)];
            }
            bb.scatter_gradient(in.slots, bb.backward(cache, dlogits));
        }

        const bool explanation = plan.tasks[i] == Task::kExplanation;
        if (explanation) ++out.explanation_tasks;
        const auto& prompt = explanation ? model_.explanation_prompt_ids() : model_.keyword_prompt_ids();
        const auto& targets = explanation ? ex.explanation : ex.keyword;
        const core::ModelInput in =
            model_.build_explanation_input(ex.user_id, ex.item_id, plan.rating_context[i], prompt, targets);
        ForwardCache cache;
        const Matrix logits = forward_teacher_forced(bb, in, &cache);
        TextLoss tl = text_loss(logits, in.layout, targets, /*with_grad=*/true);
        out.text += tl.loss * inv_b;
        tl.dlogits *= inv_b;
        backward_teacher_forced(bb, in, cache, tl.dlogits);
    }
    out.total = out.text + lambda * out.rating;
    return out;
}

StepLosses Trainer::joint_step(std::span<const TrainExample> batch, TrainState& state) {
    const BatchPlan plan = plan_batch(batch, state);
    const StepLosses losses = accumulate_gradients(batch, plan, config_.lambda);
    check_finite(losses.text, "text loss", state.t);
    check_finite(losses.rating, "rating loss", state.t);
    optimizer_.step(model_.backbone().params());
    ++state.t;
    return losses;
}

double Trainer::validation_loss(std::span<const TrainExample> examples) const {
    if (examples.empty()) throw ValidationError("validation set is empty");
    const backbone::Backbone& bb = model_.backbone();
    double total = 0.0;
    for (const auto& ex : examples) {
        const RatingDistribution truth = RatingDistribution::one_hot(ex.rating);
        const double lr = rating_loss(model_.predict_rating(ex.user_id, ex.item_id), truth);
        const core::ModelInput in =
            model_.build_explanation_input(ex.user_id, ex.item_id, truth, model_.explanation_prompt_ids(), ex.explanation);
        const Matrix logits = forward_teacher_forced(bb, in, nullptr);
        total += text_loss(logits, in.layout, ex.explanation).loss + config_.lambda * lr;
    }
    return total / static_cast<double>(examples.size());
}

FitResult Trainer::fit(std::span<const TrainExample> train, std::span<const TrainExample> valid,
                       const std::function<void(const EpochLog&)>& on_epoch) {
    if (train.empty()) throw ValidationError("training set is empty");
    const auto bs = static_cast<std::size_t>(config_.batch_size);
    const std::size_t batches_per_epoch = (train.size() + bs - 1) / bs;
    TrainState state = make_state(batches_per_epoch * static_cast<std::size_t>(config_.epochs));

    BestCheckpointSelector selector;
    backbone::ParameterSet best = model_.backbone().params();
    FitResult result;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<TrainExample> batch;
    for (int epoch = 1; epoch <= config_.epochs; ++epoch) {
        state.epoch = epoch;
        state.rng.shuffle(order);
        double sum_e = 0.0;
        double sum_r = 0.0;
        std::size_t explanation = 0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            batch.clear();
            for (std::size_t i = b * bs; i < std::min(train.size(), (b + 1) * bs); ++i) batch.push_back(train[order[i]]);
            const StepLosses l = joint_step(batch, state);
            sum_e += l.text;
            sum_r += l.rating;
            explanation += l.explanation_tasks;
        }
        EpochLog log;
        log.epoch = epoch;
        log.train_loss_e = sum_e / static_cast<double>(batches_per_epoch);
        log.train_loss_r = sum_r / static_cast<double>(batches_per_epoch);
        log.task_fraction = static_cast<double>(explanation) / static_cast<double>(train.size());
        log.val_loss = valid.empty() ? log.train_loss_e + config_.lambda * log.train_loss_r : validation_loss(valid);
        check_finite(log.val_loss, "validation loss", state.t);
        log.saved = selector.offer(log.val_loss);
        if (log.saved) {
            best = model_.backbone().params();
            state.best_val_loss = log.val_loss;
        }
        result.log.push_back(log);
        if (on_epoch) on_epoch(log);
    }

    auto& params = model_.backbone().params();
    for (std::size_t i = 0; i < params.size(); ++i) params[i].value = best[i].value;
    result.best_epoch = selector.best_epoch();
    result.best_val_loss = selector.best();
    return result;
}

double Trainer::pretrain_base(std::span<const TrainExample> examples, int epochs) {
    if (examples.empty() || epochs <= 0) return 0.0;
    backbone::Backbone& bb = model_.backbone();
    std::vector<std::size_t> all(bb.params().size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    AdamWConfig cfg = optimizer_config(config_);
    AdamW opt(bb.params(), all, cfg);
    Rng rng(config_.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto bs = static_cast<std::size_t>(config_.batch_size);
    double last_epoch_loss = 0.0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        double sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::size_t end = std::min(order.size(), start + bs);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            bb.params().zero_grad();
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const auto& ex = examples[order[i]];
                core::ModelInput in;
                in.slots.push_back(bb.token_slot(corpus::BpeModel::kBos));
                for (TokenId id : ex.explanation) in.slots.push_back(bb.token_slot(id));
                in.layout.target = {1, ex.explanation.size()};
                ForwardCache cache;
                const Matrix logits = forward_teacher_forced(bb, in, &cache);
                TextLoss tl = text_loss(logits, in.layout, ex.explanation, true);
                batch_loss += tl.loss * inv_b;
                tl.dlogits *= inv_b;
                backward_teacher_forced(bb, in, cache, tl.dlogits);
            }
            check_finite(batch_loss, "pretraining loss", n_batches);
            opt.step(bb.params());
            sum += batch_loss;
            ++n_batches;
        }
        last_epoch_loss = sum / static_cast<double>(n_batches);
    }
    return last_epoch_loss;
}

}  // namespace cier::trainer
