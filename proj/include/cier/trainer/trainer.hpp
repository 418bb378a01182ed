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

#ifndef CIER_TRAINER_TRAINER_HPP_
#define CIER_TRAINER_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cier/backbone/backbone.hpp"
#include "cier/core/model.hpp"
#include "cier/corpus/record.hpp"
#include "cier/trainer/curriculum.hpp"
#include "cier/trainer/optimizer.hpp"
#include "cier/trainer/smoothing.hpp"

namespace cier::trainer {

struct TrainerConfig {
    double lambda = 0.1;  // weight of the rating loss
    SmoothingConfig smoothing;
    int epochs = 3;
    int batch_size = 16;
    double lr_adapter = 1e-4;
    double lr_other = 1e-3;
    double weight_decay = 0.01;
    backbone::TrainMode mode = backbone::TrainMode::kFull;
    bool curriculum = true;    // false: every example trains the explanation task
    int pretrain_epochs = 2;   // language-model warm-up of the base in adapter mode
    std::uint64_t seed = 42;

    void validate() const;
};

/// A record encoded for training.
struct TrainExample {
    std::string user_id;
    std::string item_id;
    int rating = 3;
    std::vector<TokenId> explanation;  // <= 20 tokens + EOS
    std::vector<TokenId> keyword;      // <= 20 tokens + EOS
};

std::vector<TrainExample> encode_examples(const core::CierModel& model,
                                          const std::vector<corpus::InteractionRecord>& records,
                                          std::span<const std::size_t> indices);
std::vector<TrainExample> encode_examples(const core::CierModel& model,
                                          const std::vector<corpus::InteractionRecord>& records);

struct TrainState {
    std::size_t t = 0;              // batches done
    std::size_t total_batches = 0;  // T
    int epoch = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    Rng rng;
};

/// Per-example random choices for one batch, drawn from the state rng.
struct BatchPlan {
    std::vector<core::RatingDistribution> rating_context;  // smoothed ground truth
    std::vector<Task> tasks;
};

struct StepLosses {
    double text = 0.0;    // L_e, batch mean
    double rating = 0.0;  // L_r, batch mean
    double total = 0.0;   // L_e + lambda * L_r
    std::size_t explanation_tasks = 0;
};

struct EpochLog {
    int epoch = 0;
    double train_loss_e = 0.0;
    double train_loss_r = 0.0;
    double val_loss = 0.0;
    double task_fraction = 0.0;  // share of examples on the explanation task
    bool saved = false;
};

std::string to_json_line(const EpochLog& log);

/// Tracks the lowest validation loss seen so far.
class BestCheckpointSelector {
public:
    /// True when `val_loss` is a strict improvement (the first offer always is).
    bool offer(double val_loss);
    double best() const { return best_; }
    int best_epoch() const { return best_epoch_; }

private:
    double best_ = std::numeric_limits<double>::infinity();
    int best_epoch_ = 0;
    int offers_ = 0;
};

struct FitResult {
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

/// Joint rating + text training of a CierModel.
class Trainer {
public:
    Trainer(core::CierModel& model, TrainerConfig config);

    const TrainerConfig& config() const { return config_; }
    TrainState make_state(std::size_t total_batches) const;

    /// Draws the smoothing gate and curriculum task for every example.
    BatchPlan plan_batch(std::span<const TrainExample> batch, TrainState& state) const;

    /// Zeroes gradients, then accumulates gradients of L_e + lambda * L_r for
    /// the planned batch. With include_rating = false the rating branch is
    /// skipped entirely.
    StepLosses accumulate_gradients(std::span<const TrainExample> batch, const BatchPlan& plan, double lambda,
                                    bool include_rating = true);

    /// plan_batch + accumulate_gradients + one optimizer update; advances t.
    /// Throws Error on a non-finite loss.
    StepLosses joint_step(std::span<const TrainExample> batch, TrainState& state);

    /// Loss with smoothing off and every example on the explanation task.
    double validation_loss(std::span<const TrainExample> examples) const;

    /// `epochs` passes with best-by-validation selection; the model ends up
    /// holding the best parameters. An empty validation set falls back to the
    /// epoch's training loss.
    FitResult fit(std::span<const TrainExample> train, std::span<const TrainExample> valid,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

    /// Next-token language-model warm-up of every parameter on explanation
    /// text, used before adapter-mode training.
    double pretrain_base(std::span<const TrainExample> examples, int epochs);

private:
    core::CierModel& model_;
    TrainerConfig config_;
    AdamW optimizer_;
};

}  // namespace cier::trainer

#endif  // CIER_TRAINER_TRAINER_HPP_
