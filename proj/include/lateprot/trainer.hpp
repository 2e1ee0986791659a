// Copyright 2026 The lateprot Authors
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

// Contrastive training of the projection head: symmetric InfoNCE over
// in-batch MaxSim score matrices, analytic gradients, AdamW with a
// one-cycle learning-rate schedule.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lateprot/core_types.hpp"
#include "lateprot/scorer.hpp"

namespace lateprot {

//! Anchor/positive from the same group. Sets are shared, never copied.
struct TrainPair {
  std::shared_ptr<const HiddenSet> anchor;
  std::shared_ptr<const HiddenSet> positive;
  std::string group;
};

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t epochs = 3;
  double peak_lr = 2e-5;
  double warmup_frac = 0.1;
  double weight_decay = 0.01;
  double grad_clip_norm = 1.0;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

//! Throws kInsufficientPairs for batch_size < 2, kInvalidArgument otherwise.
void validate(const TrainConfig& cfg);

//! Training-precision copy of W (d_out x h_in, row-major).
struct HeadWeights {
  std::size_t d_out = 0;
  std::size_t h_in = 0;
  std::vector<double> w;

  ProjectionHead to_head() const;
  static HeadWeights from_head(const ProjectionHead& head);
  bool operator==(const HeadWeights&) const = default;
};

//! Entries i.i.d. uniform in +-sqrt(6 / (h_in + d_out)).
HeadWeights init_head(std::size_t d_out, std::size_t h_in, std::uint64_t seed);

//! Symmetric InfoNCE on a row-major b x b score matrix:
//! 0.5 * [CE(S/tau, diag) + CE(S^T/tau, diag)], each CE a mean over rows.
//! When `grad` is given it receives dL/dS. Throws kNonFinite.
double infonce_loss(std::span<const double> scores, std::size_t b, double tau,
                    std::vector<double>* grad = nullptr);
double infonce_loss(const ScoreMatrix& s, double tau);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // d_out x h_in
};

//! Loss of the batch under W and its exact gradient. MaxSim routes the
//! gradient through the selected candidate row only (lowest index on ties).
LossAndGrad infonce_grad_w(std::span<const TrainPair> batch, const HeadWeights& w, double tau);

//! Linear warmup to peak over floor(warmup_frac * total) steps (first step at
//! peak / warmup_steps), then cosine decay to peak / 1e4 at the last step.
double onecycle_lr(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

//! Rescales `grad` in place to global norm <= max_norm; returns the norm
//! before clipping.
double clip_gradient(std::span<double> grad, double max_norm);

struct StepLog {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct TrainResult {
  ProjectionHead head;
  HeadWeights weights;
  std::vector<StepLog> log;
  std::vector<double> epoch_mean_loss;
};

using StepCallback = std::function<void(const StepLog&)>;

//! Shuffles `pairs` each epoch (seeded), runs floor(n / batch_size) steps per
//! epoch. Throws kInsufficientPairs, or NonFiniteStepError naming the step.
TrainResult train_projection(std::span<const TrainPair> pairs, std::size_t d_out,
                             const TrainConfig& cfg, const StepCallback& on_step = {});

//! One positive per anchor, drawn uniformly from the anchor's group without
//! replacement within the epoch where the group allows it. Anchors whose
//! group has a single member are skipped.
std::vector<TrainPair> sample_pairs(std::span<const std::shared_ptr<const HiddenSet>> sets,
                                    std::span<const std::string> groups, std::uint64_t seed);

//! Resamples positives with sample_pairs(seed + epoch) at every epoch.
TrainResult train_projection_grouped(std::span<const std::shared_ptr<const HiddenSet>> sets,
                                     std::span<const std::string> groups, std::size_t d_out,
                                     const TrainConfig& cfg, const StepCallback& on_step = {});

//! `step\tlr\tloss\tgrad_norm` per line.
void write_training_log_line(std::ostream& out, const StepLog& entry);

//! "PCW1", u32 H, u32 D, then the D x H weights as f32, little-endian.
void write_head_file(const std::string& path, const ProjectionHead& head);
ProjectionHead read_head_file(const std::string& path);

}  // namespace lateprot
