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

#include "lateprot/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <unordered_map>

#include "binary_io.hpp"
#include "lateprot/error.hpp"
#include "lateprot/kernels.hpp"

namespace lateprot {
namespace {

constexpr std::string_view kHeadMagic = "PCW1";

// Valid rows of a hidden set, widened to double.
struct DenseRows {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> v;
};

DenseRows to_dense(const HiddenSet& h) {
  DenseRows d{h.valid_count(), h.dim(), {}};
  d.v.reserve(d.rows * d.dim);
  for (std::size_t t = 0; t < h.length(); ++t) {
    if (!h.is_valid(t)) continue;
    for (float x : h.row(t)) d.v.push_back(x);
  }
  return d;
}

// Forward state of one projected set.
struct Projected {
  const DenseRows* hidden = nullptr;
  std::vector<double> e;      // rows x d_out, unit rows
  std::vector<double> norms;  // ||W h_t||
};

Projected project_dense(const DenseRows& h, const HeadWeights& w) {
  Projected p;
  p.hidden = &h;
  p.e.assign(h.rows * w.d_out, 0.0);
  p.norms.assign(h.rows, 0.0);
  const auto& k = kernels::active();
  for (std::size_t t = 0; t < h.rows; ++t) {
    const double* ht = h.v.data() + t * h.dim;
    double* et = p.e.data() + t * w.d_out;
    double sq = 0.0;
    for (std::size_t d = 0; d < w.d_out; ++d) {
      et[d] = k.dot_f64(w.w.data() + d * w.h_in, ht, w.h_in);
      sq += et[d] * et[d];
    }
    const double n = std::sqrt(sq);
    if (!std::isfinite(n)) fail(ErrorCode::kNonFinite, "projected row is not finite");
    if (n < kZeroNormThreshold) throw ZeroNormRowError(t, "projected training row");
    for (std::size_t d = 0; d < w.d_out; ++d) et[d] /= n;
    p.norms[t] = n;
  }
  return p;
}

// Accumulates dL/dW for one set given dL/de for each of its rows.
void backprop_set(const Projected& p, const std::vector<double>& ge, const HeadWeights& w,
                  std::vector<double>& grad) {
  const DenseRows& h = *p.hidden;
  std::vector<double> gu(w.d_out);
  for (std::size_t t = 0; t < h.rows; ++t) {
    const double* et = p.e.data() + t * w.d_out;
    const double* g = ge.data() + t * w.d_out;
    double proj = 0.0;
    for (std::size_t d = 0; d < w.d_out; ++d) proj += g[d] * et[d];
    bool any = false;
    for (std::size_t d = 0; d < w.d_out; ++d) {
      gu[d] = (g[d] - proj * et[d]) / p.norms[t];
      any = any || gu[d] != 0.0;
    }
    if (!any) continue;
    const double* ht = h.v.data() + t * h.dim;
    for (std::size_t d = 0; d < w.d_out; ++d) {
      double* row = grad.data() + d * w.h_in;
      for (std::size_t c = 0; c < w.h_in; ++c) row[c] += gu[d] * ht[c];
    }
  }
}

LossAndGrad loss_and_grad(std::span<const DenseRows* const> anchors,
                          std::span<const DenseRows* const> positives, const HeadWeights& w,
                          double tau) {
  const std::size_t b = anchors.size();
  std::vector<Projected> pa;
  std::vector<Projected> pp;
  pa.reserve(b);
  pp.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    if (anchors[i]->dim != w.h_in || positives[i]->dim != w.h_in) {
      fail(ErrorCode::kDimensionMismatch, "training set dim differs from head input dim");
    }
    if (anchors[i]->rows == 0 || positives[i]->rows == 0) fail(ErrorCode::kEmptySet, "training set with no valid rows");
    pa.push_back(project_dense(*anchors[i], w));
    pp.push_back(project_dense(*positives[i], w));
  }

  // Score every cell and remember, per anchor row, which positive row won.
  std::vector<double> scores(b * b, 0.0);
  std::vector<std::vector<std::size_t>> argmax(b * b);
  const auto cells = static_cast<std::ptrdiff_t>(b * b);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < cells; ++c) {
    const auto i = static_cast<std::size_t>(c) / b;
    const auto j = static_cast<std::size_t>(c) % b;
    const auto& k = kernels::active();
    const Projected& a = pa[i];
    const Projected& p = pp[j];
    auto& sel = argmax[static_cast<std::size_t>(c)];
    sel.resize(a.hidden->rows);
    std::vector<double> row_max(a.hidden->rows);
    for (std::size_t t = 0; t < a.hidden->rows; ++t) {
      row_max[t] = k.max_dot_f64(a.e.data() + t * w.d_out, p.e.data(), p.hidden->rows, w.d_out,
                                 nullptr, &sel[t]);
    }
    scores[static_cast<std::size_t>(c)] = kernels::pairwise_sum(std::span<const double>(row_max));
  }

  LossAndGrad out;
  std::vector<double> g_s;
  out.loss = infonce_loss(scores, b, tau, &g_s);
  out.grad.assign(w.d_out * w.h_in, 0.0);

  std::vector<std::vector<double>> ge_a(b), ge_p(b);
  for (std::size_t i = 0; i < b; ++i) {
    ge_a[i].assign(pa[i].e.size(), 0.0);
    ge_p[i].assign(pp[i].e.size(), 0.0);
  }
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double g = g_s[i * b + j];
      if (g == 0.0) continue;
      const auto& sel = argmax[i * b + j];
      for (std::size_t t = 0; t < sel.size(); ++t) {
        const double* ea = pa[i].e.data() + t * w.d_out;
        const double* ep = pp[j].e.data() + sel[t] * w.d_out;
        double* ga = ge_a[i].data() + t * w.d_out;
        double* gp = ge_p[j].data() + sel[t] * w.d_out;
        for (std::size_t d = 0; d < w.d_out; ++d) {
          ga[d] += g * ep[d];
          gp[d] += g * ea[d];
        }
      }
    }
  }
  for (std::size_t i = 0; i < b; ++i) {
    backprop_set(pa[i], ge_a[i], w, out.grad);
    backprop_set(pp[i], ge_p[i], w, out.grad);
  }
  return out;
}

std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[draw_below(rng, i)]);
}

void adamw_step(HeadWeights& w, std::span<const double> grad, std::vector<double>& m,
                std::vector<double>& v, std::size_t t, double lr, const TrainConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < w.w.size(); ++k) {
    w.w[k] *= 1.0 - lr * cfg.weight_decay;
    m[k] = cfg.adam_beta1 * m[k] + (1.0 - cfg.adam_beta1) * grad[k];
    v[k] = cfg.adam_beta2 * v[k] + (1.0 - cfg.adam_beta2) * grad[k] * grad[k];
    const double mhat = m[k] / bc1;
    const double vhat = v[k] / bc2;
    w.w[k] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

struct PairSource {
  std::function<std::vector<TrainPair>(std::size_t epoch)> pairs_for_epoch;
  std::size_t pairs_per_epoch = 0;
  std::size_t h_in = 0;
};

TrainResult run_training(const PairSource& source, std::size_t d_out, const TrainConfig& cfg,
                         const StepCallback& on_step) {
  validate(cfg);
  if (source.pairs_per_epoch < cfg.batch_size) {
    fail(ErrorCode::kInsufficientPairs, std::to_string(source.pairs_per_epoch) +
                                            " training pairs cannot fill a batch of " +
                                            std::to_string(cfg.batch_size));
  }
  if (d_out == 0) fail(ErrorCode::kInvalidArgument, "projection output dim must be >= 1");
  const std::size_t steps_per_epoch = source.pairs_per_epoch / cfg.batch_size;
  const std::size_t total_steps = steps_per_epoch * cfg.epochs;

  HeadWeights w = init_head(d_out, source.h_in, cfg.seed);
  std::vector<double> m(w.w.size(), 0.0), v(w.w.size(), 0.0);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  std::unordered_map<const HiddenSet*, DenseRows> dense;
  auto dense_of = [&](const HiddenSet* h) -> const DenseRows* {
    auto it = dense.find(h);
    if (it == dense.end()) it = dense.emplace(h, to_dense(*h)).first;
    return &it->second;
  };

  TrainResult result{ProjectionHead(d_out, source.h_in, std::vector<float>(d_out * source.h_in)), {}, {}, {}};
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto pairs = source.pairs_for_epoch(epoch);
    shuffle(pairs, rng);
    double epoch_loss = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
      std::vector<const DenseRows*> anchors, positives;
      for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        const auto& p = pairs[s * cfg.batch_size + i];
        anchors.push_back(dense_of(p.anchor.get()));
        positives.push_back(dense_of(p.positive.get()));
      }
      LossAndGrad lg;
      try {
        lg = loss_and_grad(anchors, positives, w, cfg.temperature);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kNonFinite) throw NonFiniteStepError(step, e.what());
        throw;
      }
      const double norm = clip_gradient(lg.grad, cfg.grad_clip_norm);
      if (!std::isfinite(lg.loss) || !std::isfinite(norm)) {
        throw NonFiniteStepError(step, "loss or gradient is not finite");
      }
      const double lr = onecycle_lr(step, total_steps, cfg);
      adamw_step(w, lg.grad, m, v, step + 1, lr, cfg);
      const StepLog entry{step, lr, lg.loss, norm};
      result.log.push_back(entry);
      if (on_step) on_step(entry);
      epoch_loss += lg.loss;
    }
    result.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
  }
  result.weights = std::move(w);
  result.head = result.weights.to_head();
  return result;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 2) {
    fail(ErrorCode::kInsufficientPairs, "batch_size must be >= 2 to provide in-batch negatives");
  }
  if (cfg.epochs == 0) fail(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (!(cfg.temperature > 0.0)) fail(ErrorCode::kInvalidArgument, "temperature must be > 0");
  if (!(cfg.peak_lr > 0.0)) fail(ErrorCode::kInvalidArgument, "peak learning rate must be > 0");
  if (!(cfg.warmup_frac >= 0.0 && cfg.warmup_frac < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "warmup_frac must be in [0, 1)");
  }
  if (!(cfg.weight_decay >= 0.0)) fail(ErrorCode::kInvalidArgument, "weight_decay must be >= 0");
  if (!(cfg.grad_clip_norm > 0.0)) fail(ErrorCode::kInvalidArgument, "grad_clip_norm must be > 0");
}

ProjectionHead HeadWeights::to_head() const {
  std::vector<float> f(w.begin(), w.end());
  return ProjectionHead(d_out, h_in, std::move(f));
}

HeadWeights HeadWeights::from_head(const ProjectionHead& head) {
  return {head.d_out(), head.h_in(), std::vector<double>(head.weights().begin(), head.weights().end())};
}

HeadWeights init_head(std::size_t d_out, std::size_t h_in, std::uint64_t seed) {
  if (d_out == 0 || h_in == 0) fail(ErrorCode::kInvalidArgument, "head dims must be >= 1");
  const double bound = std::sqrt(6.0 / static_cast<double>(h_in + d_out));
  std::mt19937_64 rng(seed);
  HeadWeights w{d_out, h_in, std::vector<double>(d_out * h_in)};
  for (auto& x : w.w) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x = (2.0 * u - 1.0) * bound;
  }
  return w;
}

double infonce_loss(std::span<const double> scores, std::size_t b, double tau, std::vector<double>* grad) {
  if (b == 0 || scores.size() != b * b) fail(ErrorCode::kDimensionMismatch, "score matrix must be square and non-empty");
  if (!(tau > 0.0)) fail(ErrorCode::kInvalidArgument, "temperature must be > 0");
  for (double s : scores) {
    if (!std::isfinite(s)) fail(ErrorCode::kNonFinite, "score matrix has NaN/Inf");
  }
  if (grad) grad->assign(b * b, 0.0);
  const double inv_b = 1.0 / static_cast<double>(b);
  double total = 0.0;
  std::vector<double> z(b);
  // direction 0: rows of S; direction 1: rows of S^T.
  for (int dir = 0; dir < 2; ++dir) {
    double ce = 0.0;
    for (std::size_t r = 0; r < b; ++r) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < b; ++c) {
        z[c] = (dir == 0 ? scores[r * b + c] : scores[c * b + r]) / tau;
        mx = std::max(mx, z[c]);
      }
      double sum = 0.0;
      for (std::size_t c = 0; c < b; ++c) sum += std::exp(z[c] - mx);
      const double lse = mx + std::log(sum);
      ce += lse - z[r];
      if (grad) {
        for (std::size_t c = 0; c < b; ++c) {
          const double g = 0.5 * inv_b / tau * (std::exp(z[c] - lse) - (c == r ? 1.0 : 0.0));
          (*grad)[dir == 0 ? r * b + c : c * b + r] += g;
        }
      }
    }
    total += ce * inv_b;
  }
  return 0.5 * total;
}

double infonce_loss(const ScoreMatrix& s, double tau) {
  if (s.rows != s.cols) fail(ErrorCode::kDimensionMismatch, "InfoNCE needs a square score matrix");
  std::vector<double> d(s.values.begin(), s.values.end());
  return infonce_loss(d, s.rows, tau);
}

LossAndGrad infonce_grad_w(std::span<const TrainPair> batch, const HeadWeights& w, double tau) {
  if (batch.size() < 2) fail(ErrorCode::kInsufficientPairs, "a batch needs >= 2 pairs");
  if (w.w.size() != w.d_out * w.h_in) fail(ErrorCode::kDimensionMismatch, "head weights size != D*H");
  std::vector<DenseRows> storage;
  storage.reserve(2 * batch.size());
  std::vector<const DenseRows*> anchors, positives;
  for (const auto& p : batch) {
    storage.push_back(to_dense(*p.anchor));
    anchors.push_back(&storage.back());
    storage.push_back(to_dense(*p.positive));
    positives.push_back(&storage.back());
  }
  return loss_and_grad(anchors, positives, w, tau);
}

double onecycle_lr(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  if (total_steps == 0 || step >= total_steps) {
    fail(ErrorCode::kInvalidArgument, "learning-rate step out of range");
  }
  const auto warmup = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(cfg.warmup_frac * static_cast<double>(total_steps))));
  if (step < warmup) return cfg.peak_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const double floor_lr = cfg.peak_lr / 1e4;
  const std::size_t span = total_steps - warmup;
  const double progress =
      span <= 1 ? 1.0 : static_cast<double>(step - warmup) / static_cast<double>(span - 1);
  return floor_lr + (cfg.peak_lr - floor_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double clip_gradient(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

TrainResult train_projection(std::span<const TrainPair> pairs, std::size_t d_out, const TrainConfig& cfg,
                             const StepCallback& on_step) {
  validate(cfg);
  if (pairs.empty()) fail(ErrorCode::kInsufficientPairs, "no training pairs");
  for (const auto& p : pairs) {
    if (!p.anchor || !p.positive) fail(ErrorCode::kInvalidArgument, "training pair with a missing set");
  }
  std::vector<TrainPair> owned(pairs.begin(), pairs.end());
  PairSource src;
  src.pairs_per_epoch = owned.size();
  src.h_in = owned.front().anchor->dim();
  src.pairs_for_epoch = [&owned](std::size_t) { return owned; };
  return run_training(src, d_out, cfg, on_step);
}

std::vector<TrainPair> sample_pairs(std::span<const std::shared_ptr<const HiddenSet>> sets,
                                    std::span<const std::string> groups, std::uint64_t seed) {
  if (sets.size() != groups.size()) fail(ErrorCode::kDimensionMismatch, "sets and groups differ in length");
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < groups.size(); ++i) members[groups[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<TrainPair> out;
  for (auto& [group, idx] : members) {
    if (idx.size() < 2) continue;
    // A random cyclic order: every member is used as a positive exactly once.
    shuffle(idx, rng);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.push_back({sets[idx[k]], sets[idx[(k + 1) % idx.size()]], group});
    }
  }
  return out;
}

TrainResult train_projection_grouped(std::span<const std::shared_ptr<const HiddenSet>> sets,
                                     std::span<const std::string> groups, std::size_t d_out,
                                     const TrainConfig& cfg, const StepCallback& on_step) {
  const auto first = sample_pairs(sets, groups, cfg.seed);
  if (first.empty()) fail(ErrorCode::kInsufficientPairs, "no group has two members");
  PairSource src;
  src.pairs_per_epoch = first.size();
  src.h_in = first.front().anchor->dim();
  src.pairs_for_epoch = [&](std::size_t epoch) { return sample_pairs(sets, groups, cfg.seed + epoch); };
  return run_training(src, d_out, cfg, on_step);
}

void write_training_log_line(std::ostream& out, const StepLog& entry) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%zu\t%.9g\t%.9g\t%.9g\n", entry.step, entry.lr, entry.loss, entry.grad_norm);
  out << buf;
}

void write_head_file(const std::string& path, const ProjectionHead& head) {
  binary::Writer w(path);
  w.magic(kHeadMagic);
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(head.h_in()));
  w.scalar<std::uint32_t>(static_cast<std::uint32_t>(head.d_out()));
  w.array<float>(head.weights());
  w.close();
}

ProjectionHead read_head_file(const std::string& path) {
  binary::Reader r(path);
  r.expect_magic(kHeadMagic);
  const auto h_in = r.scalar<std::uint32_t>();
  const auto d_out = r.scalar<std::uint32_t>();
  if (h_in == 0 || d_out == 0) fail(ErrorCode::kParseError, "'" + path + "' declares an empty head");
  auto weights = r.array<float>(static_cast<std::size_t>(h_in) * d_out);
  if (!r.at_end()) fail(ErrorCode::kParseError, "'" + path + "' has trailing bytes");
  return ProjectionHead(d_out, h_in, std::move(weights));
}

}  // namespace lateprot
