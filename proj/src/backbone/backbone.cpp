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

#include "cier/backbone/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cier::backbone {
namespace {

constexpr double kLayerNormEps = 1e-5;

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.normal();
    return m;
}

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache* cache) {
    const Eigen::Index n = x.rows();
    const auto d = static_cast<double>(x.cols());
    Matrix xhat(x.rows(), x.cols());
    Vector rstd(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const double mean = x.row(t).sum() / d;
        const auto centered = x.row(t).array() - mean;
        const double var = centered.square().sum() / d;
        rstd(t) = 1.0 / std::sqrt(var + kLayerNormEps);
        xhat.row(t) = centered * rstd(t);
    }
    Matrix y = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->rstd = std::move(rstd);
    }
    return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormCache& cache, const Matrix& gain, Matrix& dgain,
                           Matrix& dbias) {
    dgain.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    dbias.row(0) += dy.colwise().sum();
    const Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
    const auto d = static_cast<double>(dy.cols());
    Matrix dx(dy.rows(), dy.cols());
    for (Eigen::Index t = 0; t < dy.rows(); ++t) {
        const double mean_dxhat = dxhat.row(t).sum() / d;
        const double mean_dxhat_xhat = dxhat.row(t).dot(cache.xhat.row(t)) / d;
        dx.row(t) = cache.rstd(t) *
                    (dxhat.row(t).array() - mean_dxhat - cache.xhat.row(t).array() * mean_dxhat_xhat).matrix();
    }
    return dx;
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

double gelu(double x) {
    return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
}

double gelu_grad(double x) {
    const double th = std::tanh(kGeluC * (x + 0.044715 * x * x * x));
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

}  // namespace

void BackboneConfig::validate() const {
    if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || ffn_width <= 0) {
        throw ValidationError("backbone sizes must be positive");
    }
    if (d_model % n_heads != 0) throw ValidationError("d_model must be divisible by n_heads");
    if (context_length < 2) throw ValidationError("context_length must be at least 2");
    if (vocab_size <= 9) throw ValidationError("vocab_size must cover specials and verbalizer tokens");
    if (adapter_rank < 0) throw ValidationError("adapter_rank must be non-negative");
    for (const auto& p : adapted_projections) {
        if (p != "q" && p != "k" && p != "v" && p != "o") {
            throw ValidationError("unknown adapted projection '" + p + "'");
        }
    }
}

void BackboneConfig::validate_layout(std::size_t prompt_tokens, std::size_t max_explanation_tokens) const {
    const std::size_t needed = 2 + 1 + prompt_tokens + max_explanation_tokens;
    if (static_cast<std::size_t>(context_length) < needed) {
        throw ValidationError("context_length " + std::to_string(context_length) + " < required " +
                              std::to_string(needed));
    }
}

IdTable::IdTable(std::vector<std::string> ids) : ids_(std::move(ids)) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!rows_.emplace(ids_[i], static_cast<Eigen::Index>(i)).second) {
            throw ValidationError("duplicate id '" + ids_[i] + "'");
        }
    }
}

Eigen::Index IdTable::row(std::string_view id) const {
    auto it = rows_.find(id);
    return it == rows_.end() ? cold_start_row() : it->second;
}

bool IdTable::contains(std::string_view id) const { return rows_.find(id) != rows_.end(); }

Vector adapted_projection(const Vector& x, const Matrix& W, const Matrix& A, const Matrix& B, double scale) {
    if (W.cols() != x.size()) throw ValidationError("projection input width mismatch");
    Vector out = W * x;
    if (A.rows() == 0 && B.cols() == 0) return out;
    if (A.cols() != x.size() || B.rows() != W.rows() || A.rows() != B.cols()) {
        throw ValidationError("adapter factor shapes do not match the projection");
    }
    out += scale * (B * (A * x));
    return out;
}

Backbone::Backbone(BackboneConfig config, std::vector<std::string> user_ids, std::vector<std::string> item_ids,
                   std::uint64_t seed)
    : config_(std::move(config)), users_(std::move(user_ids)), items_(std::move(item_ids)) {
    config_.validate();
    Rng rng(seed);
    const int d = config_.d_model;
    const int f = config_.ffn_width;
    const double s = config_.init_std;
    const auto adapted = [&](const std::string& which) {
        return config_.adapter_rank > 0 &&
               std::find(config_.adapted_projections.begin(), config_.adapted_projections.end(), which) !=
                   config_.adapted_projections.end();
    };

    tok_emb_ = params_.add("tok_emb", ParamGroup::kBase, random_matrix(config_.vocab_size, d, s, rng));
    pos_emb_ = params_.add("pos_emb", ParamGroup::kBase, random_matrix(config_.context_length, d, s, rng));
    Matrix users = random_matrix(users_.rows(), d, s, rng);
    users.row(users_.cold_start_row()).setZero();
    user_emb_ = params_.add("user_emb", ParamGroup::kUserTable, std::move(users));
    Matrix items = random_matrix(items_.rows(), d, s, rng);
    items.row(items_.cold_start_row()).setZero();
    item_emb_ = params_.add("item_emb", ParamGroup::kItemTable, std::move(items));

    for (int l = 0; l < config_.n_layers; ++l) {
        const std::string pre = "layers." + std::to_string(l) + ".";
        LayerParams lp{};
        lp.ln1_gain = params_.add(pre + "ln1.gain", ParamGroup::kBase, Matrix::Ones(1, d));
        lp.ln1_bias = params_.add(pre + "ln1.bias", ParamGroup::kBase, Matrix::Zero(1, d));
        for (auto [name, proj] : {std::pair{"q", &lp.q}, {"k", &lp.k}, {"v", &lp.v}, {"o", &lp.o}}) {
            const std::string base = pre + "attn." + name;
            proj->weight = params_.add(base + ".weight", ParamGroup::kBase, random_matrix(d, d, s, rng));
            if (adapted(name)) {
                const int r = config_.adapter_rank;
                proj->lora_a = params_.add(base + ".lora_a", ParamGroup::kAdapter,
                                           random_matrix(r, d, 1.0 / std::sqrt(static_cast<double>(d)), rng));
                proj->lora_b = params_.add(base + ".lora_b", ParamGroup::kAdapter, Matrix::Zero(d, r));
            }
        }
        lp.ln2_gain = params_.add(pre + "ln2.gain", ParamGroup::kBase, Matrix::Ones(1, d));
        lp.ln2_bias = params_.add(pre + "ln2.bias", ParamGroup::kBase, Matrix::Zero(1, d));
        lp.up_w = params_.add(pre + "ffn.up.weight", ParamGroup::kBase, random_matrix(f, d, s, rng));
        lp.up_b = params_.add(pre + "ffn.up.bias", ParamGroup::kBase, Matrix::Zero(1, f));
        lp.down_w = params_.add(pre + "ffn.down.weight", ParamGroup::kBase, random_matrix(d, f, s, rng));
        lp.down_b = params_.add(pre + "ffn.down.bias", ParamGroup::kBase, Matrix::Zero(1, d));
        layers_.push_back(lp);
    }
    lnf_gain_ = params_.add("ln_f.gain", ParamGroup::kBase, Matrix::Ones(1, d));
    lnf_bias_ = params_.add("ln_f.bias", ParamGroup::kBase, Matrix::Zero(1, d));
    lm_head_ = params_.add("lm_head.weight", ParamGroup::kBase, random_matrix(config_.vocab_size, d, s, rng));
}

Matrix Backbone::project(const Projection& p, const Matrix& x, Matrix* lora_cache) const {
    Matrix out = x * params_[p.weight].value.transpose();
    if (p.adapted()) {
        Matrix xa = x * params_[p.lora_a].value.transpose();
        out.noalias() += config_.adapter_scale * (xa * params_[p.lora_b].value.transpose());
        if (lora_cache) *lora_cache = std::move(xa);
    }
    return out;
}

Matrix Backbone::project_backward(const Projection& p, const Matrix& x, const Matrix& lora_cache,
                                  const Matrix& dout) {
    params_[p.weight].grad.noalias() += dout.transpose() * x;
    Matrix dx = dout * params_[p.weight].value;
    if (p.adapted()) {
        const double s = config_.adapter_scale;
        params_[p.lora_b].grad.noalias() += s * (dout.transpose() * lora_cache);
        const Matrix dxa = s * (dout * params_[p.lora_b].value);
        params_[p.lora_a].grad.noalias() += dxa.transpose() * x;
        dx.noalias() += dxa * params_[p.lora_a].value;
    }
    return dx;
}

Matrix Backbone::forward(const Matrix& embeddings, ForwardCache* cache, bool last_only) const {
    const Eigen::Index T = embeddings.rows();
    if (T == 0) throw ValidationError("forward: empty input sequence");
    if (T > config_.context_length) {
        throw ValidationError("forward: sequence length " + std::to_string(T) + " exceeds context length " +
                              std::to_string(config_.context_length));
    }
    if (embeddings.cols() != config_.d_model) throw ValidationError("forward: embedding width mismatch");

    const int n_heads = config_.n_heads;
    const int dh = config_.d_model / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    if (cache) {
        cache->layers.assign(layers_.size(), LayerCache{});
        cache->last_only = last_only;
    }

    Matrix h = embeddings + params_[pos_emb_].value.topRows(T);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const LayerParams& lp = layers_[l];
        LayerCache local;
        LayerCache& c = cache ? cache->layers[l] : local;
        c.input = h;
        c.h1 = layer_norm(h, params_[lp.ln1_gain].value, params_[lp.ln1_bias].value, &c.ln1);
        c.q = project(lp.q, c.h1, &c.lora_q);
        c.k = project(lp.k, c.h1, &c.lora_k);
        c.v = project(lp.v, c.h1, &c.lora_v);
        c.attn = Matrix::Zero(T, config_.d_model);
        c.probs.assign(static_cast<std::size_t>(n_heads), Matrix());
        for (int hd = 0; hd < n_heads; ++hd) {
            const auto qh = c.q.middleCols(hd * dh, dh);
            const auto kh = c.k.middleCols(hd * dh, dh);
            const auto vh = c.v.middleCols(hd * dh, dh);
            Matrix scores = (qh * kh.transpose()) * scale;
            Matrix& probs = c.probs[static_cast<std::size_t>(hd)];
            probs = Matrix::Zero(T, T);
            for (Eigen::Index t = 0; t < T; ++t) {
                const auto row = scores.row(t).head(t + 1);
                const double mx = row.maxCoeff();
                auto e = (row.array() - mx).exp();
                probs.row(t).head(t + 1) = e / e.sum();
            }
            c.attn.middleCols(hd * dh, dh) = probs * vh;
        }
        c.x1 = h + project(lp.o, c.attn, &c.lora_o);
        c.h2 = layer_norm(c.x1, params_[lp.ln2_gain].value, params_[lp.ln2_bias].value, &c.ln2);
        c.ffn_pre = (c.h2 * params_[lp.up_w].value.transpose()).rowwise() + params_[lp.up_b].value.row(0);
        c.ffn_act = c.ffn_pre.unaryExpr([](double x) { return gelu(x); });
        h = c.x1;
        h.noalias() += c.ffn_act * params_[lp.down_w].value.transpose();
        h.rowwise() += params_[lp.down_b].value.row(0);
    }

    LayerNormCache lnf;
    Matrix hf = layer_norm(h, params_[lnf_gain_].value, params_[lnf_bias_].value, &lnf);
    Matrix logits = last_only ? Matrix(hf.bottomRows(1) * params_[lm_head_].value.transpose())
                              : Matrix(hf * params_[lm_head_].value.transpose());
    if (cache) {
        cache->ln_f = std::move(lnf);
        cache->final_hidden = std::move(hf);
    }
    return logits;
}

Matrix Backbone::backward(const ForwardCache& cache, const Matrix& dlogits) {
    const Eigen::Index T = cache.final_hidden.rows();
    const int n_heads = config_.n_heads;
    const int dh = config_.d_model / n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Matrix dhf = Matrix::Zero(T, config_.d_model);
    Param& head = params_[lm_head_];
    if (cache.last_only) {
        if (dlogits.rows() != 1) throw ValidationError("backward: expected one row of logit gradients");
        dhf.row(T - 1) = dlogits * head.value;
        head.grad.noalias() += dlogits.transpose() * cache.final_hidden.bottomRows(1);
    } else {
        if (dlogits.rows() != T) throw ValidationError("backward: logit gradient shape mismatch");
        dhf.noalias() = dlogits * head.value;
        head.grad.noalias() += dlogits.transpose() * cache.final_hidden;
    }

    Matrix dh_state = layer_norm_backward(dhf, cache.ln_f, params_[lnf_gain_].value, params_[lnf_gain_].grad,
                                          params_[lnf_bias_].grad);

    for (std::size_t li = layers_.size(); li-- > 0;) {
        const LayerParams& lp = layers_[li];
        const LayerCache& c = cache.layers[li];

        // Feed-forward block.
        params_[lp.down_b].grad.row(0) += dh_state.colwise().sum();
        params_[lp.down_w].grad.noalias() += dh_state.transpose() * c.ffn_act;
        Matrix dpre = dh_state * params_[lp.down_w].value;
        dpre.array() *= c.ffn_pre.unaryExpr([](double x) { return gelu_grad(x); }).array();
        params_[lp.up_b].grad.row(0) += dpre.colwise().sum();
        params_[lp.up_w].grad.noalias() += dpre.transpose() * c.h2;
        const Matrix dh2 = dpre * params_[lp.up_w].value;
        Matrix dx1 = dh_state + layer_norm_backward(dh2, c.ln2, params_[lp.ln2_gain].value,
                                                    params_[lp.ln2_gain].grad, params_[lp.ln2_bias].grad);

        // Attention block.
        const Matrix dattn = project_backward(lp.o, c.attn, c.lora_o, dx1);
        Matrix dq = Matrix::Zero(T, config_.d_model);
        Matrix dk = Matrix::Zero(T, config_.d_model);
        Matrix dv = Matrix::Zero(T, config_.d_model);
        for (int hd = 0; hd < n_heads; ++hd) {
            const Matrix& probs = c.probs[static_cast<std::size_t>(hd)];
            const auto qh = c.q.middleCols(hd * dh, dh);
            const auto kh = c.k.middleCols(hd * dh, dh);
            const auto vh = c.v.middleCols(hd * dh, dh);
            const auto dout = dattn.middleCols(hd * dh, dh);
            const Matrix dprobs = dout * vh.transpose();
            dv.middleCols(hd * dh, dh).noalias() += probs.transpose() * dout;
            const Vector row_dot = (dprobs.array() * probs.array()).rowwise().sum();
            Matrix dscores = probs.array() * (dprobs.colwise() - row_dot).array();
            dscores *= scale;
            dq.middleCols(hd * dh, dh).noalias() += dscores * kh;
            dk.middleCols(hd * dh, dh).noalias() += dscores.transpose() * qh;
        }
        Matrix dh1 = project_backward(lp.q, c.h1, c.lora_q, dq);
        dh1 += project_backward(lp.k, c.h1, c.lora_k, dk);
        dh1 += project_backward(lp.v, c.h1, c.lora_v, dv);
        dh_state = dx1 + layer_norm_backward(dh1, c.ln1, params_[lp.ln1_gain].value, params_[lp.ln1_gain].grad,
                                             params_[lp.ln1_bias].grad);
    }

    params_[pos_emb_].grad.topRows(T) += dh_state;
    return dh_state;
}

EmbeddedIds Backbone::embed(std::string_view user_id, std::string_view item_id,
                            const std::vector<TokenId>& token_ids) const {
    EmbeddedIds out;
    out.user = params_[user_emb_].value.row(users_.row(user_id));
    out.item = params_[item_emb_].value.row(items_.row(item_id));
    out.tokens.resize(static_cast<Eigen::Index>(token_ids.size()), config_.d_model);
    for (std::size_t i = 0; i < token_ids.size(); ++i) {
        out.tokens.row(static_cast<Eigen::Index>(i)) = params_[tok_emb_].value.row(token_slot(token_ids[i]).terms[0].row);
    }
    return out;
}

InputSlot Backbone::user_slot(std::string_view user_id) const { return {{{user_emb_, users_.row(user_id), 1.0}}}; }

InputSlot Backbone::item_slot(std::string_view item_id) const { return {{{item_emb_, items_.row(item_id), 1.0}}}; }

InputSlot Backbone::token_slot(TokenId id) const {
    if (id < 0 || id >= config_.vocab_size) throw ValidationError("token id " + std::to_string(id) + " out of vocabulary");
    return {{{tok_emb_, static_cast<Eigen::Index>(id), 1.0}}};
}

Matrix Backbone::materialize(const InputSequence& sequence) const {
    Matrix x = Matrix::Zero(static_cast<Eigen::Index>(sequence.size()), config_.d_model);
    for (std::size_t t = 0; t < sequence.size(); ++t) {
        for (const SlotTerm& term : sequence[t].terms) {
            x.row(static_cast<Eigen::Index>(t)) += term.weight * params_[term.param].value.row(term.row);
        }
    }
    return x;
}

void Backbone::scatter_gradient(const InputSequence& sequence, const Matrix& d_embeddings) {
    for (std::size_t t = 0; t < sequence.size(); ++t) {
        for (const SlotTerm& term : sequence[t].terms) {
            if (term.weight == 0.0) continue;
            params_[term.param].grad.row(term.row) += term.weight * d_embeddings.row(static_cast<Eigen::Index>(t));
        }
    }
}

std::vector<std::size_t> Backbone::trainable_parameters(TrainMode mode) const {
    std::vector<std::size_t> out;
    if (mode == TrainMode::kAdapter && config_.adapter_rank == 0) {
        throw ValidationError("adapter training mode requires adapter_rank > 0");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (mode == TrainMode::kFull || params_[i].group != ParamGroup::kBase) out.push_back(i);
    }
    return out;
}

}  // namespace cier::backbone
