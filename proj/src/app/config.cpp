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

#include "cier/app/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace cier::app {
namespace {

using nlohmann::json;

json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined: return nullptr;
        case YAML::NodeType::Sequence: {
            json arr = json::array();
            for (const auto& child : node) arr.push_back(yaml_to_json(child));
            return arr;
        }
        case YAML::NodeType::Map: {
            json obj = json::object();
            for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
            return obj;
        }
        case YAML::NodeType::Scalar: break;
    }
    const std::string s = node.Scalar();
    if (node.Tag() == "!") return s;  // quoted
    if (s == "true" || s == "True" || s == "yes") return true;
    if (s == "false" || s == "False" || s == "no") return false;
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    return s;
}

// Reads known keys from one mapping and rejects the rest.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_null() && !j_.is_object()) throw ValidationError("config section '" + name_ + "' must be a mapping");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (j_.is_null() || !j_.contains(key) || j_.at(key).is_null()) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ValidationError("config key " + path(key) + " has the wrong type");
        }
    }

    void read_path(const char* key, std::filesystem::path& out) {
        std::string s = out.string();
        read(key, s);
        out = s;
    }

    Section child(const char* key) {
        seen_.insert(key);
        static const json kNull;
        if (j_.is_null() || !j_.contains(key)) return Section(kNull, path(key));
        return Section(j_.at(key), path(key));
    }

    void finish() const {
        if (!j_.is_object()) return;
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.contains(k)) throw ValidationError("unknown config key " + path(k.c_str()));
        }
    }

private:
    std::string path(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

ExperimentConfig from_json(const json& root) {
    ExperimentConfig c = default_config();
    Section top(root, "");
    top.read("seed", c.seed);
    {
        Section s = top.child("paths");
        s.read_path("data", c.data);
        s.read_path("workdir", c.workdir);
        s.finish();
    }
    {
        Section s = top.child("synthetic");
        s.read("users", c.synthetic.users);
        s.read("items", c.synthetic.items);
        s.read("records", c.synthetic.records);
        s.read("user_spread", c.synthetic.user_spread);
        s.read("item_spread", c.synthetic.item_spread);
        s.read("noise", c.synthetic.noise);
        s.read("seed", c.synthetic.seed);
        s.finish();
    }
    {
        Section s = top.child("corpus");
        s.read("bpe_vocab", c.bpe_vocab);
        s.read("repeats", c.repeats);
        s.read("max_explanation_tokens", c.max_explanation_tokens);
        s.finish();
    }
    {
        Section s = top.child("backbone");
        auto& b = c.backbone;
        s.read("d_model", b.d_model);
        s.read("n_layers", b.n_layers);
        s.read("n_heads", b.n_heads);
        s.read("ffn_width", b.ffn_width);
        s.read("context_length", b.context_length);
        s.read("adapter_rank", b.adapter_rank);
        s.read("adapter_scale", b.adapter_scale);
        s.read("adapted_projections", b.adapted_projections);
        s.read("init_std", b.init_std);
        s.finish();
    }
    {
        Section s = top.child("trainer");
        auto& t = c.trainer;
        s.read("lambda", t.lambda);
        s.read("epochs", t.epochs);
        s.read("batch_size", t.batch_size);
        s.read("lr_adapter", t.lr_adapter);
        s.read("lr_other", t.lr_other);
        s.read("weight_decay", t.weight_decay);
        std::string mode = t.mode == backbone::TrainMode::kAdapter ? "adapter" : "full";
        s.read("mode", mode);
        if (mode == "full") {
            t.mode = backbone::TrainMode::kFull;
        } else if (mode == "adapter") {
            t.mode = backbone::TrainMode::kAdapter;
        } else {
            throw ValidationError("trainer.mode must be 'full' or 'adapter'");
        }
        s.read("curriculum", t.curriculum);
        s.read("pretrain_epochs", t.pretrain_epochs);
        Section sm = s.child("smoothing");
        std::string strategy = trainer::to_string(t.smoothing.strategy);
        sm.read("strategy", strategy);
        t.smoothing.strategy = trainer::smoothing_strategy_from_string(strategy);
        sm.read("gamma", t.smoothing.gamma);
        sm.read("alpha", t.smoothing.alpha);
        sm.read("k", t.smoothing.k);
        sm.read("sigma", t.smoothing.sigma);
        sm.finish();
        s.finish();
    }
    {
        Section s = top.child("prompts");
        s.read("rating", c.prompts.rating);
        s.read("explanation", c.prompts.explanation);
        s.finish();
    }
    {
        Section s = top.child("metrics");
        s.read("csv", c.metrics_csv);
        s.finish();
    }
    {
        Section s = top.child("judge");
        auto& j = c.judge;
        std::string kind = judge::to_string(j.kind);
        s.read("kind", kind);
        j.kind = judge::oracle_kind_from_string(kind);
        s.read("lexicon", j.lexicon_path);
        s.read("endpoint", j.endpoint);
        s.read("model", j.model);
        s.read("api_key_env", j.api_key_env);
        s.read("timeout", j.timeout_s);
        s.read("max_retries", j.max_retries);
        s.read("backoff", j.backoff_s);
        s.read("concurrency", j.concurrency);
        s.read("sample_size", j.sample_size);
        s.read("cache", j.cache_path);
        s.read("prompt", j.prompt_path);
        s.finish();
    }
    top.finish();
    apply_seed(c, c.seed);
    c.validate();
    return c;
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.backbone.d_model = 64;
    c.backbone.n_heads = 4;
    c.backbone.ffn_width = 256;
    c.trainer.epochs = 20;
    c.trainer.batch_size = 16;
    apply_seed(c, c.seed);
    return c;
}

void apply_seed(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.trainer.seed = seed;
    cfg.judge.seed = seed;
}

void ExperimentConfig::validate() const {
    if (data.empty()) synthetic.validate();
    if (workdir.empty()) throw ValidationError("paths.workdir must not be empty");
    if (repeats < 1) throw ValidationError("corpus.repeats must be at least 1");
    if (max_explanation_tokens < 1 || max_explanation_tokens > core::kMaxExplanationTokens) {
        throw ValidationError("corpus.max_explanation_tokens must be in [1, 20]");
    }
    auto b = backbone;
    b.vocab_size = 16;  // the real size is only known after tokenizer training
    b.validate();
    trainer.validate();
    judge.validate();
}

nlohmann::json ExperimentConfig::to_json() const {
    const auto& b = backbone;
    const auto& t = trainer;
    const auto& j = judge;
    return {
        {"seed", seed},
        {"paths", {{"data", data.string()}, {"workdir", workdir.string()}}},
        {"synthetic",
         {{"users", synthetic.users},
          {"items", synthetic.items},
          {"records", synthetic.records},
          {"user_spread", synthetic.user_spread},
          {"item_spread", synthetic.item_spread},
          {"noise", synthetic.noise},
          {"seed", synthetic.seed}}},
        {"corpus", {{"bpe_vocab", bpe_vocab}, {"repeats", repeats}, {"max_explanation_tokens", max_explanation_tokens}}},
        {"backbone",
         {{"d_model", b.d_model},
          {"n_layers", b.n_layers},
          {"n_heads", b.n_heads},
          {"ffn_width", b.ffn_width},
          {"context_length", b.context_length},
          {"adapter_rank", b.adapter_rank},
          {"adapter_scale", b.adapter_scale},
          {"adapted_projections", b.adapted_projections},
          {"init_std", b.init_std}}},
        {"trainer",
         {{"lambda", t.lambda},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr_adapter", t.lr_adapter},
          {"lr_other", t.lr_other},
          {"weight_decay", t.weight_decay},
          {"mode", t.mode == backbone::TrainMode::kAdapter ? "adapter" : "full"},
          {"curriculum", t.curriculum},
          {"pretrain_epochs", t.pretrain_epochs},
          {"smoothing",
           {{"strategy", trainer::to_string(t.smoothing.strategy)},
            {"gamma", t.smoothing.gamma},
            {"alpha", t.smoothing.alpha},
            {"k", t.smoothing.k},
            {"sigma", t.smoothing.sigma}}}}},
        {"prompts", {{"rating", prompts.rating}, {"explanation", prompts.explanation}}},
        {"metrics", {{"csv", metrics_csv}}},
        {"judge",
         {{"kind", judge::to_string(j.kind)},
          {"lexicon", j.lexicon_path},
          {"endpoint", j.endpoint},
          {"model", j.model},
          {"api_key_env", j.api_key_env},
          {"timeout", j.timeout_s},
          {"max_retries", j.max_retries},
          {"backoff", j.backoff_s},
          {"concurrency", j.concurrency},
          {"sample_size", j.sample_size},
          {"cache", j.cache_path},
          {"prompt", j.prompt_path}}},
    };
}

ExperimentConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return from_json(yaml_to_json(root));
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

}  // namespace cier::app
