#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genlab/app/atomic_file.hpp"
#include "genlab/data/idx.hpp"
#include "genlab/error.hpp"
#include "genlab/eval/classifier.hpp"
#include "genlab/models/model_kind.hpp"
#include "genlab/models/trainers.hpp"
#include "genlab/nn/mlp.hpp"
#include "genlab/tensor.hpp"

namespace genlab {

inline constexpr std::string_view kCheckpointMagic = "GLB1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
    std::string name;  // "<network>/layer{i}.weight"
    Tensor<float> value;

    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// In-memory form of a checkpoint file.
struct Checkpoint {
    ModelKind kind = ModelKind::gan;
    std::vector<NamedTensor> tensors;
    std::map<std::string, std::string> config;  // echoed run configuration
    std::uint64_t iteration = 0;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class N>
N parse_number(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("checkpoint config is missing '" + key + "'");
    N v{};
    const auto& s = it->second;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatError("checkpoint config '" + key + "' has malformed value '" + s + "'");
    }
    return v;
}

class ByteWriter {
   public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::string_view s) { out_.append(s); }
    const std::string& str() const { return out_; }

   private:
    std::string out_;
};

class ByteReader {
   public:
    ByteReader(std::span<const char> data, std::string origin) : data_(data), origin_(std::move(origin)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<std::uint8_t>(data_[pos_ + i])} << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s(data_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    bool at_end() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

   private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) {
            throw FormatError(origin_ + ": truncated checkpoint (need " + std::to_string(n) + " bytes at offset " +
                              std::to_string(pos_) + ", file has " + std::to_string(data_.size()) + ")");
        }
    }

    std::span<const char> data_;
    std::string origin_;
    std::size_t pos_ = 0;
};

inline std::string encode_config_block(const std::map<std::string, std::string>& kv) {
    std::string s;
    for (const auto& [k, v] : kv) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw ContractError("checkpoint config entry '" + k + "' contains '=' or a newline");
        }
        s += k + "=" + v + "\n";
    }
    return s;
}

inline std::map<std::string, std::string> decode_config_block(std::string_view s, const std::string& origin) {
    std::map<std::string, std::string> kv;
    while (!s.empty()) {
        const auto nl = s.find('\n');
        const auto line = s.substr(0, nl);
        s = nl == std::string_view::npos ? std::string_view{} : s.substr(nl + 1);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw FormatError(origin + ": malformed config line '" + std::string(line) + "'");
        kv.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
    }
    return kv;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Byte layout

inline std::string encode_checkpoint(const Checkpoint& ckpt) {
    detail::ByteWriter w;
    w.bytes(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(ckpt.kind));
    w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.bytes(name);
        w.u32(static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
        for (float v : t.data()) w.f32(v);
    }
    auto config = ckpt.config;
    config["iteration"] = std::to_string(ckpt.iteration);
    const std::string block = detail::encode_config_block(config);
    w.u32(static_cast<std::uint32_t>(block.size()));
    w.bytes(block);
    return w.str();
}

inline Checkpoint decode_checkpoint(std::span<const char> bytes, const std::string& origin = "<memory>") {
    detail::ByteReader r(bytes, origin);
    const std::string magic = r.bytes(4);
    if (magic != kCheckpointMagic) {
        throw FormatError(origin + ": not a checkpoint (bad magic '" +
                          detail::hex_bytes({reinterpret_cast<const std::uint8_t*>(magic.data()), 4}) + "')");
    }
    const auto version = r.u32();
    if (version != kCheckpointVersion) {
        throw VersionError(origin + ": checkpoint version " + std::to_string(version) + ", this build reads version " +
                           std::to_string(kCheckpointVersion));
    }
    Checkpoint ckpt;
    const auto kind = r.u8();
    if (kind > static_cast<std::uint8_t>(ModelKind::classifier)) {
        throw FormatError(origin + ": unknown model kind tag " + std::to_string(kind));
    }
    ckpt.kind = static_cast<ModelKind>(kind);
    const auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor nt;
        nt.name = r.bytes(r.u32());
        Shape shape(r.u32());
        for (auto& d : shape) d = r.u32();
        if (element_count(shape) > r.remaining() / 4) {
            throw FormatError(origin + ": tensor '" + nt.name + "' of shape " + shape_string(shape) +
                              " exceeds the remaining file size");
        }
        std::vector<float> values(element_count(shape));
        for (auto& v : values) v = r.f32();
        nt.value = Tensor<float>(std::move(shape), std::move(values));
        ckpt.tensors.push_back(std::move(nt));
    }
    ckpt.config = detail::decode_config_block(r.bytes(r.u32()), origin);
    if (!r.at_end()) throw FormatError(origin + ": trailing bytes after checkpoint config block");
    ckpt.iteration = detail::parse_number<std::uint64_t>(ckpt.config, "iteration");
    ckpt.config.erase("iteration");
    return ckpt;
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const std::string bytes = encode_checkpoint(ckpt);
    write_file_atomic(path, bytes);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    const std::vector<char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_checkpoint(bytes, path.string());
}

// ---------------------------------------------------------------------------
// Model <-> checkpoint

inline std::map<std::string, std::string> config_entries(const ModelConfig& cfg) {
    using detail::format_double;
    std::string hidden;
    for (auto h : cfg.hidden) hidden += (hidden.empty() ? "" : ",") + std::to_string(h);
    return {
        {"model", std::string(to_string(cfg.kind))},
        {"gan_variant", cfg.gan_variant == GanVariant::minimax ? "minimax" : "nonsaturating"},
        {"data_width", std::to_string(cfg.data_width)},
        {"latent_dim", std::to_string(cfg.latent_dim)},
        {"hidden", hidden},
        {"adam_lr", format_double(cfg.adam.lr)},
        {"adam_beta1", format_double(cfg.adam.beta1)},
        {"adam_beta2", format_double(cfg.adam.beta2)},
        {"rmsprop_lr", format_double(cfg.rmsprop.lr)},
        {"rmsprop_rho", format_double(cfg.rmsprop.rho)},
        {"clip", format_double(cfg.clip)},
        {"n_critic", std::to_string(cfg.n_critic)},
        {"lambda", format_double(cfg.lambda)},
        {"margin", format_double(cfg.margin)},
        {"seed", std::to_string(cfg.seed)},
    };
}

inline ModelConfig model_config_from(const Checkpoint& ckpt) {
    using detail::parse_number;
    const auto& kv = ckpt.config;
    ModelConfig cfg;
    cfg.kind = ckpt.kind;
    if (auto it = kv.find("gan_variant"); it != kv.end()) {
        cfg.gan_variant = it->second == "minimax" ? GanVariant::minimax : GanVariant::nonsaturating;
    }
    cfg.data_width = parse_number<std::size_t>(kv, "data_width");
    cfg.latent_dim = parse_number<std::size_t>(kv, "latent_dim");
    cfg.hidden.clear();
    if (auto it = kv.find("hidden"); it != kv.end()) {
        std::string_view s = it->second;
        while (!s.empty()) {
            const auto comma = s.find(',');
            const auto item = s.substr(0, comma);
            std::size_t v = 0;
            const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
            if (res.ec != std::errc{} || v == 0) throw FormatError("checkpoint config 'hidden' is malformed");
            cfg.hidden.push_back(v);
            s = comma == std::string_view::npos ? std::string_view{} : s.substr(comma + 1);
        }
    }
    cfg.adam.lr = parse_number<double>(kv, "adam_lr");
    cfg.adam.beta1 = parse_number<double>(kv, "adam_beta1");
    cfg.adam.beta2 = parse_number<double>(kv, "adam_beta2");
    cfg.rmsprop.lr = parse_number<double>(kv, "rmsprop_lr");
    cfg.rmsprop.rho = parse_number<double>(kv, "rmsprop_rho");
    cfg.clip = parse_number<double>(kv, "clip");
    cfg.n_critic = parse_number<std::size_t>(kv, "n_critic");
    cfg.lambda = parse_number<double>(kv, "lambda");
    cfg.margin = parse_number<double>(kv, "margin");
    cfg.seed = parse_number<std::uint64_t>(kv, "seed");
    return cfg;
}

inline void append_network(Checkpoint& ckpt, const std::string& prefix, const Mlp<float>& net) {
    const auto names = net.parameter_names();
    const auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) ckpt.tensors.push_back({prefix + "/" + names[i], *params[i]});
}

/// Copies tensors named "<prefix>/..." into `net`, which must already
/// have the matching architecture.
inline void restore_network(const Checkpoint& ckpt, const std::string& prefix, Mlp<float>& net) {
    const auto names = net.parameter_names();
    auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string full = prefix + "/" + names[i];
        const NamedTensor* found = nullptr;
        for (const auto& nt : ckpt.tensors) {
            if (nt.name == full) found = &nt;
        }
        if (found == nullptr) throw FormatError("checkpoint has no tensor '" + full + "'");
        if (found->value.shape() != params[i]->shape()) {
            throw FormatError("checkpoint tensor '" + full + "' has shape " + shape_string(found->value.shape()) +
                              ", network expects " + shape_string(params[i]->shape()));
        }
        *params[i] = found->value;
    }
}

inline Checkpoint make_checkpoint(const GenerativeModel& model,
                                  const std::map<std::string, std::string>& extra_config = {}) {
    Checkpoint ckpt;
    ckpt.kind = model.kind();
    ckpt.iteration = model.iteration();
    for (const auto& [name, net] : model.named_networks()) append_network(ckpt, name, *net);
    ckpt.config = extra_config;
    for (auto& [k, v] : config_entries(model.config())) ckpt.config[k] = v;
    return ckpt;
}

/// Rebuilds a model (fresh optimizer state) from a generative-model checkpoint.
inline std::unique_ptr<GenerativeModel> restore_model(const Checkpoint& ckpt) {
    if (ckpt.kind == ModelKind::classifier) throw ConfigError("checkpoint holds a classifier, not a generative model");
    auto model = make_model(model_config_from(ckpt));
    for (auto& [name, net] : model->networks()) restore_network(ckpt, name, *net);
    model->set_iteration(ckpt.iteration);
    return model;
}

inline Checkpoint make_classifier_checkpoint(const Mlp<float>& net, const ClassifierConfig& cfg, double test_accuracy) {
    Checkpoint ckpt;
    ckpt.kind = ModelKind::classifier;
    append_network(ckpt, "classifier", net);
    ckpt.config = {{"input_width", std::to_string(net.input_width())},
                   {"hidden", std::to_string(cfg.hidden)},
                   {"seed", std::to_string(cfg.seed)},
                   {"test_accuracy", detail::format_double(test_accuracy)}};
    return ckpt;
}

inline Mlp<float> restore_classifier(const Checkpoint& ckpt) {
    if (ckpt.kind != ModelKind::classifier) {
        throw ConfigError("checkpoint holds a " + std::string(to_string(ckpt.kind)) + " model, not a classifier");
    }
    ClassifierConfig cfg;
    cfg.hidden = detail::parse_number<std::size_t>(ckpt.config, "hidden");
    Mlp<float> net = make_classifier(detail::parse_number<std::size_t>(ckpt.config, "input_width"), cfg);
    restore_network(ckpt, "classifier", net);
    return net;
}

}  // namespace genlab
