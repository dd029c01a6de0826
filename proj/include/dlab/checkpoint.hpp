#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "dlab/adam.hpp"
#include "dlab/model.hpp"

namespace dlab {

// Checkpoint layout: 8-byte magic "DISENCK1", u32 length + JSON config echo,
// u32 tensor count, then per tensor: u32 name length, name bytes, u32 rank,
// u32 dims, float32 payload. All integers and floats little-endian.
// Optimizer moments ride along as tensors named "adam.m.<param>" and
// "adam.v.<param>"; the Adam step and hyperparameters live in the JSON block.

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace ckpt_detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    if (!is.read(reinterpret_cast<char*>(&v), 4))
        throw CheckpointError("checkpoint truncated");
    return v;
}

inline void write_tensor(std::ostream& os, const std::string& name, const Tensor<float>& t) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) write_u32(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.numel() * sizeof(float)));
}

inline std::pair<std::string, Tensor<float>> read_tensor(std::istream& is) {
    const std::uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw CheckpointError("checkpoint truncated");
    const std::uint32_t rank = read_u32(is);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = read_u32(is);
    Tensor<float> t(shape);
    if (!is.read(reinterpret_cast<char*>(t.data()),
                 static_cast<std::streamsize>(t.numel() * sizeof(float))))
        throw CheckpointError("checkpoint tensor block truncated: " + name);
    return {std::move(name), std::move(t)};
}

inline nlohmann::json config_json(const ModelConfig& c) {
    return {{"image_size", c.image_size}, {"channels", c.channels},
            {"latent_dim", c.latent_dim}, {"sa_classes", c.sa_classes},
            {"baseline", c.baseline},     {"init_seed", c.init_seed},
            {"widths", {c.widths[0], c.widths[1], c.widths[2]}}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.image_size = j.at("image_size");
    c.channels = j.at("channels");
    c.latent_dim = j.at("latent_dim");
    c.sa_classes = j.at("sa_classes");
    c.baseline = j.at("baseline");
    c.init_seed = j.at("init_seed");
    for (int i = 0; i < 3; ++i) c.widths[i] = j.at("widths").at(i);
    return c;
}

}  // namespace ckpt_detail

inline void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                            const AdamState<float>* adam = nullptr) {
    using namespace ckpt_detail;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("cannot open checkpoint for writing: " + path);
    os.write("DISENCK1", 8);
    nlohmann::json meta = {{"model", config_json(params.config)}};
    if (adam) {
        meta["adam"] = {{"step", adam->step},
                        {"lr", adam->hyper.lr},
                        {"beta1", adam->hyper.beta1},
                        {"beta2", adam->hyper.beta2},
                        {"eps", adam->hyper.eps},
                        {"weight_decay", adam->hyper.weight_decay}};
    }
    const std::string text = meta.dump();
    write_u32(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));

    std::uint32_t count = static_cast<std::uint32_t>(params.tensors.size());
    if (adam) count += 2 * static_cast<std::uint32_t>(params.tensors.size());
    write_u32(os, count);
    for (const auto& nt : params.tensors) write_tensor(os, nt.name, nt.tensor);
    if (adam) {
        for (std::size_t i = 0; i < params.tensors.size(); ++i)
            write_tensor(os, "adam.m." + params.tensors[i].name, adam->m[i]);
        for (std::size_t i = 0; i < params.tensors.size(); ++i)
            write_tensor(os, "adam.v." + params.tensors[i].name, adam->v[i]);
    }
    if (!os) throw CheckpointError("checkpoint write failed: " + path);
}

struct Checkpoint {
    ModelParams<float> params;
    std::optional<AdamState<float>> adam;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    using namespace ckpt_detail;
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open checkpoint: " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, "DISENCK1", 8) != 0)
        throw CheckpointError("bad checkpoint magic");
    const std::uint32_t text_len = read_u32(is);
    std::string text(text_len, '\0');
    if (!is.read(text.data(), text_len)) throw CheckpointError("checkpoint truncated");
    nlohmann::json meta = nlohmann::json::parse(text);

    Checkpoint out;
    out.params.config = config_from_json(meta.at("model"));
    const std::uint32_t count = read_u32(is);
    std::vector<std::pair<std::string, Tensor<float>>> adam_m, adam_v;
    for (std::uint32_t i = 0; i < count; ++i) {
        auto [name, t] = read_tensor(is);
        if (name.rfind("adam.m.", 0) == 0)
            adam_m.emplace_back(name.substr(7), std::move(t));
        else if (name.rfind("adam.v.", 0) == 0)
            adam_v.emplace_back(name.substr(7), std::move(t));
        else
            out.params.tensors.push_back({std::move(name), std::move(t)});
    }
    if (meta.contains("adam")) {
        AdamState<float> st;
        st.step = meta["adam"].at("step");
        st.hyper.lr = meta["adam"].at("lr");
        st.hyper.beta1 = meta["adam"].at("beta1");
        st.hyper.beta2 = meta["adam"].at("beta2");
        st.hyper.eps = meta["adam"].at("eps");
        st.hyper.weight_decay = meta["adam"].at("weight_decay");
        if (adam_m.size() != out.params.tensors.size() ||
            adam_v.size() != out.params.tensors.size())
            throw CheckpointError("optimizer state misaligned with parameters");
        for (std::size_t i = 0; i < out.params.tensors.size(); ++i) {
            if (adam_m[i].first != out.params.tensors[i].name ||
                adam_v[i].first != out.params.tensors[i].name)
                throw CheckpointError("optimizer state name mismatch");
            st.m.push_back(std::move(adam_m[i].second));
            st.v.push_back(std::move(adam_v[i].second));
        }
        out.adam = std::move(st);
    }
    return out;
}

}  // namespace dlab
