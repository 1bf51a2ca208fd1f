#pragma once

#include "hgda/model.hpp"
#include "hgda/optim.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgda {

namespace checkpoint_detail {

inline nlohmann::json matrix_json(const Matrix& m) {
    std::vector<double> values(m.data(), m.data() + m.size());
    return {{"shape", {m.rows(), m.cols()}}, {"values", std::move(values)}};
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& name) {
    const auto shape = j.at("shape").get<std::vector<Index>>();
    const auto values = j.at("values").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0 ||
        static_cast<std::size_t>(shape[0] * shape[1]) != values.size())
        throw std::invalid_argument("checkpoint: malformed tensor '" + name + "'");
    Matrix m(shape[0], shape[1]);
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

}  // namespace checkpoint_detail

/// {"tensors": {name: {"shape": [r,c], "values": [...]}}, "adam": {...}, "epoch": n, "seed": s}
/// with row-major values. The model config is stored alongside so the
/// architecture can be rebuilt on load.
inline nlohmann::json checkpoint_json(const HgdaModel& model, const HgdaConfig& cfg, const ad::AdamState& adam, int epoch) {
    using checkpoint_detail::matrix_json;
    nlohmann::json tensors = nlohmann::json::object();
    nlohmann::json m = nlohmann::json::object();
    nlohmann::json v = nlohmann::json::object();
    const auto named = model.named_parameters();
    for (std::size_t k = 0; k < named.size(); ++k) {
        tensors[named[k].first] = matrix_json(named[k].second.value());
        if (k < adam.m.size()) {
            m[named[k].first] = matrix_json(adam.m[k]);
            v[named[k].first] = matrix_json(adam.v[k]);
        }
    }
    return {{"tensors", std::move(tensors)},
            {"adam",
             {{"t", adam.t},
              {"lr", adam.config.lr},
              {"beta1", adam.config.beta1},
              {"beta2", adam.config.beta2},
              {"eps", adam.config.eps},
              {"weight_decay", adam.config.weight_decay},
              {"m", std::move(m)},
              {"v", std::move(v)}}},
            {"epoch", epoch},
            {"seed", cfg.seed},
            {"config", to_json(cfg)},
            {"input_dim", model.input_dim()},
            {"num_classes", model.num_classes()}};
}

struct Checkpoint {
    HgdaModel model;
    HgdaConfig config;
    ad::AdamState adam;
    int epoch = 0;
};

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    using checkpoint_detail::matrix_from_json;
    Checkpoint c;
    c.config = config_from_json(j.at("config"));
    c.epoch = j.at("epoch").get<int>();
    c.model = HgdaModel::init(c.config, j.at("input_dim").get<Index>(), j.at("num_classes").get<int>(), SplitMix64(0));
    const auto& tensors = j.at("tensors");
    const auto& adam = j.at("adam");
    c.adam.t = adam.at("t").get<std::int64_t>();
    c.adam.config = {adam.at("lr").get<double>(), adam.at("beta1").get<double>(), adam.at("beta2").get<double>(),
                     adam.at("eps").get<double>(), adam.at("weight_decay").get<double>()};
    const bool has_moments = !adam.at("m").empty();
    for (auto& [name, tensor] : c.model.named_parameters()) {
        if (!tensors.contains(name)) throw std::invalid_argument("checkpoint: missing tensor '" + name + "'");
        Matrix value = matrix_from_json(tensors.at(name), name);
        if (value.rows() != tensor.rows() || value.cols() != tensor.cols())
            throw std::invalid_argument("checkpoint: tensor '" + name + "' has shape " + shape_str(value) +
                                        ", expected " + shape_str(tensor.value()));
        tensor.mutable_value() = std::move(value);
        if (has_moments) {
            c.adam.m.push_back(matrix_from_json(adam.at("m").at(name), name));
            c.adam.v.push_back(matrix_from_json(adam.at("v").at(name), name));
        }
    }
    return c;
}

}  // namespace hgda
