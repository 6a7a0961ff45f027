#include "supgcl/parameters.hpp"

#include <fstream>

#include "supgcl/error.hpp"

namespace supgcl::ad {

std::size_t ParameterSet::add(std::string name, Tensor value) {
    for (const auto& n : names_) {
        if (n == name) throw ContractError("duplicate parameter name '" + name + "'");
    }
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return values_.size() - 1;
}

std::size_t ParameterSet::index(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return i;
    }
    throw ContractError("no parameter named '" + name + "'");
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

void ParameterSet::append(const ParameterSet& other, const std::string& prefix) {
    for (std::size_t i = 0; i < other.size(); ++i) add(prefix + other.name(i), other[i]);
}

void ParameterSet::assign_matching(const ParameterSet& other) {
    for (std::size_t i = 0; i < other.size(); ++i) {
        for (std::size_t j = 0; j < names_.size(); ++j) {
            if (names_[j] != other.name(i)) continue;
            if (!values_[j].same_shape(other[i])) {
                throw ContractError("parameter '" + names_[j] + "' shape differs");
            }
            values_[j] = other[i];
        }
    }
}

BoundParameters bind(Tape& tape, const ParameterSet& params, bool track_grad) {
    BoundParameters b;
    b.vars.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        b.vars.push_back(track_grad ? tape.variable(params[i]) : tape.constant(params[i]));
    }
    return b;
}

std::vector<Tensor> gradients(Tape& tape, const BoundParameters& bound) {
    std::vector<Tensor> out;
    out.reserve(bound.vars.size());
    for (const Var& v : bound.vars) out.push_back(tape.grad(v));
    return out;
}

nlohmann::json to_json(const ParameterSet& params) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor& t = params[i];
        arr.push_back({{"name", params.name(i)},
                       {"shape", {t.rows(), t.cols()}},
                       {"data", std::vector<double>(t.data().begin(), t.data().end())}});
    }
    return arr;
}

ParameterSet parameters_from_json(const nlohmann::json& j) {
    ParameterSet p;
    try {
        for (const auto& item : j) {
            const auto shape = item.at("shape").get<std::vector<std::size_t>>();
            if (shape.size() != 2) throw ParseError("parameter shape must have two entries");
            auto data = item.at("data").get<std::vector<double>>();
            if (data.size() != shape[0] * shape[1]) {
                throw ParseError("parameter '" + item.at("name").get<std::string>() +
                                 "': data length does not match shape");
            }
            p.add(item.at("name").get<std::string>(), Tensor(shape[0], shape[1], std::move(data)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed parameter list: ") + e.what());
    }
    return p;
}

void save_checkpoint(const ParameterSet& params, const nlohmann::json& meta,
                     const std::filesystem::path& path) {
    nlohmann::json j = {{"format", "supgcl-checkpoint"},
                        {"version", 1},
                        {"meta", meta},
                        {"parameters", to_json(params)}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out << j.dump() << '\n';
}

ParameterSet load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("checkpoint not found: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "supgcl-checkpoint") {
        throw ParseError(path.string() + ": not a supgcl checkpoint");
    }
    if (meta) *meta = j.value("meta", nlohmann::json::object());
    return parameters_from_json(j.at("parameters"));
}

} // namespace supgcl::ad
