#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "supgcl/tape.hpp"
#include "supgcl/tensor.hpp"

namespace supgcl::ad {

/// Ordered, named collection of trainable tensors.
class ParameterSet {
public:
    /// Appends a tensor and returns its index. Names must be unique.
    std::size_t add(std::string name, Tensor value);

    std::size_t size() const { return values_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    const Tensor& operator[](std::size_t i) const { return values_[i]; }
    Tensor& operator[](std::size_t i) { return values_[i]; }
    /// Index of a named tensor; throws ContractError if absent.
    std::size_t index(const std::string& name) const;
    std::size_t scalar_count() const;

    /// Appends every tensor of `other`, prefixing names.
    void append(const ParameterSet& other, const std::string& prefix);
    /// Copies values for all names shared with `other`, shapes must agree.
    void assign_matching(const ParameterSet& other);

    bool operator==(const ParameterSet& other) const = default;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
};

/// Parameters placed on a tape for one forward/backward pass.
struct BoundParameters {
    std::vector<Var> vars;
    const Var& operator[](std::size_t i) const { return vars[i]; }
};

/// Records every parameter as a leaf; constants when `track_grad` is false.
BoundParameters bind(Tape& tape, const ParameterSet& params, bool track_grad = true);

/// Gradients of the bound leaves after tape.backward().
std::vector<Tensor> gradients(Tape& tape, const BoundParameters& bound);

/// Checkpoint JSON: {"format": "supgcl-checkpoint", "version": 1,
/// "parameters": [{"name", "shape": [r, c], "data": [...]}, ...], "meta": {...}}.
/// Doubles are written in shortest round-trip form, so save/load is exact.
nlohmann::json to_json(const ParameterSet& params);
ParameterSet parameters_from_json(const nlohmann::json& j);

void save_checkpoint(const ParameterSet& params, const nlohmann::json& meta,
                     const std::filesystem::path& path);
/// Loads parameters and fills `meta` (if given) with the stored metadata.
ParameterSet load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

} // namespace supgcl::ad
