#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace supgcl {

/// Outcome of one identity check: `value` is compared against `tolerance`.
struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

nlohmann::json to_json(const CheckResult& r);

/// Loss identities and structural invariants checked on random instances:
///   joint_kl_identity      joint-distribution KL equals expected node loss + aug loss
///   uniform_limit          large tau_aug recovers the uniform node loss, gap shrinking
///   sampled_enumeration    averaging the one-pair estimator over all pairs equals the exact loss
///   knockdown_masking      idempotent, topology preserving, incident edges zeroed
///   bspline_partition      basis sums to one on the interior
///   cox_shift_invariance   partial likelihood ignores a common risk offset
std::vector<CheckResult> run_identity_checks(std::uint64_t seed);

} // namespace supgcl
