#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cednet/tensor.hpp"

// Central finite-difference verification of reverse-mode gradients. The
// finite-difference side only ever evaluates the forward pass, so it stays
// independent of the backward path it checks.

namespace cednet::gradcheck {

struct ParamRef {
    std::string name;
    Tensor<double> tensor;
};

struct Result {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::int64_t worst_index = -1;
    std::int64_t checked = 0;
    bool passed(double tolerance) const { return max_rel_err < tolerance; }
};

// loss_fn must be pure in the parameter values (re-evaluated after each
// perturbation). Elements with |analytic| < 1e-8 are compared absolutely.
Result check(const std::function<Tensor<double>()>& loss_fn, std::vector<ParamRef> params,
             double eps = 1e-5);

// Deterministic scalar probe over named outputs: sum of fixed pseudo-random
// weightings of every output element. Sensitive to each element, so a
// passing check covers the whole graph.
Tensor<double> weighted_probe(const std::map<std::string, Tensor<double>>& outputs,
                              std::uint64_t seed);

} // namespace cednet::gradcheck
