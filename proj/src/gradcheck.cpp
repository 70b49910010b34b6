#include "cednet/gradcheck.hpp"

#include <cmath>

namespace cednet::gradcheck {

Result check(const std::function<Tensor<double>()>& loss_fn, std::vector<ParamRef> params,
             double eps) {
    // analytic gradients
    for (auto& p : params) {
        p.tensor.set_requires_grad(true);
        p.tensor.zero_grad();
    }
    std::vector<std::vector<double>> analytic;
    {
        Tape<double> tape;
        Tensor<double> loss = loss_fn();
        tape.backward(loss);
    }
    for (auto& p : params) {
        analytic.push_back(p.tensor.has_grad()
                               ? p.tensor.grad()
                               : std::vector<double>(static_cast<std::size_t>(p.tensor.numel()),
                                                     0.0));
        p.tensor.set_requires_grad(false);
    }

    Result res;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<double>& t = params[pi].tensor;
        double* data = t.data();
        for (std::int64_t i = 0; i < t.numel(); ++i) {
            const double keep = data[i];
            data[i] = keep + eps;
            const double up = loss_fn().item();
            data[i] = keep - eps;
            const double down = loss_fn().item();
            data[i] = keep;
            const double fd = (up - down) / (2.0 * eps);
            const double an = analytic[pi][static_cast<std::size_t>(i)];
            const double diff = std::abs(fd - an);
            const double err = std::abs(an) < 1e-8 ? diff : diff / std::abs(an);
            if (err > res.max_rel_err) {
                res.max_rel_err = err;
                res.worst_param = params[pi].name;
                res.worst_index = i;
            }
            ++res.checked;
        }
    }
    return res;
}

Tensor<double> weighted_probe(const std::map<std::string, Tensor<double>>& outputs,
                              std::uint64_t seed) {
    Tensor<double> total;
    bool first = true;
    std::uint64_t stream = 0;
    for (const auto& [name, out] : outputs) {
        Rng rng(mix_seed(seed, stream++));
        Tensor<double> w = Tensor<double>::zeros(out.shape());
        double* p = w.data();
        for (std::int64_t i = 0; i < w.numel(); ++i) p[i] = rng.uniform(-1.0, 1.0);
        Tensor<double> term = sum(mul(w, out));
        total = first ? term : add(total, term);
        first = false;
    }
    if (first) throw ConfigError("weighted_probe: no outputs");
    return total;
}

} // namespace cednet::gradcheck
