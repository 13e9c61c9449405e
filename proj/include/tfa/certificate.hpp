#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "tfa/metrics.hpp"
#include "tfa/network.hpp"
#include "tfa/serialize.hpp"

namespace tfa {

struct ApproxCertificate {
    std::string builder;
    std::string target;
    TransformerNetwork network;
    ArchSpec built_dims;
    ArchSpec claimed_dims;  // dims stated for the idealized construction
    std::size_t K = 0;
    double delta = 0.0;  // trifling width, or the digit margin for Cantor builds
    double theoretical_bound = 0.0;
    std::string bound_kind;  // "sup" or "lp"
    ErrorEstimate measured_lp;
    ErrorEstimate measured_sup;
    std::string region;
    bool pass = false;
    nlohmann::json details = nlohmann::json::object();

    double measured() const { return bound_kind == "sup" ? measured_sup.value : measured_lp.value; }
};

inline nlohmann::json estimate_to_json(const ErrorEstimate& e) {
    return {{"p", e.p},           {"value", e.value},     {"std_error", e.std_error}, {"samples", e.samples},
            {"seed", e.seed},     {"region", e.region},   {"acceptance", e.acceptance}};
}

inline nlohmann::json certificate_to_json(const ApproxCertificate& c, bool with_network = false) {
    nlohmann::json j = {{"builder", c.builder},
                        {"target", c.target},
                        {"K", c.K},
                        {"delta", c.delta},
                        {"built_dims", spec_to_json(c.built_dims)},
                        {"claimed_dims", spec_to_json(c.claimed_dims)},
                        {"param_count_built", param_count(c.built_dims)},
                        {"theoretical_bound", c.theoretical_bound},
                        {"bound_kind", c.bound_kind},
                        {"measured_lp", estimate_to_json(c.measured_lp)},
                        {"measured_sup", estimate_to_json(c.measured_sup)},
                        {"region", c.region},
                        {"pass", c.pass},
                        {"details", c.details}};
    if (with_network) j["network"] = nlohmann::json::parse(network_to_json(c.network));
    return j;
}

}  // namespace tfa
