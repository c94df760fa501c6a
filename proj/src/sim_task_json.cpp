#include <set>

#include <json.hpp>

#include "georl/toy_policy.hpp"

namespace georl {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw DataError(where + ": unknown key '" + key + "'");
}

template <class T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

SimTask sim_task_from_json(const std::string& text) {
    SimTask task;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw DataError("sim task: top level must be an object");
        reject_unknown(j,
                       {"prompts", "reward", "grpo", "learning_rate", "iterations", "seed", "max_len", "prior_strength",
                        "max_grad_norm", "inner_steps", "batch_groups", "threads"},
                       "sim task");
        if (j.contains("prompts")) {
            task.prompts.clear();
            for (const auto& p : j.at("prompts")) {
                reject_unknown(p, {"id", "gold"}, "sim task prompt");
                task.prompts.push_back({p.at("id").get<std::string>(), decode_answer(p.at("gold").dump())});
            }
        } else {
            task.prompts = default_sim_task().prompts;
        }
        read_if(j, "learning_rate", task.learning_rate);
        read_if(j, "iterations", task.iterations);
        read_if(j, "seed", task.seed);
        read_if(j, "max_len", task.max_len);
        read_if(j, "prior_strength", task.prior_strength);
        read_if(j, "max_grad_norm", task.max_grad_norm);
        read_if(j, "inner_steps", task.inner_steps);
        read_if(j, "batch_groups", task.batch_groups);
        read_if(j, "threads", task.threads);
        if (j.contains("reward")) {
            const json& r = j.at("reward");
            reject_unknown(r, {"numeric_band", "format_weight", "require_think_tags", "zero_target_abs_tol"},
                           "sim task reward");
            read_if(r, "numeric_band", task.reward.numeric_band);
            read_if(r, "format_weight", task.reward.format_weight);
            read_if(r, "require_think_tags", task.reward.require_think_tags);
            read_if(r, "zero_target_abs_tol", task.reward.zero_target_abs_tol);
        }
        if (j.contains("grpo")) {
            const json& g = j.at("grpo");
            reject_unknown(g,
                           {"group_size", "clip_eps", "kl_coeff", "std_mode", "oversample_factor",
                            "max_resample_rounds"},
                           "sim task grpo");
            read_if(g, "group_size", task.grpo.group_size);
            read_if(g, "clip_eps", task.grpo.clip_eps);
            read_if(g, "kl_coeff", task.grpo.kl_coeff);
            read_if(g, "oversample_factor", task.grpo.oversample_factor);
            read_if(g, "max_resample_rounds", task.grpo.max_resample_rounds);
            if (g.contains("std_mode")) {
                const auto mode = g.at("std_mode").get<std::string>();
                if (mode == "population") task.grpo.std_mode = StdMode::Population;
                else if (mode == "sample") task.grpo.std_mode = StdMode::Sample;
                else throw DataError("sim task grpo: std_mode must be \"population\" or \"sample\"");
            }
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("sim task: ") + e.what());
    }
    try {
        task.validate();
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("sim task: ") + e.what());
    }
    return task;
}

}  // namespace georl
