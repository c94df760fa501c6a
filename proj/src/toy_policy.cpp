#include "georl/toy_policy.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "georl/parallel.hpp"

namespace georl {

namespace {

constexpr std::array<std::string_view, tok::kVocab> kTokenText = {
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "A", "B", "C", "D",
    "<think>", "</think>", "\\boxed{", "}", " step", " so", ""};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double mean_of(const Eigen::VectorXd& v) { return v.size() ? pairwise_sum(v) / static_cast<double>(v.size()) : 0.0; }

}  // namespace

std::string_view token_text(int token) {
    if (token < 0 || token >= tok::kVocab) throw std::out_of_range("token id " + std::to_string(token));
    return kTokenText[static_cast<std::size_t>(token)];
}

std::string render_tokens(const std::vector<int>& tokens) {
    std::string out;
    for (int t : tokens) out += token_text(t);
    return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b) ^ c);
}

ToyPolicy::ToyPolicy(int prompts, int max_len)
    : prompts_(prompts), max_len_(max_len), logits_(Eigen::MatrixXd::Zero(Eigen::Index(prompts) * max_len, tok::kVocab)) {
    if (prompts < 1 || max_len < 1) throw std::invalid_argument("ToyPolicy needs at least one prompt and position");
}

ToyPolicy ToyPolicy::template_prior(int prompts, int max_len, double strength) {
    ToyPolicy p(prompts, max_len);
    const std::array<int, 7> layout = {tok::kThinkOpen, tok::kFillerStep, tok::kThinkClose, tok::kBoxOpen,
                                       -1,              tok::kBoxClose,   tok::kEos};
    for (int q = 0; q < prompts; ++q) {
        for (int pos = 0; pos < max_len; ++pos) {
            auto row = p.logits_.row(p.row_index(q, pos));
            const int want = pos < static_cast<int>(layout.size()) ? layout[static_cast<std::size_t>(pos)] : tok::kEos;
            if (want >= 0)
                row[want] = strength;
            else
                row.head(tok::kThinkOpen).setConstant(strength);  // digits and letters
        }
    }
    return p;
}

Eigen::VectorXd ToyPolicy::log_softmax(int prompt, int position) const {
    const Eigen::VectorXd row = logits_.row(row_index(prompt, position)).transpose();
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    return row.array() - lse;
}

Eigen::VectorXd ToyPolicy::probabilities(int prompt, int position) const {
    return log_softmax(prompt, position).array().exp();
}

Eigen::VectorXd ToyPolicy::sequence_logprobs(int prompt, const std::vector<int>& tokens) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(tokens.size()));
    for (std::size_t t = 0; t < tokens.size(); ++t)
        out[static_cast<Eigen::Index>(t)] = log_softmax(prompt, static_cast<int>(t))[tokens[t]];
    return out;
}

std::vector<int> ToyPolicy::sample(int prompt, std::mt19937_64& rng) const {
    std::vector<int> out;
    for (int pos = 0; pos < max_len_; ++pos) {
        const Eigen::VectorXd p = probabilities(prompt, pos);
        const double u = unit_uniform(rng);
        double acc = 0.0;
        int chosen = -1;
        for (int k = 0; k < tok::kVocab; ++k) {
            if (p[k] <= 0.0) continue;
            chosen = k;
            acc += p[k];
            if (u < acc) break;
        }
        out.push_back(chosen);
        if (chosen == tok::kEos) break;
    }
    return out;
}

void SimTask::validate() const {
    if (prompts.empty()) throw std::invalid_argument("sim task needs at least one prompt");
    for (const auto& p : prompts) {
        const Answer& a = p.gold;
        if (a.kind() == AnswerKind::MultipleChoice && (a.choice() < 'A' || a.choice() > 'D'))
            throw std::invalid_argument("prompt " + p.id + ": choice outside A-D");
        if (a.kind() == AnswerKind::Numeric && !(std::isfinite(a.value()) && a.value() >= 0.0))
            throw std::invalid_argument("prompt " + p.id + ": numeric gold must be a non-negative finite value");
    }
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
    if (inner_steps < 1) throw std::invalid_argument("inner_steps must be >= 1");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
    if (!(max_grad_norm > 0.0)) throw std::invalid_argument("max_grad_norm must be > 0");
    reward.validate();
    grpo.validate();
}

SimTask default_sim_task() {
    SimTask task;
    task.prompts = {{"choice-b", Answer::choice('B')},
                    {"choice-d", Answer::choice('D')},
                    {"numeric-7", Answer::numeric(7.0)},
                    {"expr-c", Answer::expression("\\frac{2C}{2}")}};
    return task;
}

RolloutGroup sample_group(const ToyPolicy& policy, const ToyPolicy& reference, int prompt, const std::string& prompt_id,
                          const Answer& gold, int group_size, std::uint64_t seed, const RewardConfig& reward) {
    if (group_size < 2) throw GroupTooSmall("group_size must be >= 2");
    std::mt19937_64 rng(seed);
    RolloutGroup g;
    g.prompt_id = prompt_id;
    g.rewards.resize(group_size);
    for (int i = 0; i < group_size; ++i) {
        ModelResponse r;
        r.tokens = policy.sample(prompt, rng);
        r.raw_text = render_tokens(r.tokens);
        r.logprobs_old = policy.sequence_logprobs(prompt, r.tokens);
        r.logprobs_new = r.logprobs_old;
        r.logprobs_ref = reference.sequence_logprobs(prompt, r.tokens);
        g.rewards[i] = score_response(r.raw_text, gold, reward).total;
        g.responses.push_back(std::move(r));
    }
    return g;
}

void refresh_logprobs_new(const ToyPolicy& policy, std::vector<RolloutGroup>& groups, const std::vector<int>& prompt_of) {
    for (std::size_t gi = 0; gi < groups.size(); ++gi)
        for (auto& r : groups[gi].responses) r.logprobs_new = policy.sequence_logprobs(prompt_of[gi], r.tokens);
}

Eigen::MatrixXd objective_gradient(const ToyPolicy& policy, const std::vector<RolloutGroup>& groups,
                                   const std::vector<int>& prompt_of, const GrpoConfig& cfg) {
    const auto dlogp = grpo_logprob_gradient(groups, cfg);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(policy.logits().rows(), policy.logits().cols());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const int prompt = prompt_of[gi];
        for (std::size_t i = 0; i < groups[gi].responses.size(); ++i) {
            const auto& tokens = groups[gi].responses[i].tokens;
            for (std::size_t t = 0; t < tokens.size(); ++t) {
                const double g = dlogp[gi][i][static_cast<Eigen::Index>(t)];
                if (g == 0.0) continue;
                // d log softmax_a / d logit_k = [k = a] - softmax_k
                const int pos = static_cast<int>(t);
                auto row = grad.row(policy.row_index(prompt, pos));
                row -= g * policy.probabilities(prompt, pos).transpose();
                row[tokens[t]] += g;
            }
        }
    }
    return grad;
}

StepResult policy_gradient_step(ToyPolicy& policy, const std::vector<RolloutGroup>& groups,
                                const std::vector<int>& prompt_of, const GrpoConfig& cfg, double lr,
                                double max_grad_norm) {
    StepResult result;
    result.loss = grpo_objective(groups, cfg);
    Eigen::MatrixXd grad = objective_gradient(policy, groups, prompt_of, cfg);
    result.grad_norm = grad.norm();
    if (result.grad_norm > max_grad_norm) grad *= max_grad_norm / result.grad_norm;
    policy.logits() += lr * grad;
    return result;
}

TrainingResult run_training(const SimTask& task) {
    task.validate();
    const int num_prompts = static_cast<int>(task.prompts.size());
    TrainingResult result{{}, ToyPolicy::template_prior(num_prompts, task.max_len, task.prior_strength), 0};
    ToyPolicy& policy = result.policy;
    const ToyPolicy reference = policy;
    const std::size_t target = task.batch_groups > 0 ? static_cast<std::size_t>(task.batch_groups)
                                                     : static_cast<std::size_t>(num_prompts);
    const auto per_round =
        static_cast<std::size_t>(std::ceil(static_cast<double>(target) * task.grpo.oversample_factor));

    for (int it = 0; it < task.iterations; ++it) {
        // Draw j goes to prompt j mod P with its own seed, so a round can be sampled in parallel.
        std::vector<RolloutGroup> buffer;
        std::size_t next = 0, issued = 0;
        std::vector<double> drawn_means;
        std::vector<int> prompt_of;
        GroupStream stream = [&]() -> std::optional<RolloutGroup> {
            if (next == buffer.size()) {
                buffer.assign(per_round, RolloutGroup{});
                const std::size_t base = issued;
                parallel_for(per_round, task.threads, [&](std::size_t k) {
                    const std::size_t j = base + k;
                    const int prompt = static_cast<int>(j % static_cast<std::size_t>(num_prompts));
                    const SimPrompt& sp = task.prompts[static_cast<std::size_t>(prompt)];
                    buffer[k] = sample_group(policy, reference, prompt, sp.id, sp.gold, task.grpo.group_size,
                                             derive_seed(task.seed, static_cast<std::uint64_t>(it), j), task.reward);
                });
                issued += per_round;
                next = 0;
            }
            const std::size_t j = issued - per_round + next;
            RolloutGroup g = std::move(buffer[next++]);
            drawn_means.push_back(mean_of(g.rewards));
            if (compute_advantages(g.rewards, task.grpo.std_mode))
                prompt_of.push_back(static_cast<int>(j % static_cast<std::size_t>(num_prompts)));
            return g;
        };
        FilterResult filtered = dynamic_sample_filter(stream, target, task.grpo);

        CurvePoint point;
        point.iteration = it;
        point.underfilled = filtered.underfilled;
        result.underfilled_iterations += filtered.underfilled;
        if (!filtered.groups.empty()) {
            Eigen::VectorXd means(static_cast<Eigen::Index>(filtered.groups.size()));
            for (std::size_t k = 0; k < filtered.groups.size(); ++k)
                means[static_cast<Eigen::Index>(k)] = mean_of(filtered.groups[k].rewards);
            point.mean_reward = mean_of(means);
            for (int s = 0; s < task.inner_steps; ++s) {
                if (s > 0) refresh_logprobs_new(policy, filtered.groups, prompt_of);
                const StepResult step = policy_gradient_step(policy, filtered.groups, prompt_of, task.grpo,
                                                             task.learning_rate, task.max_grad_norm);
                point.kl = step.loss.kl_penalty;
                point.clipped_frac = step.loss.tokens_clipped_frac;
            }
        } else {
            // Every drawn group was degenerate: report the mean over what was drawn.
            point.mean_reward = mean_of(Eigen::Map<const Eigen::VectorXd>(drawn_means.data(),
                                                                         static_cast<Eigen::Index>(drawn_means.size())));
        }
        result.curve.push_back(point);
    }
    return result;
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "iteration,mean_reward,kl,clipped_frac\n";
    for (const auto& p : curve) {
        out += std::to_string(p.iteration) + "," + format_double(p.mean_reward) + "," + format_double(p.kl) + "," +
               format_double(p.clipped_frac) + "\n";
    }
    return out;
}

}  // namespace georl
