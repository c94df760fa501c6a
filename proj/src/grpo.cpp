#include "georl/grpo.hpp"

#include <string>

namespace georl {

namespace {

const Eigen::VectorXd& advantages_of(const RolloutGroup& g) {
    if (!g.advantages) throw MissingAdvantages("group " + g.prompt_id + " has no advantages");
    if (g.advantages->size() != g.size())
        throw LengthMismatch("group " + g.prompt_id + ": advantages do not match responses");
    return *g.advantages;
}

void check_lengths(const ModelResponse& r) {
    const auto n = r.length();
    if (r.logprobs_new.size() != n || r.logprobs_old.size() != n || r.logprobs_ref.size() != n)
        throw LengthMismatch("response log-prob lists differ from token count");
}

long long token_count(const std::vector<RolloutGroup>& groups) {
    long long n = 0;
    for (const auto& g : groups)
        for (const auto& r : g.responses) n += r.length();
    return n;
}

}  // namespace

void GrpoConfig::validate() const {
    if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
    if (!(clip_eps > 0.0)) throw std::invalid_argument("clip_eps must be > 0");
    if (!(kl_coeff >= 0.0)) throw std::invalid_argument("kl_coeff must be >= 0");
    if (!(oversample_factor >= 1.0)) throw std::invalid_argument("oversample_factor must be >= 1");
    if (max_resample_rounds < 1) throw std::invalid_argument("max_resample_rounds must be >= 1");
}

LossReport clipped_surrogate(const std::vector<RolloutGroup>& groups, const GrpoConfig& cfg) {
    LossReport report;
    report.gamma = token_count(groups);
    Eigen::VectorXd terms(report.gamma);
    Eigen::Index k = 0;
    long long clipped = 0;
    for (const auto& g : groups) {
        const Eigen::VectorXd& adv = advantages_of(g);
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            const ModelResponse& r = g.responses[i];
            check_lengths(r);
            for (Eigen::Index t = 0; t < r.length(); ++t) {
                const double ratio = token_ratio(r.logprobs_new[t], r.logprobs_old[t]);
                terms[k++] = clipped_term(ratio, adv[i], cfg.clip_eps);
                clipped += clip_active(ratio, adv[i], cfg.clip_eps);
            }
        }
    }
    if (report.gamma > 0) {
        report.surrogate = pairwise_sum(terms) / static_cast<double>(report.gamma);
        report.tokens_clipped_frac = static_cast<double>(clipped) / static_cast<double>(report.gamma);
    }
    return report;
}

double batch_kl_penalty(const std::vector<RolloutGroup>& groups) {
    const long long gamma = token_count(groups);
    if (gamma == 0) return 0.0;
    Eigen::VectorXd terms(gamma);
    Eigen::Index k = 0;
    for (const auto& g : groups) {
        for (const auto& r : g.responses) {
            check_lengths(r);
            terms.segment(k, r.length()) = k3_terms(r.logprobs_new, r.logprobs_ref);
            k += r.length();
        }
    }
    return pairwise_sum(terms) / static_cast<double>(gamma);
}

LossReport grpo_objective(const std::vector<RolloutGroup>& groups, const GrpoConfig& cfg) {
    LossReport report = clipped_surrogate(groups, cfg);
    report.kl_penalty = batch_kl_penalty(groups);
    report.total_objective = report.surrogate - cfg.kl_coeff * report.kl_penalty;
    return report;
}

std::vector<std::vector<Eigen::VectorXd>> grpo_logprob_gradient(const std::vector<RolloutGroup>& groups,
                                                                const GrpoConfig& cfg) {
    const long long gamma = token_count(groups);
    std::vector<std::vector<Eigen::VectorXd>> grad(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const RolloutGroup& g = groups[gi];
        const Eigen::VectorXd& adv = advantages_of(g);
        grad[gi].resize(g.responses.size());
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            const ModelResponse& r = g.responses[i];
            check_lengths(r);
            Eigen::VectorXd& out = grad[gi][i];
            out.resize(r.length());
            for (Eigen::Index t = 0; t < r.length(); ++t) {
                const double ratio = token_ratio(r.logprobs_new[t], r.logprobs_old[t]);
                // d k3 / d logp_new = 1 - exp(ref - new)
                const double kl_slope = -std::expm1(r.logprobs_ref[t] - r.logprobs_new[t]);
                out[t] = (clipped_term_slope(ratio, adv[i], cfg.clip_eps) - cfg.kl_coeff * kl_slope) /
                         static_cast<double>(gamma);
            }
        }
    }
    return grad;
}

FilterResult dynamic_sample_filter(const GroupStream& stream, std::size_t target_batch, const GrpoConfig& cfg) {
    FilterResult result;
    const auto per_round = static_cast<std::size_t>(std::ceil(static_cast<double>(target_batch) * cfg.oversample_factor));
    bool exhausted = false;
    for (int round = 0; round < cfg.max_resample_rounds && !exhausted; ++round) {
        for (std::size_t k = 0; k < per_round && result.groups.size() < target_batch; ++k) {
            std::optional<RolloutGroup> g = stream();
            if (!g) {
                exhausted = true;
                break;
            }
            ++result.drawn;
            auto adv = compute_advantages(g->rewards, cfg.std_mode);
            if (!adv) {
                ++result.degenerate;
                continue;
            }
            g->advantages = std::move(*adv);
            result.groups.push_back(std::move(*g));
        }
        if (result.groups.size() >= target_batch) break;
    }
    result.underfilled = result.groups.size() < target_batch;
    return result;
}

}  // namespace georl
