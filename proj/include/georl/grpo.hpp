#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "georl/core_model.hpp"

namespace georl {

class GroupTooSmall : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class MissingAdvantages : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class StdMode { Population, Sample };

struct GrpoConfig {
    int group_size = 8;
    double clip_eps = 0.2;
    double kl_coeff = 1e-2;
    StdMode std_mode = StdMode::Population;
    double oversample_factor = 2.0;
    int max_resample_rounds = 4;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct LossReport {
    double surrogate = 0.0;
    double kl_penalty = 0.0;
    double total_objective = 0.0;
    double tokens_clipped_frac = 0.0;
    long long gamma = 0;
};

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {
template <class Scalar>
Scalar pairwise_sum(const Scalar* x, Eigen::Index n) {
    if (n <= 8) {
        Scalar s(0);
        for (Eigen::Index i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const Eigen::Index half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}
}  // namespace detail

/// Sum by recursive halving. The association order depends only on the length.
template <class Derived>
typename Derived::Scalar pairwise_sum(const Eigen::DenseBase<Derived>& v) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Array<Scalar, Eigen::Dynamic, 1> flat = v.derived().reshaped();
    return detail::pairwise_sum(flat.data(), flat.size());
}

/// (R - mean) / std over one group; nullopt (Degenerate) when all rewards are equal.
template <class Derived>
std::optional<Vec<typename Derived::Scalar>> compute_advantages(const Eigen::MatrixBase<Derived>& rewards,
                                                                StdMode mode = StdMode::Population) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index g = rewards.size();
    if (g < 2) throw GroupTooSmall("group of " + std::to_string(g) + " responses; need at least 2");
    if (rewards.maxCoeff() == rewards.minCoeff()) return std::nullopt;
    const Scalar mean = pairwise_sum(rewards) / Scalar(g);
    const Vec<Scalar> centered = rewards.array() - mean;
    const Scalar denom = mode == StdMode::Population ? Scalar(g) : Scalar(g - 1);
    const Scalar sd = std::sqrt(pairwise_sum(centered.array().square()) / denom);
    if (!(sd > Scalar(0))) return std::nullopt;
    return Vec<Scalar>(centered / sd);
}

/// exp(logp_new - logp_old).
template <class Scalar>
Scalar token_ratio(Scalar logp_new, Scalar logp_old) {
    using std::exp;
    return exp(logp_new - logp_old);
}

/// min(r A, clip(r, 1 - eps, 1 + eps) A).
template <class Scalar>
Scalar clipped_term(Scalar ratio, Scalar advantage, Scalar eps) {
    const Scalar clipped = std::clamp(ratio, Scalar(1) - eps, Scalar(1) + eps);
    return std::min(ratio * advantage, clipped * advantage);
}

/// True when the clipped branch is strictly smaller, so the term is flat in the ratio.
template <class Scalar>
bool clip_active(Scalar ratio, Scalar advantage, Scalar eps) {
    const Scalar clipped = std::clamp(ratio, Scalar(1) - eps, Scalar(1) + eps);
    return clipped * advantage < ratio * advantage;
}

/// d clipped_term / d logp_new: r A on the unclipped branch, else 0.
template <class Scalar>
Scalar clipped_term_slope(Scalar ratio, Scalar advantage, Scalar eps) {
    return clip_active(ratio, advantage, eps) ? Scalar(0) : ratio * advantage;
}

/// k3 estimator exp(d) - d - 1 with d = logp_ref - logp_new, elementwise; never negative.
template <class DerivedA, class DerivedB>
Vec<typename DerivedA::Scalar> k3_terms(const Eigen::MatrixBase<DerivedA>& logp_new,
                                        const Eigen::MatrixBase<DerivedB>& logp_ref) {
    using Scalar = typename DerivedA::Scalar;
    if (logp_new.size() != logp_ref.size()) throw LengthMismatch("kl_penalty: log-prob lists differ in length");
    const auto delta = (logp_ref - logp_new).array();
    return delta.unaryExpr([](Scalar d) { return std::max(Scalar(0), Scalar(std::expm1(d) - d)); }).matrix();
}

/// Mean k3 estimate of KL[new || ref] over the tokens.
template <class DerivedA, class DerivedB>
typename DerivedA::Scalar kl_penalty(const Eigen::MatrixBase<DerivedA>& logp_new,
                                     const Eigen::MatrixBase<DerivedB>& logp_ref) {
    using Scalar = typename DerivedA::Scalar;
    const auto terms = k3_terms(logp_new, logp_ref);
    if (terms.size() == 0) return Scalar(0);
    return pairwise_sum(terms) / Scalar(terms.size());
}

/// Token-level surrogate (1/gamma) sum_i sum_t min(r A_i, clip(r) A_i); sets surrogate, gamma and
/// tokens_clipped_frac.
LossReport clipped_surrogate(const std::vector<RolloutGroup>& groups, const GrpoConfig& cfg);

/// Mean k3 over every token of the batch.
double batch_kl_penalty(const std::vector<RolloutGroup>& groups);

/// surrogate - beta * kl over a batch of non-degenerate groups.
LossReport grpo_objective(const std::vector<RolloutGroup>& groups, const GrpoConfig& cfg);

/// Gradient of grpo_objective with respect to every logp_new entry, laid out
/// like groups[g].responses[i].logprobs_new.
std::vector<std::vector<Eigen::VectorXd>> grpo_logprob_gradient(const std::vector<RolloutGroup>& groups,
                                                                const GrpoConfig& cfg);

struct FilterResult {
    std::vector<RolloutGroup> groups;
    bool underfilled = false;
    std::size_t drawn = 0;
    std::size_t degenerate = 0;
};

/// Source of candidate groups; nullopt once exhausted.
using GroupStream = std::function<std::optional<RolloutGroup>()>;

/// Draws up to ceil(target * oversample_factor) groups per round for at most
/// max_resample_rounds rounds, keeping non-degenerate groups (advantages filled in)
/// in first-seen order until target_batch are kept.
FilterResult dynamic_sample_filter(const GroupStream& stream, std::size_t target_batch, const GrpoConfig& cfg);

}  // namespace georl
