#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "georl/core_model.hpp"
#include "georl/grpo.hpp"
#include "georl/reward.hpp"

namespace georl {

// Vocabulary: digits 0-9, letters A-D, structural tokens, two fillers, end of sequence.
namespace tok {
inline constexpr int kDigit0 = 0;
inline constexpr int kLetterA = 10;
inline constexpr int kThinkOpen = 14;
inline constexpr int kThinkClose = 15;
inline constexpr int kBoxOpen = 16;
inline constexpr int kBoxClose = 17;
inline constexpr int kFillerStep = 18;
inline constexpr int kFillerSo = 19;
inline constexpr int kEos = 20;
inline constexpr int kVocab = 21;
}  // namespace tok

std::string_view token_text(int token);

/// Concatenated token texts; the end-of-sequence token renders as nothing.
std::string render_tokens(const std::vector<int>& tokens);

/// Tabular policy: one row of logits per (prompt, position).
class ToyPolicy {
public:
    ToyPolicy(int prompts, int max_len = 16);

    /// Logits biased toward `<think> filler </think> \boxed{ ? } <eos>` with the
    /// answer slot uniform over digits and letters. `strength` is the bias in nats.
    static ToyPolicy template_prior(int prompts, int max_len, double strength);

    int prompts() const { return prompts_; }
    int max_len() const { return max_len_; }

    Eigen::Index row_index(int prompt, int position) const { return Eigen::Index(prompt) * max_len_ + position; }

    /// (prompts * max_len) x vocab.
    Eigen::MatrixXd& logits() { return logits_; }
    const Eigen::MatrixXd& logits() const { return logits_; }

    Eigen::VectorXd log_softmax(int prompt, int position) const;
    Eigen::VectorXd probabilities(int prompt, int position) const;

    /// Per-token log-probabilities of `tokens` as a response to `prompt`.
    Eigen::VectorXd sequence_logprobs(int prompt, const std::vector<int>& tokens) const;

    /// Samples until end of sequence or max_len tokens at temperature 1.
    std::vector<int> sample(int prompt, std::mt19937_64& rng) const;

private:
    int prompts_;
    int max_len_;
    Eigen::MatrixXd logits_;
};

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Seed for one (iteration, draw) stream derived from the run seed; independent of thread count.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

struct SimPrompt {
    std::string id;
    Answer gold;
};

struct SimTask {
    std::vector<SimPrompt> prompts;
    RewardConfig reward;
    GrpoConfig grpo;
    double learning_rate = 4.0;
    int iterations = 500;
    std::uint64_t seed = 1;
    int max_len = 16;
    double prior_strength = 4.0;
    double max_grad_norm = 1.0;
    // Gradient steps per sampled batch; > 1 moves pi_theta away from pi_old so clipping engages.
    int inner_steps = 1;
    // Groups per filtered batch; 0 means one per prompt.
    int batch_groups = 0;
    unsigned threads = 1;

    void validate() const;
};

/// The 4-prompt task: two choice golds, one numeric, one expression.
SimTask default_sim_task();

/// JSON object with keys named after the SimTask fields plus "reward" and "grpo"
/// sub-objects; omitted keys keep their defaults and omitted prompts mean the
/// default task. Unknown keys and invalid values raise DataError.
SimTask sim_task_from_json(const std::string& text);

/// G responses to `prompt` sampled from `policy` (as pi_old) and scored against `gold`;
/// logprobs_ref come from `reference`.
RolloutGroup sample_group(const ToyPolicy& policy, const ToyPolicy& reference, int prompt, const std::string& prompt_id,
                          const Answer& gold, int group_size, std::uint64_t seed, const RewardConfig& reward);

/// Recomputes logprobs_new of every response from `policy`. Groups carry the
/// prompt index in their prompt_id lookup table `prompt_of`.
void refresh_logprobs_new(const ToyPolicy& policy, std::vector<RolloutGroup>& groups, const std::vector<int>& prompt_of);

/// d total_objective / d logits, same shape as policy.logits().
Eigen::MatrixXd objective_gradient(const ToyPolicy& policy, const std::vector<RolloutGroup>& groups,
                                   const std::vector<int>& prompt_of, const GrpoConfig& cfg);

struct StepResult {
    LossReport loss;
    double grad_norm = 0.0;  // before clipping
};

/// One ascent step: logits += lr * g, with g rescaled to norm max_grad_norm when larger.
/// logprobs_new of `groups` must be current for `policy`.
StepResult policy_gradient_step(ToyPolicy& policy, const std::vector<RolloutGroup>& groups,
                                const std::vector<int>& prompt_of, const GrpoConfig& cfg, double lr,
                                double max_grad_norm = 1.0);

struct CurvePoint {
    int iteration = 0;
    double mean_reward = 0.0;
    double kl = 0.0;
    double clipped_frac = 0.0;
    bool underfilled = false;
};

struct TrainingResult {
    std::vector<CurvePoint> curve;
    ToyPolicy policy;
    int underfilled_iterations = 0;
};

TrainingResult run_training(const SimTask& task);

/// `iteration,mean_reward,kl,clipped_frac` with a header line.
std::string curve_csv(const std::vector<CurvePoint>& curve);

}  // namespace georl
