#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "georl/core_model.hpp"
#include "georl/latex_math.hpp"

namespace georl {

struct RewardConfig {
    double numeric_band = 0.01;
    double format_weight = 0.1;
    bool require_think_tags = true;
    double zero_target_abs_tol = 1e-9;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

struct Extraction {
    std::string payload;
    bool think_ok = false;
    std::size_t box_offset = 0;  // byte offset of the winning `\boxed{`
};

/// Contents of the last balanced `\boxed{...}`; nullopt when there is none.
std::optional<Extraction> extract_final_answer(std::string_view raw_text);

/// 1 when |p - t| / |t| <= band (t != 0) or |p| <= zero tolerance (t == 0), else 0.
double numeric_band_reward(double p, double t, const RewardConfig& cfg = {});

/// Real value of a boxed payload: a plain decimal, or a LaTeX expression
/// without free variables. A trailing `= rhs` is reduced to rhs and a trailing
/// degree mark is dropped.
std::optional<double> payload_value(std::string_view payload);

/// Option letter A-H (uppercased) from a payload such as "b", "(B)", "\text{B}." .
std::optional<char> payload_choice(std::string_view payload);

RewardBreakdown score_response(std::string_view raw_text, const Answer& gold, const RewardConfig& cfg = {});

/// Element-wise score_response. Output order equals input order for any thread count.
std::vector<RewardBreakdown> score_batch(const std::vector<std::string>& responses, const std::vector<Answer>& golds,
                                         const RewardConfig& cfg = {}, unsigned threads = 0);

}  // namespace georl
