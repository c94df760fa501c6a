#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "georl/core_model.hpp"

namespace georl {

class ZeroTarget : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class UnknownId : public DataError {
public:
    using DataError::DataError;
};

/// 1 - theta for theta in {0.50, 0.55, ..., 0.95}.
inline constexpr std::array<double, 10> kMraTolerances = {0.5, 0.45, 0.4, 0.35, 0.3, 0.25, 0.2, 0.15, 0.1, 0.05};

/// Fraction of thresholds with |p - t| / |t| < 1 - theta. Throws ZeroTarget when t == 0.
double mra(double p, double t);

struct Prediction {
    std::string id;
    std::string raw_text;
};

/// JSONL lines of {"id": str, "raw_text": str}.
std::vector<Prediction> read_predictions(std::istream& in);
std::vector<Prediction> read_predictions_file(const std::string& path);

/// JSON object mapping item id to task name.
std::map<std::string, std::string> read_task_map_file(const std::string& path);

struct EvalOptions {
    // Fall back to the last number in the text when no box is present (numeric items only).
    bool lenient = false;
};

struct EvalReport {
    std::map<std::string, double> per_task;
    double overall = 0.0;
    std::map<std::string, std::size_t> counts;
    std::size_t unanswered = 0;
    std::size_t zero_targets = 0;
    std::vector<std::string> warnings;
};

/// Numeric golds score by mra, choice golds by exact letter match, expression
/// golds by symbolic equality. Missing or unextractable predictions score 0.
/// Throws UnknownId for a prediction id absent from gold and DataError for a gold id without a task.
EvalReport evaluate_predictions(const std::vector<Prediction>& predictions, const std::vector<Instance>& gold,
                                const std::map<std::string, std::string>& task_map, const EvalOptions& opts = {});

/// Keys: per_task, overall, counts, unanswered, zero_targets.
std::string report_json(const EvalReport& report);

/// Last decimal number in free text, e.g. "about 3.5 m" -> 3.5.
std::optional<double> last_number(std::string_view text);

}  // namespace georl
