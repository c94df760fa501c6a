#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace georl {

/// Raised when serialized corpus data cannot be decoded into domain types.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Paired inputs of different lengths.
class LengthMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class AnswerKind { Expression, Numeric, MultipleChoice };
enum class GeometryKind { Plane, Solid, Unknown };

/// Gold answer of one problem. Exactly one payload is meaningful, selected by `kind`.
class Answer {
public:
    static Answer expression(std::string latex, bool unverified = false);
    static Answer numeric(double value);
    static Answer choice(char label);

    AnswerKind kind() const { return kind_; }
    const std::string& expression() const { return expression_; }
    double value() const { return value_; }
    char choice() const { return choice_; }

    /// Set when an Expression answer does not parse under the LaTeX grammar.
    bool unverified() const { return unverified_; }
    Answer with_unverified(bool flag) const;

    /// Payload as a string: the LaTeX source, the shortest round-trip decimal, or the letter.
    std::string text() const;

    friend bool operator==(const Answer& a, const Answer& b);

private:
    AnswerKind kind_ = AnswerKind::Numeric;
    std::string expression_;
    double value_ = 0.0;
    char choice_ = 0;
    bool unverified_ = false;
};

struct ImageRef {
    std::string path;
    std::uint64_t phash = 0;

    friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

/// One curated problem: image(s), problem text and answer.
struct Instance {
    std::string id;
    std::vector<ImageRef> images;
    std::string problem;
    Answer answer;
    GeometryKind geometry_kind = GeometryKind::Unknown;
    std::string source;

    friend bool operator==(const Instance&, const Instance&) = default;
};

inline constexpr std::size_t kMaxImagesPerInstance = 8;

struct ModelResponse {
    std::string raw_text;
    std::vector<int> tokens;
    Eigen::VectorXd logprobs_new;
    Eigen::VectorXd logprobs_old;
    Eigen::VectorXd logprobs_ref;

    Eigen::Index length() const { return static_cast<Eigen::Index>(tokens.size()); }
};

/// G responses sampled for one prompt, with their scalar rewards.
struct RolloutGroup {
    std::string prompt_id;
    std::vector<ModelResponse> responses;
    Eigen::VectorXd rewards;
    std::optional<Eigen::VectorXd> advantages;

    Eigen::Index size() const { return static_cast<Eigen::Index>(responses.size()); }
};

enum class RewardRule { SymbolicMatch, NumericBand, ChoiceMatch, NoMatch, Unextractable };

struct RewardBreakdown {
    double format_reward = 0.0;
    double answer_reward = 0.0;
    double total = 0.0;
    RewardRule rule_fired = RewardRule::Unextractable;
    bool fallback_used = false;

    friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

// Invariant checks. Each returned string names the field and the rule broken.
// `check_grammar` also requires Expression answers to parse unless flagged unverified;
// raw corpora entering curation are checked without it.
std::vector<std::string> validate_instance(const Instance& inst, bool check_grammar = true);
std::vector<std::string> validate_response(const ModelResponse& response);
std::vector<std::string> validate_group(const RolloutGroup& group);
std::vector<std::string> validate_corpus(const std::vector<Instance>& corpus, bool check_grammar = true);

// Enum spellings shared by every file format.
std::string to_string(AnswerKind kind);
std::string to_string(GeometryKind kind);
std::string to_string(RewardRule rule);
AnswerKind answer_kind_from_string(const std::string& s);
GeometryKind geometry_kind_from_string(const std::string& s);

std::string format_phash(std::uint64_t hash);
std::uint64_t parse_phash(const std::string& hex);

/// Shortest decimal string that round-trips to `value`.
std::string format_double(double value);

/// {"kind": ..., "value": ...} with "unverified" present only when set.
std::string encode_answer(const Answer& a);
Answer decode_answer(const std::string& json);

// JSONL corpus I/O, one Instance per line.
std::string encode_instance(const Instance& inst);
Instance decode_instance(const std::string& line);
std::vector<Instance> read_corpus(std::istream& in);
std::vector<Instance> read_corpus_file(const std::string& path);
void write_corpus(std::ostream& out, const std::vector<Instance>& corpus);

}  // namespace georl
