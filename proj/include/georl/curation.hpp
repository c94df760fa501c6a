#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "georl/core_model.hpp"

namespace georl {

// ---- images and perceptual hashing ----

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const std::uint8_t* at(int x, int y) const { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
};

/// PNG, JPEG or binary/ASCII PNM (P2, P3, P5, P6), sniffed from the leading bytes.
RgbImage decode_image(std::string_view bytes);
RgbImage read_image_file(const std::string& path);

/// Binary PPM (P6) encoding, used for synthetic fixtures.
std::string encode_ppm(const RgbImage& image);

/// 64-bit difference hash: integer luma 299R + 587G + 114B, exact area-weighted
/// box resample to 9x8, bit set where a cell is brighter than its left
/// neighbour. Bits are packed row-major, first comparison in the most significant bit.
std::uint64_t dhash(const RgbImage& image);
std::uint64_t phash(std::string_view image_bytes);

int hamming_distance(std::uint64_t a, std::uint64_t b);

struct DedupResult {
    std::vector<Instance> kept;
    std::vector<std::string> removed_ids;
};

/// Keeps the first occurrence; a later instance is removed when any of its image
/// hashes is within `threshold` of a hash already kept.
DedupResult dedup(const std::vector<Instance>& instances, int threshold = 5);

// ---- external text services ----

class SplitterUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatterUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Splits a text into its enumerated sub-questions. A text without sub-questions
/// comes back as a single part.
class ExternalSplitter {
public:
    virtual ~ExternalSplitter() = default;
    virtual std::vector<std::string> split(const std::string& text) = 0;
};

/// Rewrites plain-text or unicode math as LaTeX.
class ExternalFormatter {
public:
    virtual ~ExternalFormatter() = default;
    virtual std::string format(const std::string& text) = 0;
};

/// Markers "(1)", "（1）" and circled digits, numbered 1..k in order with k >= 2.
/// Part i is the shared stem followed by the text of sub-question i.
class RuleBasedSplitter : public ExternalSplitter {
public:
    std::vector<std::string> split(const std::string& text) override;
};

/// Deterministic rewrite table: unicode symbols, superscript digits, roots,
/// simple a/b quotients and '*' products.
class RuleBasedFormatter : public ExternalFormatter {
public:
    std::string format(const std::string& text) override;
};

/// Unicode math symbols in free text replaced by LaTeX commands; nothing else changes.
std::string latexify_symbols(std::string_view text);

/// Stem and sub-question bodies; parts is empty when the text has fewer than two markers.
struct SplitText {
    std::string stem;
    std::vector<std::string> parts;
};
SplitText split_markers(std::string_view text);

struct ServiceEndpoint {
    std::string url;  // scheme://host[:port]/path
    std::string token;
    int max_attempts = 3;
    int initial_backoff_ms = 200;

    /// From CURATE_LLM_URL and CURATE_LLM_TOKEN; nullopt when the URL is unset.
    static std::optional<ServiceEndpoint> from_environment();
};

/// HTTP POST of {"task": "split"|"format", "text": str} answered by
/// {"parts": [str]} or {"text": str}, retried with exponential backoff.
class HttpTextService : public ExternalSplitter, public ExternalFormatter {
public:
    explicit HttpTextService(ServiceEndpoint endpoint);
    std::vector<std::string> split(const std::string& text) override;
    std::string format(const std::string& text) override;

private:
    std::string post(const std::string& task, const std::string& text);
    ServiceEndpoint endpoint_;
};

// ---- pipeline stages ----

/// Instance ids `parent#k` sharing images; the answer must split into the same
/// number of parts, otherwise the instance passes through unchanged.
std::vector<Instance> split_subquestions(const Instance& inst, ExternalSplitter& splitter,
                                         std::vector<std::string>* log = nullptr);

/// LaTeX-normalized problem and answer. Expression answers that still fail to
/// parse are tagged unverified; a rewrite that changes the answer's value is discarded.
Instance normalize_formulae(const Instance& inst, ExternalFormatter& formatter);

/// Average as the exact quotient sum / count, rounded half-up to one decimal.
struct Average {
    std::uint64_t sum = 0;
    std::uint64_t count = 0;

    std::string one_decimal() const;

    friend bool operator==(const Average&, const Average&) = default;
};

struct CorpusStats {
    std::uint64_t total = 0;
    std::uint64_t expression = 0;
    std::uint64_t numeric = 0;
    std::uint64_t multiple_choice = 0;
    std::uint64_t plane = 0;
    std::uint64_t solid = 0;
    std::uint64_t unknown_kind = 0;
    std::uint64_t max_question_length = 0;
    Average avg_question_length;
    std::uint64_t max_answer_length = 0;
    Average avg_answer_length;
    std::uint64_t max_image_count = 0;
    Average avg_image_count;

    friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

/// Lengths in unicode code points of the problem text and of Answer::text().
CorpusStats compute_stats(const std::vector<Instance>& corpus);

/// Number of UTF-8 code points (bytes that are not continuation bytes).
std::uint64_t utf8_length(std::string_view s);

struct CurationReport {
    std::uint64_t input_count = 0;
    std::uint64_t dedup_removed = 0;
    std::uint64_t split_added = 0;
    std::uint64_t format_rewritten = 0;
    std::uint64_t output_count = 0;
    CorpusStats stats;
    std::vector<std::string> removed_ids;
    std::vector<std::string> log;

    bool conserved() const { return output_count + dedup_removed == input_count + split_added; }
};

struct CurationOptions {
    int dedup_threshold = 5;
    // Directory that relative image paths resolve against; empty disables rehashing.
    std::string image_root;
    unsigned threads = 1;
};

struct CurationResult {
    std::vector<Instance> corpus;
    CurationReport report;
};

/// Rehash readable images, dedup, split, normalize, then tally.
CurationResult run_curation(const std::vector<Instance>& input, ExternalSplitter& splitter,
                            ExternalFormatter& formatter, const CurationOptions& opts = {});

/// Dataset-summary rows keyed by their row names, plus "length_unit".
std::string corpus_stats_json(const CorpusStats& stats);

/// Report JSON: counts, then a "stats" object keyed by the corpus-statistics row names.
std::string curation_report_json(const CurationReport& report);

}  // namespace georl
