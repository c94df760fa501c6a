#include <algorithm>
#include <filesystem>

#include <json.hpp>

#include "georl/curation.hpp"
#include "georl/parallel.hpp"

namespace georl {

std::string Average::one_decimal() const {
    if (count == 0) return "0.0";
    // Half-up rounding of sum / count to tenths, in integers.
    const std::uint64_t tenths = (20 * sum + count) / (2 * count);
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

CorpusStats compute_stats(const std::vector<Instance>& corpus) {
    CorpusStats s;
    for (const auto& inst : corpus) {
        ++s.total;
        switch (inst.answer.kind()) {
            case AnswerKind::Expression: ++s.expression; break;
            case AnswerKind::Numeric: ++s.numeric; break;
            case AnswerKind::MultipleChoice: ++s.multiple_choice; break;
        }
        switch (inst.geometry_kind) {
            case GeometryKind::Plane: ++s.plane; break;
            case GeometryKind::Solid: ++s.solid; break;
            case GeometryKind::Unknown: ++s.unknown_kind; break;
        }
        const auto q = utf8_length(inst.problem);
        const auto a = utf8_length(inst.answer.text());
        const auto n = static_cast<std::uint64_t>(inst.images.size());
        s.max_question_length = std::max(s.max_question_length, q);
        s.max_answer_length = std::max(s.max_answer_length, a);
        s.max_image_count = std::max(s.max_image_count, n);
        s.avg_question_length.sum += q;
        s.avg_answer_length.sum += a;
        s.avg_image_count.sum += n;
    }
    s.avg_question_length.count = s.avg_answer_length.count = s.avg_image_count.count = s.total;
    return s;
}

namespace {

std::string resolve(const std::string& root, const std::string& path) {
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (std::filesystem::path(root) / p).string();
}

}  // namespace

CurationResult run_curation(const std::vector<Instance>& input, ExternalSplitter& splitter,
                            ExternalFormatter& formatter, const CurationOptions& opts) {
    CurationResult result;
    CurationReport& report = result.report;
    report.input_count = input.size();

    std::vector<Instance> hashed = input;
    if (!opts.image_root.empty()) {
        std::vector<std::vector<std::string>> notes(hashed.size());
        parallel_for(hashed.size(), opts.threads, [&](std::size_t i) {
            for (auto& img : hashed[i].images) {
                const std::string path = resolve(opts.image_root, img.path);
                if (!std::filesystem::is_regular_file(path)) continue;
                try {
                    img.phash = dhash(read_image_file(path));
                } catch (const DecodeError& e) {
                    notes[i].push_back(hashed[i].id + ": kept stored hash for " + img.path + " (" + e.what() + ")");
                }
            }
        });
        for (auto& n : notes) report.log.insert(report.log.end(), n.begin(), n.end());
    }

    DedupResult deduped = dedup(hashed, opts.dedup_threshold);
    report.dedup_removed = deduped.removed_ids.size();
    report.removed_ids = std::move(deduped.removed_ids);

    std::vector<Instance> split;
    for (const auto& inst : deduped.kept) {
        auto parts = split_subquestions(inst, splitter, &report.log);
        report.split_added += parts.size() - 1;
        for (auto& p : parts) split.push_back(std::move(p));
    }

    result.corpus.resize(split.size());
    std::vector<char> changed(split.size(), 0);
    parallel_for(split.size(), opts.threads, [&](std::size_t i) {
        result.corpus[i] = normalize_formulae(split[i], formatter);
        changed[i] = !(result.corpus[i] == split[i]);
    });
    report.format_rewritten = static_cast<std::uint64_t>(std::count(changed.begin(), changed.end(), 1));

    report.output_count = result.corpus.size();
    report.stats = compute_stats(result.corpus);
    if (!report.conserved()) throw std::logic_error("curation count equation violated");
    return result;
}

namespace {

nlohmann::ordered_json stats_object(const CorpusStats& s) {
    const auto max_avg = [](std::uint64_t max, const Average& avg) { return std::to_string(max) + " / " + avg.one_decimal(); };
    nlohmann::ordered_json j;
    j["Total Number"] = s.total;
    j["Mathematical Expression"] = s.expression;
    j["Numeric"] = s.numeric;
    j["Multiple-Choice"] = s.multiple_choice;
    j["Plane (2D)"] = s.plane;
    j["Solid (3D)"] = s.solid;
    j["Unknown"] = s.unknown_kind;
    j["Max and Avg question length"] = max_avg(s.max_question_length, s.avg_question_length);
    j["Max and Avg answer length"] = max_avg(s.max_answer_length, s.avg_answer_length);
    j["Max and Avg image numbers"] = max_avg(s.max_image_count, s.avg_image_count);
    j["length_unit"] = "characters";
    return j;
}

}  // namespace

std::string corpus_stats_json(const CorpusStats& stats) { return stats_object(stats).dump(2); }

std::string curation_report_json(const CurationReport& report) {
    nlohmann::ordered_json j;
    j["input_count"] = report.input_count;
    j["dedup_removed"] = report.dedup_removed;
    j["split_added"] = report.split_added;
    j["format_rewritten"] = report.format_rewritten;
    j["output_count"] = report.output_count;
    j["stats"] = stats_object(report.stats);
    j["removed_ids"] = report.removed_ids;
    j["log"] = report.log;
    return j.dump(2);
}

}  // namespace georl
