#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <bit>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "georl/curation.hpp"
#include "curation_fixtures.hpp"
#include "georl/latex_math.hpp"

using namespace georl;
using namespace fixtures;

namespace {

std::string data_path(const std::string& rel) { return std::string(GEORL_TEST_DATA) + "/" + rel; }

class ThrowingSplitter : public ExternalSplitter {
public:
    std::vector<std::string> split(const std::string&) override { throw SplitterUnavailable("offline"); }
};

class FixedSplitter : public ExternalSplitter {
public:
    explicit FixedSplitter(std::vector<std::string> parts) : parts_(std::move(parts)) {}
    std::vector<std::string> split(const std::string&) override { return parts_; }

private:
    std::vector<std::string> parts_;
};

class FixedFormatter : public ExternalFormatter {
public:
    explicit FixedFormatter(std::string text) : text_(std::move(text)) {}
    std::string format(const std::string&) override { return text_; }

private:
    std::string text_;
};

class ThrowingFormatter : public ExternalFormatter {
public:
    std::string format(const std::string&) override { throw FormatterUnavailable("offline"); }
};

bool parses(const std::string& s) {
    try {
        latex::parse_latex(s);
        return true;
    } catch (const latex::ParseError&) {
        return false;
    }
}

}  // namespace

// ---- splitting ----

TEST_CASE("rule-based splitter on the hand-labelled fixture") {
    std::ifstream in(data_path("split_fixture.jsonl"));
    REQUIRE(in);
    RuleBasedSplitter splitter;
    int cases = 0;
    for (std::string line; std::getline(in, line);) {
        const auto j = nlohmann::json::parse(line);
        const std::string text = j["text"];
        CAPTURE(text);
        CHECK(splitter.split(text) == j["parts"].get<std::vector<std::string>>());
        ++cases;
    }
    CHECK(cases == 30);
}

TEST_CASE("split_subquestions examples") {
    RuleBasedSplitter rules;
    const Instance whole = make_instance("X", "Find the angle.", Answer::numeric(30));
    CHECK(split_subquestions(whole, rules) == std::vector<Instance>{whole});

    const Instance two = make_instance("X", "In the square, AB = 4. (1) find AB. (2) find the area.",
                                       Answer::expression("(1) 4 (2) 16"));
    const auto parts = split_subquestions(two, rules);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].id == "X#1");
    CHECK(parts[1].id == "X#2");
    CHECK(parts[0].problem == "In the square, AB = 4. find AB.");
    CHECK(parts[1].answer == Answer::expression("16"));
    for (const auto& p : parts) {
        CHECK(p.images == two.images);
        CHECK(validate_instance(p).empty());
    }

    // Three sub-questions but two answers: kept whole and logged.
    std::vector<std::string> log;
    const Instance mismatched = make_instance("Y", "(1) a? (2) b? (3) c?", Answer::expression("(1) 1 (2) 2"));
    CHECK(split_subquestions(mismatched, rules, &log) == std::vector<Instance>{mismatched});
    REQUIRE(log.size() == 1);
    CHECK(log[0].starts_with("Y: 3 sub-questions but 2 answer parts"));

    ThrowingSplitter down;
    log.clear();
    CHECK(split_subquestions(two, down, &log) == std::vector<Instance>{two});
    CHECK(log.size() == 1);

    FixedSplitter external({"p one", "p two", "p three"});
    const Instance three = make_instance("Z", "anything", Answer::expression("(1) x (2) 2x (3) x^2"));
    const auto out = split_subquestions(three, external);
    REQUIRE(out.size() == 3);
    CHECK(out[2].problem == "p three");
    CHECK(out[2].answer == Answer::expression("x^2"));
    for (const auto& p : out) CHECK(validate_instance(p).empty());
}

TEST_CASE("split answer parts that do not parse are flagged, then repaired by normalization") {
    RuleBasedSplitter rules;
    RuleBasedFormatter fmt;
    const Instance inst = make_instance("W", "(1) area? (2) volume?", Answer::expression("(1) 4π (2) x³"));
    const auto parts = split_subquestions(inst, rules);
    REQUIRE(parts.size() == 2);
    CHECK(parts[1].answer.unverified());
    const Instance fixed = normalize_formulae(parts[1], fmt);
    CHECK(fixed.answer == Answer::expression("x^{3}"));
    CHECK(validate_instance(fixed).empty());
}

// ---- formula normalization ----

TEST_CASE("normalize_formulae examples") {
    RuleBasedFormatter fmt;
    auto norm = [&](const char* ans) { return normalize_formulae(make_instance("q", "p", Answer::expression(ans)), fmt).answer; };
    CHECK(norm("π/2") == Answer::expression("\\frac{\\pi}{2}"));
    CHECK(norm("\\frac{\\pi}{2}") == Answer::expression("\\frac{\\pi}{2}"));
    CHECK(norm("x²+1") == Answer::expression("x^{2}+1"));
    CHECK(norm("2\\sqrt{3}") == Answer::expression("2\\sqrt{3}"));

    const Instance numeric = make_instance("q", "Angle ∠ABC = 30°, find x.", Answer::numeric(2));
    const Instance n = normalize_formulae(numeric, fmt);
    CHECK(n.answer == numeric.answer);
    CHECK(n.problem == "Angle \\angle ABC = 30^{\\circ}, find x.");
}

TEST_CASE("rewrites that change the value are discarded") {
    FixedFormatter wrong("\\frac{\\pi}{3}");
    const Instance inst = make_instance("q", "p", Answer::expression("π/2"));
    CHECK(normalize_formulae(inst, wrong).answer == inst.answer);

    FixedFormatter junk("\\frac{");
    const Instance bad = make_instance("q", "p", Answer::expression("5 +"));
    const Instance out = normalize_formulae(bad, junk);
    CHECK(out.answer.unverified());

    ThrowingFormatter down;
    CHECK(normalize_formulae(inst, down).answer == Answer::expression("\\frac{\\pi}{2}"));
}

TEST_CASE("rewrite table on the 40-case fixture") {
    std::ifstream in(data_path("format_fixture.tsv"));
    REQUIRE(in);
    RuleBasedFormatter fmt;
    int cases = 0;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        const std::string input = line.substr(0, tab), intended = line.substr(tab + 1);
        const std::string out = fmt.format(input);
        CAPTURE(input);
        CAPTURE(out);
        REQUIRE(parses(out));
        CHECK(parses(fmt.format(out)));
        CHECK(latex::symbolically_equal(latex::parse_latex(out), latex::parse_latex(intended)).equal);
        const Instance normalized = normalize_formulae(make_instance("q", "p", Answer::expression(input)), fmt);
        CHECK_FALSE(normalized.answer.unverified());
        CHECK(latex::symbolically_equal(latex::parse_latex(normalized.answer.expression()), latex::parse_latex(intended)).equal);
        ++cases;
    }
    CHECK(cases == 40);
}

TEST_CASE("latexify_symbols leaves ASCII alone") {
    CHECK(latexify_symbols("AB = 3, find x.") == "AB = 3, find x.");
    CHECK(latexify_symbols("θ=π") == "\\theta=\\pi");
    CHECK(latexify_symbols("r²") == "r^{2}");
}

// ---- statistics ----

TEST_CASE("Average rounds half up to one decimal") {
    CHECK(Average{10, 1}.one_decimal() == "10.0");
    CHECK(Average{1, 3}.one_decimal() == "0.3");
    CHECK(Average{1, 4}.one_decimal() == "0.3");
    CHECK(Average{1, 20}.one_decimal() == "0.1");
    CHECK(Average{149, 100}.one_decimal() == "1.5");
    CHECK(Average{0, 0}.one_decimal() == "0.0");
}

TEST_CASE("compute_stats examples") {
    CHECK(compute_stats({}) == CorpusStats{});

    const auto one = compute_stats({make_instance("a", "0123456789", Answer::choice('A'))});
    CHECK(one.total == 1);
    CHECK(one.max_question_length == 10);
    CHECK(one.avg_question_length.one_decimal() == "10.0");

    const CorpusStats s = compute_stats(stats_fixture());
    CHECK(s.total == 5);
    CHECK(s.expression == 2);
    CHECK(s.numeric == 2);
    CHECK(s.multiple_choice == 1);
    CHECK(s.plane == 3);
    CHECK(s.solid == 1);
    CHECK(s.unknown_kind == 1);
    CHECK(s.max_question_length == 19);
    CHECK(s.avg_question_length.sum == 53);
    CHECK(s.avg_question_length.one_decimal() == "10.6");
    CHECK(s.max_answer_length == 13);
    CHECK(s.avg_answer_length.sum == 24);
    CHECK(s.avg_answer_length.one_decimal() == "4.8");
    CHECK(s.max_image_count == 3);
    CHECK(s.avg_image_count.one_decimal() == "1.4");

    const auto j = nlohmann::json::parse(corpus_stats_json(s));
    CHECK(j["Total Number"] == 5);
    CHECK(j["Max and Avg question length"] == "19 / 10.6");
    CHECK(j["Max and Avg image numbers"] == "3 / 1.4");
    CHECK(j["length_unit"] == "characters");
}

TEST_CASE("utf8_length counts code points") {
    CHECK(utf8_length("") == 0);
    CHECK(utf8_length("abc") == 3);
    CHECK(utf8_length("∠π²") == 3);
}

// ---- hashing ----

TEST_CASE("dhash of an all-black image is zero") {
    CHECK(dhash(blank(8, 8, 0)) == 0);
    CHECK(dhash(blank(8, 8, 0)) == dhash_oracle(blank(8, 8, 0)));
    CHECK(phash(encode_ppm(blank(8, 8, 0))) == 0);
}

TEST_CASE("byte-identical copies hash equally") {
    std::mt19937_64 rng(1);
    const std::string bytes = encode_ppm(diagram(rng));
    const std::string copy = bytes;
    CHECK(phash(bytes) == phash(copy));
    CHECK(hamming_distance(phash(bytes), phash(copy)) == 0);
    CHECK_THROWS_AS(phash("not an image"), DecodeError);
}

TEST_CASE("dhash agrees with the brute-force oracle") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 50; ++i) {
        const RgbImage img = diagram(rng);
        CHECK(dhash(img) == dhash_oracle(img));
    }
    for (int w = 1; w <= 20; ++w)
        for (int h = 1; h <= 20; h += 3) {
            RgbImage img = blank(w, h, 0);
            for (auto& b : img.pixels) b = static_cast<std::uint8_t>(rng());
            CAPTURE(w);
            CAPTURE(h);
            CHECK(dhash(img) == dhash_oracle(img));
        }
}

TEST_CASE("one toggled pixel moves the hash by at most 4 bits") {
    std::mt19937_64 rng(3);
    int max_seen = 0;
    for (int i = 0; i < 50; ++i) {
        RgbImage img = diagram(rng);
        const std::uint64_t before = dhash_oracle(img);
        toggle(img, static_cast<int>(rng() % img.width), static_cast<int>(rng() % img.height));
        const std::uint64_t after = dhash_oracle(img);
        CHECK(dhash(img) == after);
        const int d = std::popcount(before ^ after);
        max_seen = std::max(max_seen, d);
        CHECK(d <= 4);
    }
    MESSAGE("largest distance " << max_seen);
}

TEST_CASE("dedup finds exactly the planted near-duplicates") {
    const auto corpus = planted_corpus();
    REQUIRE(corpus.size() == 100);
    const DedupResult r = dedup(corpus);
    CHECK(r.removed_ids.size() == 10);
    for (const auto& id : r.removed_ids) CHECK(id.starts_with("dup-"));
    CHECK(r.kept.size() == 90);
    CHECK(std::equal(r.kept.begin(), r.kept.end(), corpus.begin()));

    // Permuting the input changes which member of a pair survives, never how many are removed.
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto perm = corpus;
        std::shuffle(perm.begin(), perm.end(), rng);
        const DedupResult p = dedup(perm);
        CHECK(p.removed_ids.size() == 10);
        std::vector<std::string> kept_ids;
        for (const auto& inst : p.kept) kept_ids.push_back(inst.id);
        // Stable: survivors appear in input order.
        std::vector<std::string> expected;
        for (const auto& inst : perm)
            if (std::find(p.removed_ids.begin(), p.removed_ids.end(), inst.id) == p.removed_ids.end())
                expected.push_back(inst.id);
        CHECK(kept_ids == expected);
    }
}

TEST_CASE("dedup examples") {
    std::vector<Instance> c = {make_instance("a", "p", Answer::choice('A'), 0xff),
                               make_instance("b", "p", Answer::choice('A'), 0xff),
                               make_instance("c", "p", Answer::choice('A'), 0xff00ff00)};
    auto r = dedup(c);
    CHECK(r.removed_ids == std::vector<std::string>{"b"});
    CHECK(dedup(c, 0).removed_ids == std::vector<std::string>{"b"});
    // Any shared image is enough.
    c[2].images.push_back({"x.png", 0xfe});
    CHECK(dedup(c).removed_ids == std::vector<std::string>{"b", "c"});
    CHECK(dedup({}).kept.empty());
}

TEST_CASE("image decoding") {
    const RgbImage ref = read_image_file(data_path("images/gradient.ppm"));
    CHECK(ref.width == 24);
    CHECK(ref.height == 16);
    CHECK(ref.at(3, 2)[0] == 30);
    CHECK(ref.at(3, 2)[1] == 30);
    CHECK(ref.at(3, 2)[2] == 35);
    CHECK(read_image_file(data_path("images/gradient.png")).pixels == ref.pixels);
    CHECK(read_image_file(data_path("images/gradient_palette.png")).pixels ==
          read_image_file(data_path("images/gradient_palette.ppm")).pixels);
    CHECK(read_image_file(data_path("images/gradient_gray.png")).pixels ==
          read_image_file(data_path("images/gradient_gray.pgm")).pixels);

    const RgbImage jpg = read_image_file(data_path("images/gradient.jpg"));
    const RgbImage jpg_ref = read_image_file(data_path("images/gradient_jpg_decoded.ppm"));
    REQUIRE(jpg.pixels.size() == jpg_ref.pixels.size());
    int worst = 0;
    for (std::size_t i = 0; i < jpg.pixels.size(); ++i) worst = std::max(worst, std::abs(jpg.pixels[i] - jpg_ref.pixels[i]));
    CHECK(worst <= 2);
    CHECK(hamming_distance(dhash(jpg), dhash(ref)) <= 4);

    CHECK(decode_image("P3\n2 1\n255\n255 0 0  0 0 255\n").pixels == std::vector<std::uint8_t>{255, 0, 0, 0, 0, 255});
    CHECK(decode_image("P2\n1 1\n15\n15\n").pixels == std::vector<std::uint8_t>{255, 255, 255});
    CHECK_THROWS_AS(decode_image("P6\n2 2\n255\nxx"), DecodeError);
    CHECK_THROWS_AS(decode_image(std::string("\x89PNG\r\n\x1a\n garbage", 17)), DecodeError);
    CHECK_THROWS_AS(read_image_file(data_path("images/missing.png")), DecodeError);

    RgbImage small = blank(3, 2, 7);
    small.at(2, 1)[1] = 200;
    CHECK(decode_image(encode_ppm(small)).pixels == small.pixels);
}

// ---- whole pipeline ----

TEST_CASE("curation conserves counts") {
    std::mt19937_64 rng(6);
    RuleBasedSplitter splitter;
    RuleBasedFormatter formatter;
    for (int trial = 0; trial < 100; ++trial) {
        const auto input = random_corpus(rng, static_cast<int>(rng() % 30));
        const CurationResult r = run_curation(input, splitter, formatter);
        CHECK(r.report.conserved());
        CHECK(r.report.input_count == input.size());
        CHECK(r.report.output_count == r.corpus.size());
        CHECK(r.report.stats == compute_stats(r.corpus));
        CHECK(r.report.output_count == input.size() - r.report.dedup_removed + r.report.split_added);
        CHECK(validate_corpus(r.corpus).empty());
    }
}

TEST_CASE("dedup then normalize is idempotent") {
    std::mt19937_64 rng(7);
    RuleBasedFormatter formatter;
    auto pass = [&](const std::vector<Instance>& in) {
        std::vector<Instance> out;
        for (const auto& inst : dedup(in).kept) out.push_back(normalize_formulae(inst, formatter));
        return out;
    };
    for (int trial = 0; trial < 30; ++trial) {
        const auto once = pass(random_corpus(rng, 25));
        CHECK(pass(once) == once);
    }
}

TEST_CASE("a second full curation pass only drops sibling sub-questions") {
    // Parts split from one problem share its images, so dedup sees them as duplicates.
    std::mt19937_64 rng(11);
    RuleBasedSplitter splitter;
    RuleBasedFormatter formatter;
    for (int trial = 0; trial < 30; ++trial) {
        const auto once = run_curation(random_corpus(rng, 25), splitter, formatter);
        const auto twice = run_curation(once.corpus, splitter, formatter);
        CHECK(twice.report.split_added == 0);
        CHECK(twice.report.format_rewritten == 0);
        for (const auto& id : twice.report.removed_ids) CHECK(id.find('#') != std::string::npos);
    }
}

TEST_CASE("normalization preserves answer semantics") {
    std::mt19937_64 rng(8);
    RuleBasedSplitter splitter;
    RuleBasedFormatter formatter;
    const auto input = random_corpus(rng, 200);
    for (const auto& inst : input) {
        const Instance out = normalize_formulae(inst, formatter);
        if (inst.answer.kind() != AnswerKind::Expression) {
            CHECK(out.answer == inst.answer);
            continue;
        }
        // Plain-text "sqrt" is read as the function, as the formatter documents.
        std::string original = inst.answer.expression();
        if (original.starts_with("sqrt")) original = "\\" + original;
        if (parses(original) && parses(out.answer.expression()))
            CHECK(latex::symbolically_equal(latex::parse_latex(original),
                                            latex::parse_latex(out.answer.expression()))
                      .equal);
    }
}

TEST_CASE("curation is independent of thread count") {
    std::mt19937_64 rng(9);
    RuleBasedSplitter splitter;
    RuleBasedFormatter formatter;
    const auto input = random_corpus(rng, 60);
    CurationOptions opts;
    const auto a = run_curation(input, splitter, formatter, opts);
    opts.threads = 4;
    const auto b = run_curation(input, splitter, formatter, opts);
    CHECK(a.corpus == b.corpus);
    CHECK(curation_report_json(a.report) == curation_report_json(b.report));
}

TEST_CASE("images under image_root are rehashed") {
    const auto dir = std::filesystem::temp_directory_path() / "georl_curation_test";
    std::filesystem::create_directories(dir / "img");
    std::mt19937_64 rng(10);
    const RgbImage img = diagram(rng);
    for (const char* name : {"a", "b"}) std::ofstream(dir / "img" / (std::string(name) + ".png"), std::ios::binary) << encode_ppm(img);
    // Stored hashes are stale and far apart; the files are identical.
    std::vector<Instance> input = {make_instance("a", "p", Answer::choice('A'), 0), make_instance("b", "p", Answer::choice('A'), ~0ULL),
                                   make_instance("c", "p", Answer::choice('A'), 0x5555)};
    RuleBasedSplitter splitter;
    RuleBasedFormatter formatter;
    CurationOptions opts;
    opts.image_root = dir.string();
    const auto r = run_curation(input, splitter, formatter, opts);
    CHECK(r.report.removed_ids == std::vector<std::string>{"b"});
    CHECK(r.corpus[0].images[0].phash == dhash_oracle(img));
    CHECK(r.corpus[1].images[0].phash == 0x5555);  // unreadable image keeps its stored hash
    std::filesystem::remove_all(dir);
}
