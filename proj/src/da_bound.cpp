#include "georl/da_bound.hpp"

#include <algorithm>
#include <cmath>

namespace georl {

namespace {

void check_class(const FiniteSetup& setup) {
    if (setup.class_size() > kMaxHypotheses)
        throw ClassTooLarge("hypothesis class of " + std::to_string(setup.class_size()) + " exceeds " +
                            std::to_string(kMaxHypotheses));
}

// Modulo draw: portable across standard libraries, bias below 2^-50 for these n.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

// Multiples of 1/1024 summing to exactly 1.
Eigen::VectorXd dyadic_distribution(std::mt19937_64& rng, Eigen::Index n) {
    std::vector<std::uint64_t> cuts(static_cast<std::size_t>(n - 1));
    for (auto& c : cuts) c = draw(rng, 1025);
    std::sort(cuts.begin(), cuts.end());
    Eigen::VectorXd p(n);
    std::uint64_t prev = 0;
    for (Eigen::Index i = 0; i < n - 1; ++i) {
        p[i] = static_cast<double>(cuts[static_cast<std::size_t>(i)] - prev) / 1024.0;
        prev = cuts[static_cast<std::size_t>(i)];
    }
    p[n - 1] = static_cast<double>(1024 - prev) / 1024.0;
    return p;
}

Labeling random_labeling(std::mt19937_64& rng, Eigen::Index n) {
    Labeling l(n);
    for (Eigen::Index i = 0; i < n; ++i) l[i] = draw(rng, 2) == 1;
    return l;
}

}  // namespace

std::vector<std::string> FiniteSetup::validate() const {
    std::vector<std::string> out;
    auto check_dist = [&](const Eigen::VectorXd& d, const char* name) {
        if (d.size() != space_size()) out.push_back(std::string(name) + ": length differs from the space");
        if ((d.array() < 0.0).any() || !d.allFinite()) out.push_back(std::string(name) + ": negative or non-finite mass");
        if (std::abs(d.sum() - 1.0) > 1e-12) out.push_back(std::string(name) + ": does not sum to 1");
    };
    if (space_size() == 0) out.push_back("source: empty sample space");
    check_dist(source, "source");
    check_dist(target, "target");
    if (hypotheses.rows() == 0) out.push_back("hypotheses: empty class");
    if (hypotheses.cols() != space_size()) out.push_back("hypotheses: labelings do not cover the space");
    if (truth.size() != space_size()) out.push_back("truth: labeling does not cover the space");
    return out;
}

Eigen::MatrixXd disagreement_matrix(const LabelMatrix& hypotheses, const Eigen::VectorXd& dist) {
    // [h != g] = h + g - 2 h g for 0/1 labels.
    const Eigen::MatrixXd h = hypotheses.cast<double>().matrix();
    const Eigen::VectorXd mass = h * dist;
    Eigen::MatrixXd d = -2.0 * h * dist.asDiagonal() * h.transpose();
    d.colwise() += mass;
    d.rowwise() += mass.transpose();
    return d;
}

double hdh_distance(const FiniteSetup& setup) {
    check_class(setup);
    const Eigen::MatrixXd gap =
        disagreement_matrix(setup.hypotheses, setup.source) - disagreement_matrix(setup.hypotheses, setup.target);
    return 2.0 * gap.cwiseAbs().maxCoeff();
}

BoundReport verify_bound(const FiniteSetup& setup) {
    check_class(setup);
    BoundReport report;
    report.hdh = hdh_distance(setup);
    const LabelMatrix truth = setup.truth.transpose().replicate(setup.class_size(), 1);
    const Eigen::MatrixXd wrong = (setup.hypotheses != truth).cast<double>().matrix();
    const Eigen::VectorXd err_s = wrong * setup.source;
    const Eigen::VectorXd err_t = wrong * setup.target;
    report.ideal_error = (err_s + err_t).minCoeff();
    const Eigen::VectorXd slack = (err_s.array() + report.ideal_error + 0.5 * report.hdh - err_t.array()).matrix();
    report.worst_slack = slack.minCoeff(&report.worst_hypothesis);
    report.holds = report.worst_slack >= 0.0;
    return report;
}

FiniteSetup random_setup(std::mt19937_64& rng, int max_space, int max_class) {
    FiniteSetup s;
    const auto n = static_cast<Eigen::Index>(2 + draw(rng, static_cast<std::uint64_t>(max_space - 1)));
    const auto k = static_cast<Eigen::Index>(1 + draw(rng, static_cast<std::uint64_t>(max_class)));
    s.source = dyadic_distribution(rng, n);
    s.target = dyadic_distribution(rng, n);
    s.truth = random_labeling(rng, n);
    s.hypotheses.resize(k, n);
    for (Eigen::Index r = 0; r < k; ++r) s.hypotheses.row(r) = random_labeling(rng, n).transpose();
    // Realizable half of the time.
    if (draw(rng, 2) == 1) s.hypotheses.row(static_cast<Eigen::Index>(draw(rng, static_cast<std::uint64_t>(k)))) =
        s.truth.transpose();
    return s;
}

}  // namespace georl
