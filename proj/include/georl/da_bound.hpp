#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace georl {

class ClassTooLarge : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr Eigen::Index kMaxHypotheses = 2000;

using Labeling = Eigen::Array<bool, Eigen::Dynamic, 1>;
/// One hypothesis per row, one point of the space per column.
using LabelMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Finite space of points with source and target distributions, a hypothesis
/// class and the true labeling.
struct FiniteSetup {
    Eigen::VectorXd source;
    Eigen::VectorXd target;
    LabelMatrix hypotheses;
    Labeling truth;

    Eigen::Index space_size() const { return source.size(); }
    Eigen::Index class_size() const { return hypotheses.rows(); }

    /// Empty iff distributions are non-negative, sum to 1 within 1e-12 and all
    /// labelings cover the whole space.
    std::vector<std::string> validate() const;
};

/// Pr_{x ~ dist}[h(x) != h'(x)].
template <class DerivedH, class DerivedG>
double disagreement(const Eigen::ArrayBase<DerivedH>& h, const Eigen::ArrayBase<DerivedG>& g, const Eigen::VectorXd& dist) {
    return (h != g).template cast<double>().matrix().dot(dist);
}

/// |H| x |H| matrix of disagreement masses under `dist`.
Eigen::MatrixXd disagreement_matrix(const LabelMatrix& hypotheses, const Eigen::VectorXd& dist);

/// 2 * max over pairs of |eps_S(h, h') - eps_T(h, h')|.
double hdh_distance(const FiniteSetup& setup);

struct BoundReport {
    bool holds = false;
    double worst_slack = 0.0;
    Eigen::Index worst_hypothesis = 0;
    double hdh = 0.0;
    double ideal_error = 0.0;  // min over h* of eps_S(h*) + eps_T(h*)
};

/// Checks eps_T(h) <= eps_S(h) + eps_ideal + d/2 for every h in the class.
BoundReport verify_bound(const FiniteSetup& setup);

/// Random setup with space size in [2, max_space], class size in [1, max_class]
/// and probabilities that are multiples of 1/1024, so every mass sum is exact.
FiniteSetup random_setup(std::mt19937_64& rng, int max_space = 6, int max_class = 64);

}  // namespace georl
