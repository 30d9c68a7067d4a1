#pragma once

#include <vector>

#include "mlmcjd/path.hpp"

namespace mlmcjd {

struct ThinningEvent {
    double time = 0.0;
    double uniform = 0.0;
    double p_fine = 0.0;
    double p_coarse = 0.0;
    bool accepted_fine = false;
    bool accepted_coarse = false;
};

struct LikelihoodWeights {
    double fine_weight = 1.0;
    double coarse_weight = 1.0;
};

/// Radon-Nikodym factor for one candidate when both paths accept with
/// probability 1/2: 2p if accepted, 2(1 - p) otherwise.
double thinning_factor(double p, bool accepted);

/// Acceptance probability lambda(s, t) / lambda_sup, checked to lie in [0, 1].
double acceptance_probability(const ModelSpec& model, double s_minus, double t);

struct ThinningPaths {
    CoupledPaths paths;
    LikelihoodWeights weights;
    std::vector<ThinningEvent> events;
};

/// Coupled sample with Poisson(lambda_sup) candidates shared by both paths.
/// With change_of_measure both paths accept iff U < 1/2 and carry the
/// products of thinning_factor; otherwise each accepts iff U < its own p.
void thinning_coupled(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                      bool change_of_measure, ThinningPaths& out);
ThinningPaths thinning_coupled(const ModelSpec& model, int level, PathStreams& streams,
                               BridgeNeeds needs, bool change_of_measure);

/// Uncoupled thinning sample; the weight lands in path.likelihood_weight.
void thinning_single(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                     bool change_of_measure, SinglePath& out);

/// Running state of the cumulative-intensity jump generator.
struct CumulativeState {
    double lambda_running = 0.0;
    double e_target = 0.0;
    std::vector<double> jump_times;
};

struct CumulativePaths {
    CoupledPaths paths;
    LikelihoodWeights weights;
};

/// Path whose jump times are generated while stepping: a jump fires when
/// the left-endpoint quadrature of the intensity crosses the running sum
/// of unit exponentials. Fills the grid and schedule it creates.
void cumulative_single(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                       SinglePath& out, CumulativeState* state = nullptr);

/// Fine path by cumulative_single; coarse path on the coarse grid sharing
/// the fine jump times, weighted by
///   exp(sum_i (lambda^f_i - lambda^c_i) h_i) * prod_jumps lambda^c / lambda^f.
void cumulative_coupled(const ModelSpec& model, int level, PathStreams& streams, BridgeNeeds needs,
                        CumulativePaths& out);
CumulativePaths cumulative_coupled(const ModelSpec& model, int level, PathStreams& streams,
                                   BridgeNeeds needs = {});

/// Likelihood ratio of the coarse intensity to the fine one along a coupled
/// pair sharing jump times. Throws NumericalError on a zero fine intensity
/// at a jump step.
double cumulative_weight(const ModelSpec& model, const CoupledPaths& paths);

}  // namespace mlmcjd
