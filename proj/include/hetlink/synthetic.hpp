#pragma once

#include "hetlink/config.hpp"
#include "hetlink/records.hpp"

#include <cstdint>
#include <vector>

namespace hetlink {

/// Planted-signal generator for trial-shaped datasets.
///
/// Every condition, drug and adverse event draws a latent vector with
/// coordinates N(latent_mean, 1). A trial's latent is the mean over its
/// conditions and drugs; its AE logit is signal_scale * <trial, ae> plus
/// Gaussian noise. The top `nonzero_rate` fraction of all logits get a
/// nonzero dropout fraction (the logistic of the logit, halved). With
/// noise = inf the logit is pure noise and incidence carries no signal.
///
/// Items are split round-robin into n_areas therapeutic areas. Each trial
/// picks an area and draws each of its conditions and drugs from that area
/// with probability area_affinity, so trials in one area share items.
/// With area_coherence > 0 the condition and drug latents of one area also
/// lean toward a common direction.
///
/// Condition and drug names are two-token phrases over small token pools so
/// keyword extraction yields nontrivial keyword/specific splits.
struct SyntheticConfig {
    int n_trials = 300;
    int n_conditions = 40;
    int n_drugs = 30;
    int n_adverse_events = 20;
    int latent_dim = 8;
    double noise = 0.5;
    double latent_mean = 0.0;
    double signal_scale = 1.0;
    double nonzero_rate = 0.3;
    int max_mesh_terms = 2;
    int max_drugs = 2;
    int n_areas = 8;
    double area_affinity = 0.9;
    double area_coherence = 0.8; // share of each item latent's variance owed to its area
    std::uint64_t seed = 1;

    /// Reads keys n_trials, n_conditions, ... (same names as the fields).
    static SyntheticConfig from_config(const Config& cfg);
    Config to_config() const;
    void validate() const;
};

std::vector<TrialRecord> generate_synthetic(const SyntheticConfig& config);

} // namespace hetlink
