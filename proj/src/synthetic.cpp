#include "hetlink/synthetic.hpp"

#include "hetlink/errors.hpp"
#include "hetlink/rng.hpp"
#include "hetlink/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

namespace hetlink {
namespace {

constexpr std::array kConditionHeads = {"Pulmonary", "Cardiac",  "Renal",      "Hepatic",   "Gastric",   "Neural",
                                        "Dermal",    "Ocular",   "Vascular",   "Thyroid",   "Pancreatic", "Bronchial",
                                        "Colonic",   "Spinal",   "Arterial",   "Lymphatic"};
constexpr std::array kConditionTails = {"Fibrosis", "Hypertension", "Failure",   "Carcinoma", "Inflammation", "Stenosis",
                                        "Insufficiency", "Neoplasm", "Infection", "Sclerosis", "Dystrophy", "Syndrome",
                                        "Embolism", "Ulcer",        "Lesion",    "Disorder"};
constexpr std::array kDrugHeads = {"Pirfenidone",  "Nintedanib", "Ambrisentan",  "Bosentan",   "Sildenafil",
                                   "Treprostinil", "Tiotropium", "Salmeterol",   "Budesonide", "Montelukast",
                                   "Omalizumab",   "Mepolizumab", "Roflumilast", "Azithromycin", "Prednisolone",
                                   "Acetylcysteine"};
constexpr std::array kDrugTails = {"Oral",    "Inhaled", "Intravenous", "Subcutaneous", "Tablet",   "Capsule",
                                   "Extended", "Nebulised", "Depot",     "Topical",      "Sublingual", "Spray",
                                   "Solution", "Suspension", "Patch",    "Infusion"};
constexpr std::array kAdverseEvents = {
    "AE_AST_ALT",     "AE_COPD",        "AE_GORD",      "AE_LRTI",          "AE_URTI",      "AE_UTI",
    "AE_abdominal_pain", "AE_alopecia", "AE_anaemia",   "AE_anorexia",      "AE_asthma",    "AE_back_pain",
    "AE_bleeding",    "AE_chest_pain",  "AE_chills",    "AE_constipation",  "AE_cough",     "AE_dehydration",
    "AE_diarrhoea",   "AE_dizziness",   "AE_drowsiness", "AE_dyspepsia",    "AE_dyspnoea",  "AE_embolism",
    "AE_fatigue",     "AE_fibrillation", "AE_headache", "AE_hypertension",  "AE_nausea",    "AE_thrombosis"};

template <std::size_t N>
std::vector<std::string> token_pool(const std::array<const char*, N>& base, std::size_t size, const char* extra) {
    std::vector<std::string> pool;
    for (std::size_t i = 0; i < size; ++i) {
        pool.push_back(i < N ? std::string(base[i]) : std::string(extra) + std::to_string(i - N + 1));
    }
    return pool;
}

/// n distinct "head tail" phrases from pools just large enough that most
/// tokens are shared by several phrases.
template <std::size_t H, std::size_t T>
std::vector<std::string> two_token_names(int n, const std::array<const char*, H>& heads,
                                         const std::array<const char*, T>& tails, const char* extra_head,
                                         const char* extra_tail, Rng& rng) {
    auto side = static_cast<std::size_t>(std::ceil(std::sqrt(2.0 * n)));
    side = std::max<std::size_t>(side, 2);
    auto hp = token_pool(heads, side, extra_head);
    auto tp = token_pool(tails, side, extra_tail);
    std::vector<std::string> combos;
    for (const auto& h : hp)
        for (const auto& t : tp) combos.push_back(h + " " + t);
    std::shuffle(combos.begin(), combos.end(), rng);
    combos.resize(static_cast<std::size_t>(n));
    return combos;
}

std::vector<std::vector<double>> draw_latents(int count, int dim, double mean, Rng& rng) {
    std::normal_distribution<double> normal(mean, 1.0);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(count), std::vector<double>(dim));
    for (auto& v : out)
        for (auto& x : v) x = normal(rng);
    return out;
}

/// k distinct indices from [0, population), each drawn from `area_pool` with
/// probability `affinity` and from the whole population otherwise.
std::vector<int> area_sample(int population, int k, int exclude, const std::vector<int>& area_pool, double affinity,
                             Rng& rng) {
    k = std::min(k, population - (exclude >= 0 ? 1 : 0));
    std::vector<int> out;
    while (static_cast<int>(out.size()) < k) {
        int pick = !area_pool.empty() && uniform01(rng) < affinity
                       ? area_pool[uniform_index(rng, area_pool.size())]
                       : static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(population)));
        if (pick == exclude || std::find(out.begin(), out.end(), pick) != out.end()) continue;
        out.push_back(pick);
    }
    return out;
}

/// Item i belongs to area i mod n_areas.
std::vector<std::vector<int>> area_pools(int items, int n_areas) {
    std::vector<std::vector<int>> pools(static_cast<std::size_t>(n_areas));
    for (int i = 0; i < items; ++i) pools[static_cast<std::size_t>(i % n_areas)].push_back(i);
    return pools;
}

} // namespace

SyntheticConfig SyntheticConfig::from_config(const Config& cfg) {
    SyntheticConfig c;
    c.n_trials = static_cast<int>(cfg.get_int("n_trials", c.n_trials));
    c.n_conditions = static_cast<int>(cfg.get_int("n_conditions", c.n_conditions));
    c.n_drugs = static_cast<int>(cfg.get_int("n_drugs", c.n_drugs));
    c.n_adverse_events = static_cast<int>(cfg.get_int("n_adverse_events", c.n_adverse_events));
    c.latent_dim = static_cast<int>(cfg.get_int("latent_dim", c.latent_dim));
    c.noise = cfg.get_double("noise", c.noise);
    c.latent_mean = cfg.get_double("latent_mean", c.latent_mean);
    c.signal_scale = cfg.get_double("signal_scale", c.signal_scale);
    c.nonzero_rate = cfg.get_double("nonzero_rate", c.nonzero_rate);
    c.max_mesh_terms = static_cast<int>(cfg.get_int("max_mesh_terms", c.max_mesh_terms));
    c.max_drugs = static_cast<int>(cfg.get_int("max_drugs", c.max_drugs));
    c.n_areas = static_cast<int>(cfg.get_int("n_areas", c.n_areas));
    c.area_affinity = cfg.get_double("area_affinity", c.area_affinity);
    c.area_coherence = cfg.get_double("area_coherence", c.area_coherence);
    c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(c.seed)));
    c.validate();
    return c;
}

Config SyntheticConfig::to_config() const {
    Config cfg;
    cfg.set("n_trials", std::to_string(n_trials));
    cfg.set("n_conditions", std::to_string(n_conditions));
    cfg.set("n_drugs", std::to_string(n_drugs));
    cfg.set("n_adverse_events", std::to_string(n_adverse_events));
    cfg.set("latent_dim", std::to_string(latent_dim));
    cfg.set("noise", format_double(noise));
    cfg.set("latent_mean", format_double(latent_mean));
    cfg.set("signal_scale", format_double(signal_scale));
    cfg.set("nonzero_rate", format_double(nonzero_rate));
    cfg.set("max_mesh_terms", std::to_string(max_mesh_terms));
    cfg.set("max_drugs", std::to_string(max_drugs));
    cfg.set("n_areas", std::to_string(n_areas));
    cfg.set("area_affinity", format_double(area_affinity));
    cfg.set("area_coherence", format_double(area_coherence));
    cfg.set("seed", std::to_string(seed));
    return cfg;
}

void SyntheticConfig::validate() const {
    if (n_trials <= 0 || n_conditions <= 0 || n_drugs <= 0 || n_adverse_events <= 0 || latent_dim <= 0) {
        throw ConfigError("synthetic counts (trials, conditions, drugs, adverse events, latent_dim) must be positive");
    }
    if (max_drugs <= 0 || max_mesh_terms < 0) throw ConfigError("max_drugs must be positive, max_mesh_terms >= 0");
    if (n_areas <= 0) throw ConfigError("n_areas must be positive");
    if (!(area_affinity >= 0.0 && area_affinity <= 1.0)) throw ConfigError("area_affinity must lie in [0,1]");
    if (!(area_coherence >= 0.0 && area_coherence <= 1.0)) throw ConfigError("area_coherence must lie in [0,1]");
    if (!(noise >= 0.0)) throw ConfigError("noise must be >= 0");
    if (!(nonzero_rate > 0.0 && nonzero_rate < 1.0)) throw ConfigError("nonzero_rate must lie in (0,1)");
}

std::vector<TrialRecord> generate_synthetic(const SyntheticConfig& config) {
    config.validate();
    auto rng = make_rng(config.seed, {0x5157});

    auto conditions = two_token_names(config.n_conditions, kConditionHeads, kConditionTails, "Region", "Type", rng);
    auto drugs = two_token_names(config.n_drugs, kDrugHeads, kDrugTails, "Compound", "Form", rng);
    std::vector<std::string> aes;
    for (int i = 0; i < config.n_adverse_events; ++i) {
        aes.push_back(static_cast<std::size_t>(i) < kAdverseEvents.size() ? std::string(kAdverseEvents[i])
                                                                           : "AE_event_" + std::to_string(i + 1));
    }

    const int k = config.latent_dim;
    auto cond_latent = draw_latents(config.n_conditions, k, config.latent_mean, rng);
    auto drug_latent = draw_latents(config.n_drugs, k, config.latent_mean, rng);
    auto ae_latent = draw_latents(config.n_adverse_events, k, config.latent_mean, rng);
    if (config.area_coherence > 0.0) {
        // Shrink items toward a shared area direction; marginals stay N(mean, 1).
        auto centers = draw_latents(config.n_areas, k, 0.0, rng);
        const double a = std::sqrt(config.area_coherence);
        const double b = std::sqrt(1.0 - config.area_coherence);
        auto blend = [&](std::vector<std::vector<double>>& items) {
            for (std::size_t i = 0; i < items.size(); ++i) {
                const auto& c = centers[i % static_cast<std::size_t>(config.n_areas)];
                for (int d = 0; d < k; ++d) {
                    items[i][d] = config.latent_mean + a * c[d] + b * (items[i][d] - config.latent_mean);
                }
            }
        };
        blend(cond_latent);
        blend(drug_latent);
    }

    const auto cond_areas = area_pools(config.n_conditions, config.n_areas);
    const auto drug_areas = area_pools(config.n_drugs, config.n_areas);

    const auto n = static_cast<std::size_t>(config.n_trials);
    const auto m = static_cast<std::size_t>(config.n_adverse_events);
    std::vector<TrialRecord> records(n);
    std::vector<double> logits(n * m);
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool pure_noise = std::isinf(config.noise);

    for (std::size_t i = 0; i < n; ++i) {
        auto& rec = records[i];
        char id[32];
        std::snprintf(id, sizeof id, "NCT%08zu", 1000 + i);
        rec.nct_id = id;
        rec.trial_id = std::to_string(100000 + i);

        const auto area = uniform_index(rng, static_cast<std::uint64_t>(config.n_areas));
        const auto& cond_pool = cond_areas[area];
        const auto& drug_pool = drug_areas[area];
        int disease = area_sample(config.n_conditions, 1, -1, cond_pool, config.area_affinity, rng).front();
        auto mesh_count = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(config.max_mesh_terms) + 1));
        auto mesh = area_sample(config.n_conditions, mesh_count, disease, cond_pool, config.area_affinity, rng);
        auto drug_count = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(config.max_drugs)));
        auto used_drugs = area_sample(config.n_drugs, drug_count, -1, drug_pool, config.area_affinity, rng);

        std::vector<double> latent(static_cast<std::size_t>(k), 0.0);
        int parts = 0;
        auto accumulate = [&](const std::vector<double>& v) {
            for (int d = 0; d < k; ++d) latent[d] += v[d];
            ++parts;
        };
        rec.diseases.push_back(conditions[disease]);
        accumulate(cond_latent[disease]);
        for (int c : mesh) {
            rec.mesh_terms.push_back(conditions[c]);
            accumulate(cond_latent[c]);
        }
        for (int d : used_drugs) {
            rec.drugs.push_back(drugs[d]);
            accumulate(drug_latent[d]);
        }
        for (auto& x : latent) x /= parts;

        for (std::size_t j = 0; j < m; ++j) {
            double dot = 0.0;
            for (int d = 0; d < k; ++d) dot += latent[d] * ae_latent[j][d];
            double eps = normal(rng);
            logits[i * m + j] = pure_noise ? eps : config.signal_scale * dot + config.noise * eps;
        }
    }

    auto positives = static_cast<std::size_t>(std::llround(config.nonzero_rate * static_cast<double>(n * m)));
    positives = std::clamp<std::size_t>(positives, 1, n * m);
    auto sorted = logits;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(positives - 1), sorted.end(),
                     std::greater<>());
    const double threshold = sorted[positives - 1];

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double z = logits[i * m + j];
            double frac = 0.0;
            if (z >= threshold) {
                frac = 0.5 / (1.0 + std::exp(-z));
                frac = std::max(std::round(frac * 1e9) / 1e9, 1e-9);
            }
            records[i].adverse_events[aes[j]] = frac;
        }
    }
    return records;
}

} // namespace hetlink
