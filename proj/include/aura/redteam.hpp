#pragma once
// Attacker-side sanitization and detection for stealth/robustness
// evaluation. Three detectors and one purge, all provenance-blind: they see
// only what a real attacker would (graph structure, labels, an embedding
// model they trained themselves). Ground-truth comparison lives in the
// harness (score_report), never in the attack.
//
//   kge_purge          drop triples scoring below a quantile threshold
//   structural_detect  ego-net power-law outliers (node count vs edge count)
//   semantic_detect    per-relation embedding-score outliers
//   hybrid_detect      union of both filtered by a combined z-score

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "aura/error.hpp"
#include "aura/kg.hpp"
#include "aura/kge.hpp"
#include "aura/text_embed.hpp"

namespace aura {

struct SanitizationReport {
    std::string attack;  // kge_purge | structural | semantic | hybrid
    std::set<std::string> flagged_or_removed;  // triple ids and/or entity ids
    double retain_rate = 1.0;     // harness-computed; attacks leave defaults
    double detection_rate = 0.0;  // harness-computed
    double threshold_used = 0.0;
    std::string note;
    std::vector<std::string> warnings;
};

// Ground-truth id sets for the harness side of the evaluation.
inline std::set<std::string> adulterant_triple_ids(const KnowledgeGraph& g) {
    std::set<std::string> out;
    for (const Triple& t : g.triples())
        if (g.triple_provenance(t) == Provenance::adulterant) out.insert(triple_id(t));
    return out;
}

inline std::set<std::string> adulterant_node_ids(const KnowledgeGraph& g) {
    std::set<std::string> out;
    for (const EntityId& e : g.entities())
        if (g.entity_provenance(e) == Provenance::adulterant) out.insert(e);
    return out;
}

// Fills the rate fields against ground truth. Flagged elements count as
// removed for retain-rate purposes (an attacker acts on what it flags).
// Vacuous ground truth leaves the defaults (nothing to detect or retain).
inline void score_report(SanitizationReport& report, const std::set<std::string>& adulterants) {
    if (adulterants.empty()) return;
    std::size_t hit = 0;
    for (const std::string& id : adulterants)
        if (report.flagged_or_removed.count(id)) ++hit;
    report.detection_rate = (double)hit / (double)adulterants.size();
    report.retain_rate = 1.0 - report.detection_rate;
}

namespace detail {

// Scores triples under a model that may not cover the graph vocabulary (the
// attacker's model may predate injected entities): an unknown entity borrows
// the vector of the model entity with the nearest label embedding (cosine,
// ties to the lexicographically smaller id).
class ResolvedScorer {
public:
    explicit ResolvedScorer(const EmbeddingModel& model) : model_(&model) {}

    double operator()(const Triple& t) const {
        auto h = vec(t.head);
        auto r = model_->relation_vec(t.relation);
        auto tl = vec(t.tail);
        double s = 0.0;
        for (int i = 0; i < model_->dim(); ++i) {
            double d = (double)h[i] + r[i] - tl[i];
            s += d * d;
        }
        return -std::sqrt(s);
    }

private:
    std::span<const float> vec(const EntityId& e) const {
        if (model_->has_entity(e)) return model_->entity_vec(e);
        auto it = resolved_.find(e);
        if (it == resolved_.end()) it = resolved_.emplace(e, nearest(e)).first;
        return model_->entity_vec(it->second);
    }

    EntityId nearest(const EntityId& e) const {
        if (label_embeds_.empty()) {
            label_embeds_.reserve(model_->entity_ids().size());
            for (const EntityId& id : model_->entity_ids())
                label_embeds_.push_back(embed_text(id));
        }
        auto q = embed_text(e);
        std::size_t best = 0;
        double best_sim = -2.0;
        for (std::size_t i = 0; i < label_embeds_.size(); ++i) {
            double sim = cosine(q, label_embeds_[i]);
            if (sim > best_sim) {  // ids sorted: strict > keeps the smaller id
                best_sim = sim;
                best = i;
            }
        }
        return model_->entity_ids()[best];
    }

    const EmbeddingModel* model_;
    mutable std::map<EntityId, EntityId> resolved_;
    mutable std::vector<std::vector<float>> label_embeds_;
};

struct StructuralFit {
    std::map<EntityId, double> z;  // |internally studentized residual|
    bool ok = false;
    std::string warning;
};

// Ego-net features per node (ego = node + neighbors; edge count with
// multiplicity), least-squares fit of log(edges) on log(nodes), internally
// studentized residuals.
inline StructuralFit structural_fit(const KnowledgeGraph& g) {
    StructuralFit fit;
    if (g.num_entities() < 10) {
        fit.warning = "fewer than 10 nodes; degree fit unstable, nothing flagged";
        return fit;
    }
    std::vector<EntityId> ids;
    std::vector<double> xs, ys;
    for (const EntityId& v : g.entities()) {
        auto incident = g.incident(v);
        if (incident.empty()) continue;  // isolated: no ego edges, excluded
        std::set<EntityId> ego{v};
        for (std::uint32_t idx : incident) {
            const Triple& t = g.triples()[idx];
            ego.insert(t.head);
            ego.insert(t.tail);
        }
        std::set<std::uint32_t> ego_edges;
        for (const EntityId& u : ego)
            for (std::uint32_t idx : g.incident(u)) {
                const Triple& t = g.triples()[idx];
                if (ego.count(t.head) && ego.count(t.tail)) ego_edges.insert(idx);
            }
        ids.push_back(v);
        xs.push_back(std::log((double)ego.size()));
        ys.push_back(std::log((double)ego_edges.size()));
    }
    std::size_t m = ids.size();
    if (m < 3) {
        fit.warning = "fewer than 3 non-isolated nodes; nothing flagged";
        return fit;
    }
    double xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        xbar += xs[i];
        ybar += ys[i];
    }
    xbar /= (double)m;
    ybar /= (double)m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
    }
    const double eps = 1e-12;
    double b = sxx > eps ? sxy / sxx : 0.0;  // degenerate x: flat fit
    double a = ybar - b * xbar;
    double rss = 0.0;
    std::vector<double> resid(m);
    for (std::size_t i = 0; i < m; ++i) {
        resid[i] = ys[i] - (a + b * xs[i]);
        rss += resid[i] * resid[i];
    }
    double s2 = rss / (double)(m - 2);
    fit.ok = true;
    for (std::size_t i = 0; i < m; ++i) {
        if (s2 < 1e-18) {
            fit.z[ids[i]] = 0.0;  // perfect fit: no outliers
            continue;
        }
        double h = 1.0 / (double)m + (sxx > eps ? (xs[i] - xbar) * (xs[i] - xbar) / sxx : 0.0);
        double denom = s2 * (1.0 - h);
        fit.z[ids[i]] = denom > eps ? std::abs(resid[i]) / std::sqrt(denom) : 0.0;
    }
    return fit;
}

// Low-side z per triple id from per-relation score statistics (population
// stddev). Relations with fewer than min_relation_triples are skipped.
inline std::map<std::string, double> semantic_z(const KnowledgeGraph& g,
                                                const ResolvedScorer& scorer,
                                                std::size_t min_relation_triples) {
    std::map<RelationId, std::vector<const Triple*>> by_rel;
    for (const Triple& t : g.triples()) by_rel[t.relation].push_back(&t);
    std::map<std::string, double> z;
    for (const auto& [rel, ts] : by_rel) {
        if (ts.size() < min_relation_triples) continue;
        std::vector<double> scores(ts.size());
        double mean = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            scores[i] = scorer(*ts[i]);
            mean += scores[i];
        }
        mean /= (double)ts.size();
        double var = 0.0;
        for (double s : scores) var += (s - mean) * (s - mean);
        var /= (double)ts.size();
        double sd = std::sqrt(var);
        for (std::size_t i = 0; i < ts.size(); ++i)
            z[triple_id(*ts[i])] = sd > 1e-12 ? std::max(0.0, (mean - scores[i]) / sd) : 0.0;
    }
    return z;
}

}  // namespace detail

struct PurgeResult {
    KnowledgeGraph graph;
    SanitizationReport report;
};

// Removes every triple whose embedding score falls strictly below the
// quantile-th score over all triples. quantile 0 removes nothing.
inline PurgeResult kge_purge(const KnowledgeGraph& graph, const EmbeddingModel& model,
                             double quantile) {
    if (!(quantile >= 0.0 && quantile < 1.0))
        throw invalid_input("quantile must satisfy 0 <= q < 1");
    PurgeResult out;
    out.report.attack = "kge_purge";
    if (graph.num_triples() == 0) {
        out.graph = graph;
        return out;
    }
    detail::ResolvedScorer scorer(model);
    std::vector<double> scores;
    scores.reserve(graph.num_triples());
    for (const Triple& t : graph.triples()) scores.push_back(scorer(t));
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    double threshold = sorted[(std::size_t)std::floor(quantile * (double)sorted.size())];
    out.report.threshold_used = threshold;

    GraphBuilder b;
    for (const EntityId& e : graph.entities()) b.add_entity(e, graph.entity_provenance(e));
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const Triple& t = graph.triples()[i];
        if (scores[i] < threshold) {
            out.report.flagged_or_removed.insert(triple_id(t));
        } else {
            b.add_triple(t, graph.triple_provenance(t));
        }
    }
    out.graph = b.build();
    return out;
}

// Flags nodes whose ego-net deviates from the log-log degree fit by more
// than `cutoff` studentized-residual units.
inline SanitizationReport structural_detect(const KnowledgeGraph& graph, double cutoff = 3.0) {
    SanitizationReport r;
    r.attack = "structural";
    r.threshold_used = cutoff;
    auto fit = detail::structural_fit(graph);
    if (!fit.ok) {
        r.warnings.push_back(fit.warning);
        return r;
    }
    for (const auto& [v, z] : fit.z)
        if (z > cutoff) r.flagged_or_removed.insert(v);
    return r;
}

// Flags triples scoring below mean - sigmas*stddev of their relation's score
// distribution. A z-score screen is one of several defensible semantic
// checks, so reports carry a note naming the rule in use.
inline SanitizationReport semantic_detect(const KnowledgeGraph& graph,
                                          const EmbeddingModel& model, double sigmas = 2.0,
                                          std::size_t min_relation_triples = 5) {
    SanitizationReport r;
    r.attack = "semantic";
    r.threshold_used = sigmas;
    r.note = "embedding-consistency stand-in (per-relation score outliers)";
    detail::ResolvedScorer scorer(model);
    for (const auto& [id, z] : detail::semantic_z(graph, scorer, min_relation_triples))
        if (z > sigmas) r.flagged_or_removed.insert(id);
    return r;
}

// Union of the two detectors, kept only when the combined z-score clears
// `combined_cutoff`. A node borrows its worst incident-triple semantic z; a
// triple borrows its worst endpoint structural z; combination is Euclidean.
inline SanitizationReport hybrid_detect(const KnowledgeGraph& graph, const EmbeddingModel& model,
                                        double combined_cutoff = 3.5,
                                        double structural_cutoff = 3.0, double sigmas = 2.0,
                                        std::size_t min_relation_triples = 5) {
    SanitizationReport r;
    r.attack = "hybrid";
    r.threshold_used = combined_cutoff;
    r.note = "embedding-consistency stand-in (per-relation score outliers)";
    auto fit = detail::structural_fit(graph);
    if (!fit.warning.empty()) r.warnings.push_back(fit.warning);
    detail::ResolvedScorer scorer(model);
    auto sem = detail::semantic_z(graph, scorer, min_relation_triples);

    auto node_z = [&](const EntityId& v) {
        auto it = fit.z.find(v);
        return it == fit.z.end() ? 0.0 : it->second;
    };
    // worst incident semantic z per node, worst endpoint structural z per triple
    std::map<EntityId, double> node_sem;
    for (const Triple& t : graph.triples()) {
        auto it = sem.find(triple_id(t));
        if (it == sem.end()) continue;
        for (const EntityId* e : {&t.head, &t.tail}) {
            auto [slot, fresh] = node_sem.emplace(*e, it->second);
            if (!fresh && it->second > slot->second) slot->second = it->second;
        }
    }

    for (const auto& [v, z] : fit.z) {
        if (z <= structural_cutoff) continue;  // not flagged by the parent
        auto it = node_sem.find(v);
        double zs = it == node_sem.end() ? 0.0 : it->second;
        if (std::hypot(z, zs) > combined_cutoff) r.flagged_or_removed.insert(v);
    }
    for (const Triple& t : graph.triples()) {
        auto it = sem.find(triple_id(t));
        if (it == sem.end() || it->second <= sigmas) continue;
        double zs = std::max(node_z(t.head), node_z(t.tail));
        if (std::hypot(it->second, zs) > combined_cutoff)
            r.flagged_or_removed.insert(triple_id(t));
    }
    return r;
}

inline nlohmann::json report_to_json(const SanitizationReport& r) {
    nlohmann::json j;
    j["attack"] = r.attack;
    j["flagged_or_removed"] = r.flagged_or_removed;
    j["retain_rate"] = r.retain_rate;
    j["detection_rate"] = r.detection_rate;
    j["threshold_used"] = r.threshold_used;
    if (!r.note.empty()) j["note"] = r.note;
    if (!r.warnings.empty()) j["warnings"] = r.warnings;
    return j;
}

}  // namespace aura
