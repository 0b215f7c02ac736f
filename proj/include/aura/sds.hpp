#pragma once
// Impact-driven adulterant selection. Every candidate is scored by the
// Semantic Deviation Score: inject the candidate into a scratch graph,
// re-answer a fixed question set, and measure the mean Euclidean distance
// between the embedded answers with and without the candidate. Per key node
// the argmax candidate wins (ties to the smallest candidate_id).
//
// The default answer pipeline is fully deterministic: gazetteer retrieval,
// template questions, relation-path extraction, hash embeddings. An
// LLM-backed pipeline can plug in behind the same interface.

#include <algorithm>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "aura/context.hpp"
#include "aura/error.hpp"
#include "aura/genpool.hpp"
#include "aura/kg.hpp"
#include "aura/retrieve.hpp"
#include "aura/text_embed.hpp"
#include "aura/util.hpp"

namespace aura {

struct Question {
    std::string text;
    EntityId anchor_entity;
    std::vector<RelationId> relation_path;  // length = hop count
    std::vector<EntityId> gold_answers;     // sorted
};

// Canonical rendering of a gold answer set (what an exact-match answerer
// must produce on the clean graph).
inline std::string gold_answer_text(const Question& q) {
    std::string out;
    for (std::size_t i = 0; i < q.gold_answers.size(); ++i) {
        if (i) out += ", ";
        out += q.gold_answers[i];
    }
    return out;
}

// Follows the question's relation path through the triples of a retrieved
// context (head -> tail only). Returns the sorted, comma-joined frontier;
// "unknown" when the anchor never made it into the context or the path dies.
inline std::string extract_answer(const Question& q, const RetrievalContext& ctx) {
    if (!ctx.nodes.count(q.anchor_entity)) return "unknown";
    std::set<EntityId> frontier{q.anchor_entity};
    for (const RelationId& rel : q.relation_path) {
        std::set<EntityId> next;
        for (const auto& [t, flag] : ctx.triples)
            if (t.relation == rel && frontier.count(t.head)) next.insert(t.tail);
        frontier = std::move(next);
        if (frontier.empty()) return "unknown";
    }
    std::string out;
    for (auto it = frontier.begin(); it != frontier.end(); ++it) {
        if (it != frontier.begin()) out += ", ";
        out += *it;
    }
    return out;
}

// Deterministic answer pipeline: retrieval + relation-path extraction +
// feature-hash embeddings. retriever kinds other than symbolic build their
// dense index on the fly (scratch graphs during SDS scoring invalidate any
// prebuilt index).
struct AnswerPipeline {
    RetrieverKind retriever = RetrieverKind::symbolic;
    std::size_t dense_top_k = 4;

    RetrievalContext retrieve(const Question& q, const KnowledgeGraph& g,
                              const FlagTable* flags = nullptr) const {
        int hops = std::max<int>(1, (int)q.relation_path.size());
        if (retriever == RetrieverKind::symbolic)
            return retrieve_symbolic(q.text, g, hops, flags);
        DenseIndex idx = build_dense_index(g);
        if (retriever == RetrieverKind::dense)
            return retrieve_dense(q.text, g, idx, dense_top_k, hops, flags);
        return retrieve_hybrid(q.text, g, idx, dense_top_k, hops, flags);
    }

    std::string answer(const Question& q, const KnowledgeGraph& g) const {
        return extract_answer(q, retrieve(q, g));
    }

    std::vector<float> embed(const std::string& text) const { return embed_text(text); }
};

inline std::string default_answer(const Question& q, const KnowledgeGraph& g,
                                  RetrieverKind retriever = RetrieverKind::symbolic) {
    AnswerPipeline p;
    p.retriever = retriever;
    return p.answer(q, g);
}

// ------------------------------------------------------------- questions

namespace detail {

inline std::vector<EntityId> walk_gold(const KnowledgeGraph& g, const EntityId& anchor,
                                       const std::vector<RelationId>& path) {
    std::set<EntityId> frontier{anchor};
    for (const RelationId& rel : path) {
        std::set<EntityId> next;
        for (const EntityId& u : frontier)
            for (std::uint32_t idx : g.incident(u)) {
                const Triple& t = g.triples()[idx];
                if (t.head == u && t.relation == rel) next.insert(t.tail);
            }
        frontier = std::move(next);
    }
    return {frontier.begin(), frontier.end()};
}

inline Question make_question(const KnowledgeGraph& g, const EntityId& anchor,
                              const std::vector<RelationId>& path) {
    Question q;
    q.anchor_entity = anchor;
    q.relation_path = path;
    q.gold_answers = walk_gold(g, anchor, path);
    if (path.size() == 1) {
        q.text = "What is the " + path[0] + " of " + anchor + "?";
    } else {
        q.text = "What is the " + path[1] + " of the " + path[0] + " of " + anchor + "?";
    }
    return q;
}

}  // namespace detail

// Seeded template questions over random triples (1-hop) or triple pairs
// (2-hop). Asks for `count` distinct questions; a too-small graph yields
// fewer plus a warning record.
inline std::vector<Question> gen_questions(const KnowledgeGraph& graph, std::size_t count,
                                           int hops, std::uint64_t seed,
                                           std::vector<std::string>* warnings = nullptr) {
    if (count < 1) throw invalid_input("count must be >= 1");
    if (hops != 1 && hops != 2) throw invalid_input("hops must be 1 or 2");
    std::vector<Question> out;
    if (graph.num_triples() == 0) {
        if (warnings) warnings->push_back("graph has no triples; no questions generated");
        return out;
    }
    std::mt19937_64 rng(seed);
    std::set<std::pair<EntityId, std::vector<RelationId>>> seen;
    std::size_t attempts = 0, max_attempts = 50 * count + 200;
    while (out.size() < count && attempts < max_attempts) {
        ++attempts;
        const Triple& t = graph.triples()[draw_below(rng, graph.num_triples())];
        EntityId anchor = t.head;
        std::vector<RelationId> path{t.relation};
        if (hops == 2) {
            // extend through the sampled triple's tail
            std::vector<const Triple*> outgoing;
            for (std::uint32_t idx : graph.incident(t.tail)) {
                const Triple& u = graph.triples()[idx];
                if (u.head == t.tail) outgoing.push_back(&u);
            }
            if (outgoing.empty()) continue;
            path.push_back(outgoing[draw_below(rng, outgoing.size())]->relation);
        }
        if (!seen.emplace(anchor, path).second) continue;
        out.push_back(detail::make_question(graph, anchor, path));
    }
    if (out.size() < count && warnings)
        warnings->push_back("graph too small for " + std::to_string(count) + " distinct " +
                            std::to_string(hops) + "-hop questions; generated " +
                            std::to_string(out.size()));
    return out;
}

// Scoring questions targeted at the key nodes: anchors in BFS order from
// each key node (the node itself first), one 1-hop question per outgoing
// relation, up to per_node questions per key node, deduplicated globally.
inline std::vector<Question> gen_scoring_questions(const KnowledgeGraph& graph,
                                                   const NodeSet& key_nodes,
                                                   std::size_t per_node = 20) {
    std::set<std::pair<EntityId, std::vector<RelationId>>> seen;
    std::vector<Question> out;
    for (const EntityId& vk : key_nodes.members) {
        if (!graph.has_entity(vk)) throw not_found_error("key node '" + vk + "' not in graph");
        std::size_t taken = 0;
        // BFS order, lexicographic within a depth level
        std::set<EntityId> visited{vk};
        std::vector<EntityId> level{vk};
        while (!level.empty() && taken < per_node) {
            std::set<EntityId> next_level;
            for (const EntityId& u : level) {
                if (taken >= per_node) break;
                std::set<RelationId> outgoing;
                for (std::uint32_t idx : graph.incident(u)) {
                    const Triple& t = graph.triples()[idx];
                    if (t.head == u) outgoing.insert(t.relation);
                    const EntityId& other = t.head == u ? t.tail : t.head;
                    if (!visited.count(other)) next_level.insert(other);
                }
                for (const RelationId& rel : outgoing) {
                    if (taken >= per_node) break;
                    std::vector<RelationId> path{rel};
                    if (!seen.emplace(u, path).second) continue;
                    out.push_back(detail::make_question(graph, u, path));
                    ++taken;
                }
            }
            level.clear();
            for (const EntityId& e : next_level)
                if (visited.insert(e).second) level.push_back(e);
        }
    }
    return out;
}

// ------------------------------------------------------------- SDS

inline Injection injection_of(const CandidateAdulterant& c) {
    Injection payload;
    payload.triples = c.triples;
    if (c.fake_entity) payload.fake_entities.push_back(*c.fake_entity);
    return payload;
}

// Straight implementation of the definition: mean over questions of the
// Euclidean distance between embedded clean and adulterated answers.
inline double sds_score(const CandidateAdulterant& candidate,
                        const std::vector<Question>& questions, const KnowledgeGraph& graph,
                        const AnswerPipeline& pipeline = {}) {
    if (questions.empty()) throw invalid_input("questions must be non-empty");
    KnowledgeGraph scratch = inject(graph, injection_of(candidate));
    double acc = 0.0;
    for (const Question& q : questions) {
        auto clean = pipeline.embed(pipeline.answer(q, graph));
        auto dirty = pipeline.embed(pipeline.answer(q, scratch));
        acc += l2_distance(clean, dirty);
    }
    return acc / (double)questions.size();
}

struct AdulterantSet {
    std::map<EntityId, CandidateAdulterant> chosen;  // key_node -> winning candidate
    std::vector<Triple> triples;                     // sorted unique flattened
    std::map<std::string, double> scores;            // candidate_id -> SDS (all scored)
    std::vector<std::string> warnings;

    Injection to_injection() const {
        Injection payload;
        std::set<Triple> ts;
        for (const auto& [k, c] : chosen) {
            ts.insert(c.triples.begin(), c.triples.end());
            if (c.fake_entity) payload.fake_entities.push_back(*c.fake_entity);
        }
        payload.triples.assign(ts.begin(), ts.end());
        std::sort(payload.fake_entities.begin(), payload.fake_entities.end());
        return payload;
    }
};

inline KnowledgeGraph inject(const KnowledgeGraph& graph, const AdulterantSet& set) {
    return inject(graph, set.to_injection());
}

namespace detail {

// Per-question precomputation for the exact scoring fast path: the clean
// mention seeds and a depth-limited multi-source BFS distance map.
struct QuestionProbe {
    const Question* q;
    int hops;
    std::vector<float> clean_embedding;
    std::map<EntityId, int> near;  // entities within `hops` of any seed (clean graph)
    bool empty_seeds = false;
};

inline QuestionProbe probe_question(const Question& q, const KnowledgeGraph& g,
                                    const AnswerPipeline& pipeline) {
    QuestionProbe p;
    p.q = &q;
    p.hops = std::max<int>(1, (int)q.relation_path.size());
    p.clean_embedding = pipeline.embed(pipeline.answer(q, g));
    auto seeds = find_mentions(q.text, g);
    p.empty_seeds = seeds.empty();
    std::queue<EntityId> frontier;
    for (const auto& s : seeds) {
        p.near.emplace(s, 0);
        frontier.push(s);
    }
    while (!frontier.empty()) {
        EntityId u = frontier.front();
        frontier.pop();
        int du = p.near.at(u);
        if (du >= p.hops) continue;
        for (std::uint32_t idx : g.incident(u)) {
            const Triple& t = g.triples()[idx];
            for (const EntityId* e : {&t.head, &t.tail})
                if (p.near.emplace(*e, du + 1).second) frontier.push(*e);
        }
    }
    return p;
}

// True when the candidate provably cannot change this question's context:
// no fake label appears in the question text and every real endpoint of the
// candidate's triples is farther than `hops` from every mention seed.
inline bool provably_invisible(const CandidateAdulterant& c, const QuestionProbe& p) {
    // conservative: a case-insensitive substring hit sends the candidate to
    // the slow path (gazetteer matching is case-insensitive)
    if (c.fake_entity && lower(p.q->text).find(lower(*c.fake_entity)) != std::string::npos)
        return false;
    if (p.empty_seeds) return true;  // empty context stays empty: nothing to match
    for (const Triple& t : c.triples) {
        for (const EntityId* e : {&t.head, &t.tail}) {
            if (c.fake_entity && *e == *c.fake_entity) continue;
            if (p.near.count(*e)) return false;
        }
    }
    return true;
}

}  // namespace detail

// Scores every candidate in the pool against the question set. Exact but
// fast: candidates provably invisible to a question contribute 0 for it
// without a scratch-graph retrieval. Deterministic for any thread count.
inline std::map<std::string, double> sds_scores_for_pool(
    const CandidatePool& pool, const std::vector<Question>& questions,
    const KnowledgeGraph& graph, const AnswerPipeline& pipeline = {}, unsigned threads = 1) {
    if (questions.empty()) throw invalid_input("questions must be non-empty");

    // symbolic retrieval admits the exact invisibility fast path; other
    // retrievers fall back to the straight definition
    const bool fast = pipeline.retriever == RetrieverKind::symbolic;
    std::vector<detail::QuestionProbe> probes;
    if (fast) {
        probes.reserve(questions.size());
        for (const Question& q : questions) probes.push_back(detail::probe_question(q, graph, pipeline));
    }

    std::vector<const CandidateAdulterant*> cands;
    cands.reserve(pool.size());
    for (const auto& [id, c] : pool.by_id) cands.push_back(&c);
    std::vector<double> scores(cands.size(), 0.0);

    parallel_for(cands.size(), threads, [&](std::size_t i) {
        const CandidateAdulterant& c = *cands[i];
        if (!fast) {
            scores[i] = sds_score(c, questions, graph, pipeline);
            return;
        }
        KnowledgeGraph scratch;         // built lazily on first visible question
        bool scratch_built = false;
        double acc = 0.0;
        for (const detail::QuestionProbe& p : probes) {
            if (detail::provably_invisible(c, p)) continue;
            if (!scratch_built) {
                scratch = inject(graph, injection_of(c));
                scratch_built = true;
            }
            auto dirty = pipeline.embed(pipeline.answer(*p.q, scratch));
            acc += l2_distance(p.clean_embedding, dirty);
        }
        scores[i] = acc / (double)questions.size();
    });

    std::map<std::string, double> out;
    for (std::size_t i = 0; i < cands.size(); ++i) out[cands[i]->candidate_id] = scores[i];
    return out;
}

// Per key node, picks the candidate with the highest SDS (ties to the
// lexicographically smallest candidate_id). Key nodes whose candidate set is
// empty are omitted with a warning record.
inline AdulterantSet select_adulterants(const CandidatePool& pool,
                                        const std::vector<Question>& questions,
                                        const KnowledgeGraph& graph,
                                        const AnswerPipeline& pipeline = {},
                                        unsigned threads = 1) {
    AdulterantSet result;
    result.scores = sds_scores_for_pool(pool, questions, graph, pipeline, threads);
    for (const auto& [vk, ids] : pool.by_key_node) {
        if (ids.empty()) {
            result.warnings.push_back("key node '" + vk + "' has no candidates; omitted");
            continue;
        }
        const std::string* best_id = nullptr;
        double best = -1.0;
        for (const std::string& id : ids) {  // ids sorted: ties keep smallest
            double s = result.scores.at(id);
            if (s > best) {
                best = s;
                best_id = &id;
            }
        }
        result.chosen.emplace(vk, pool.at(*best_id));
    }
    std::set<Triple> ts;
    for (const auto& [k, c] : result.chosen) ts.insert(c.triples.begin(), c.triples.end());
    result.triples.assign(ts.begin(), ts.end());
    return result;
}

// ------------------------------------------------------------ JSON forms

inline nlohmann::json question_to_json(const Question& q) {
    return {{"text", q.text},
            {"anchor", q.anchor_entity},
            {"relation_path", q.relation_path},
            {"gold_answers", q.gold_answers}};
}

inline Question question_from_json(const nlohmann::json& j) {
    Question q;
    try {
        q.text = j.at("text");
        q.anchor_entity = j.at("anchor");
        q.relation_path = j.at("relation_path").get<std::vector<RelationId>>();
        q.gold_answers = j.at("gold_answers").get<std::vector<EntityId>>();
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("invalid question JSON: ") + e.what());
    }
    std::sort(q.gold_answers.begin(), q.gold_answers.end());
    return q;
}

inline std::string questions_to_jsonl(const std::vector<Question>& qs) {
    std::string out;
    for (const Question& q : qs) {
        out += question_to_json(q).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<Question> questions_from_jsonl(std::string_view source) {
    std::vector<Question> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < source.size()) {
        ++line_no;
        std::size_t nl = source.find('\n', pos);
        std::string_view line = source.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? source.size() : nl + 1;
        if (line.empty()) continue;
        try {
            out.push_back(question_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(std::string("invalid question JSON: ") + e.what(), line_no);
        } catch (const parse_error& e) {
            throw parse_error(e.what(), line_no);
        }
    }
    return out;
}

inline std::string adulterant_set_to_json(const AdulterantSet& s) {
    nlohmann::json j;
    auto& chosen = j["chosen"] = nlohmann::json::array();
    for (const auto& [vk, c] : s.chosen) {
        nlohmann::json jc = candidate_to_json(c);
        jc["sds_score"] = s.scores.count(c.candidate_id) ? s.scores.at(c.candidate_id) : 0.0;
        chosen.push_back(std::move(jc));
    }
    j["warnings"] = s.warnings;
    return j.dump(2) + "\n";
}

inline AdulterantSet adulterant_set_from_json(std::string_view source) {
    AdulterantSet s;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(source);
        for (const auto& jc : j.at("chosen")) {
            CandidateAdulterant c = candidate_from_json(jc);
            s.scores[c.candidate_id] = jc.value("sds_score", 0.0);
            s.chosen.emplace(c.key_node, std::move(c));
        }
        if (j.contains("warnings"))
            s.warnings = j["warnings"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("invalid adulterant-set JSON: ") + e.what());
    }
    std::set<Triple> ts;
    for (const auto& [k, c] : s.chosen) ts.insert(c.triples.begin(), c.triples.end());
    s.triples.assign(ts.begin(), ts.end());
    return s;
}

}  // namespace aura
