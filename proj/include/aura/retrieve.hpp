#pragma once
// Adversary-grade retrievers. All three return whole neighborhoods of their
// seed entities — no fact-level truncation — which is what lets an injected
// adulterant incident to a matched key node always surface.
//
//   symbolic  gazetteer longest-match of entity labels in the query
//   dense     cosine top-k over hash embeddings of entity labels
//   hybrid    union of both

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "aura/context.hpp"
#include "aura/error.hpp"
#include "aura/kg.hpp"
#include "aura/text_embed.hpp"

namespace aura {

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = (char)std::tolower((unsigned char)c);
    return out;
}

inline bool word_char(char c) { return std::isalnum((unsigned char)c) != 0; }

}  // namespace detail

// Case-insensitive, left-to-right, longest-match entity mention finder.
// A match must sit on word boundaries ("York" does not match inside
// "New York's" once "New York" is an entity and wins by length).
inline std::vector<EntityId> find_mentions(const std::string& query,
                                           const KnowledgeGraph& graph) {
    std::string q = detail::lower(query);
    // bucket lowercased labels by first byte, longest first
    struct Cand {
        std::string lowered;
        const EntityId* id;
    };
    std::vector<std::vector<Cand>> buckets(256);
    for (const EntityId& e : graph.entities()) {
        std::string l = detail::lower(e);
        if (!l.empty()) buckets[(unsigned char)l[0]].push_back({std::move(l), &e});
    }
    for (auto& b : buckets)
        std::sort(b.begin(), b.end(), [](const Cand& a, const Cand& c) {
            if (a.lowered.size() != c.lowered.size()) return a.lowered.size() > c.lowered.size();
            return a.lowered < c.lowered;
        });

    std::vector<EntityId> found;
    std::size_t i = 0;
    while (i < q.size()) {
        const Cand* hit = nullptr;
        for (const Cand& c : buckets[(unsigned char)q[i]]) {
            if (q.compare(i, c.lowered.size(), c.lowered) != 0) continue;
            bool left_ok = i == 0 || !detail::word_char(q[i - 1]) ||
                           !detail::word_char(c.lowered.front());
            std::size_t end = i + c.lowered.size();
            bool right_ok = end >= q.size() || !detail::word_char(q[end]) ||
                            !detail::word_char(c.lowered.back());
            if (left_ok && right_ok) {
                hit = &c;
                break;  // buckets sorted longest-first: first hit is the longest
            }
        }
        if (hit) {
            found.push_back(*hit->id);
            i += hit->lowered.size();  // consume the mention
        } else {
            ++i;
        }
    }
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    return found;
}

inline RetrievalContext retrieve_symbolic(const std::string& query, const KnowledgeGraph& graph,
                                          int hops = 1, const FlagTable* flags = nullptr) {
    RetrievalContext ctx = detail::context_from_seeds(graph, find_mentions(query, graph), hops, flags);
    ctx.query = query;
    ctx.retriever = RetrieverKind::symbolic;
    return ctx;
}

struct DenseIndex {
    std::size_t entity_count = 0;       // staleness check vs graph
    std::vector<EntityId> ids;          // sorted (graph entity order)
    std::vector<float> vectors;         // row-major [n x kTextEmbedDim]

    std::span<const float> vec(std::size_t i) const {
        return {vectors.data() + i * kTextEmbedDim, kTextEmbedDim};
    }
};

inline DenseIndex build_dense_index(const KnowledgeGraph& graph) {
    DenseIndex idx;
    idx.entity_count = graph.num_entities();
    idx.ids = graph.entities();
    idx.vectors.resize(idx.ids.size() * kTextEmbedDim);
    for (std::size_t i = 0; i < idx.ids.size(); ++i) {
        auto v = embed_text(idx.ids[i]);
        std::copy(v.begin(), v.end(), idx.vectors.begin() + i * kTextEmbedDim);
    }
    return idx;
}

inline RetrievalContext retrieve_dense(const std::string& query, const KnowledgeGraph& graph,
                                       const DenseIndex& index, std::size_t top_k = 4,
                                       int hops = 1, const FlagTable* flags = nullptr) {
    if (index.entity_count != graph.num_entities() || index.ids.size() != graph.num_entities())
        throw stale_index_error("dense index entity count does not match graph");
    RetrievalContext ctx;
    ctx.query = query;
    ctx.retriever = RetrieverKind::dense;
    if (top_k == 0) return ctx;
    auto qv = embed_text(query);
    if (l2_norm(qv) == 0.0) return ctx;  // empty/degenerate query has no direction

    std::vector<std::pair<double, std::size_t>> scored(index.ids.size());
    for (std::size_t i = 0; i < index.ids.size(); ++i)
        scored[i] = {cosine(qv, index.vec(i)), i};
    std::size_t k = std::min(top_k, scored.size());
    // ids are sorted, so stable partial ordering by descending cosine keeps
    // lexicographic tie order
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<EntityId> seeds;
    seeds.reserve(k);
    for (std::size_t i = 0; i < k; ++i) seeds.push_back(index.ids[scored[i].second]);
    RetrievalContext body = detail::context_from_seeds(graph, seeds, hops, flags);
    body.query = ctx.query;
    body.retriever = RetrieverKind::dense;
    return body;
}

inline RetrievalContext retrieve_hybrid(const std::string& query, const KnowledgeGraph& graph,
                                        const DenseIndex& index, std::size_t top_k = 4,
                                        int hops = 1, const FlagTable* flags = nullptr) {
    RetrievalContext ctx = retrieve_symbolic(query, graph, hops, flags);
    ctx.merge(retrieve_dense(query, graph, index, top_k, hops, flags));
    ctx.retriever = RetrieverKind::hybrid;
    return ctx;
}

}  // namespace aura
