#pragma once
// Retrieval context: the subgraph handed to an answer pipeline, with each
// node and triple carrying its sealed flag ciphertext (empty string when the
// source graph is unsealed). FlagTable is the sealed-graph sidecar mapping
// every element to its ciphertext.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "aura/error.hpp"
#include "aura/kg.hpp"

namespace aura {

enum class RetrieverKind { symbolic, dense, hybrid };

inline const char* to_string(RetrieverKind k) {
    switch (k) {
        case RetrieverKind::symbolic: return "symbolic";
        case RetrieverKind::dense: return "dense";
        default: return "hybrid";
    }
}

inline RetrieverKind retriever_from_string(std::string_view s) {
    if (s == "symbolic") return RetrieverKind::symbolic;
    if (s == "dense") return RetrieverKind::dense;
    if (s == "hybrid") return RetrieverKind::hybrid;
    throw invalid_input("unknown retriever '" + std::string(s) + "' (symbolic|dense|hybrid)");
}

// Ciphertext flags for every element of a sealed graph.
struct FlagTable {
    std::string property_name = "remark";
    std::string key_id;  // operator sanity check only, not a secret
    std::map<EntityId, std::string> node_flags;
    std::map<std::string, std::string> triple_flags;  // by triple_key

    const std::string& node_flag(const EntityId& e) const {
        auto it = node_flags.find(e);
        if (it == node_flags.end()) throw not_found_error("no flag for node '" + e + "'");
        return it->second;
    }
    const std::string& triple_flag(const Triple& t) const {
        auto it = triple_flags.find(triple_key(t));
        if (it == triple_flags.end())
            throw not_found_error("no flag for triple " + triple_key(t));
        return it->second;
    }
};

struct RetrievalContext {
    std::string query;
    RetrieverKind retriever = RetrieverKind::symbolic;
    std::map<EntityId, std::string> nodes;  // entity -> flag ciphertext ("" unsealed)
    std::map<Triple, std::string> triples;  // triple -> flag ciphertext

    bool empty() const { return nodes.empty() && triples.empty(); }

    // invariant: every triple endpoint is present as a node
    bool endpoints_closed() const {
        for (const auto& [t, f] : triples)
            if (!nodes.count(t.head) || !nodes.count(t.tail)) return false;
        return true;
    }

    // set-union merge; flags for shared elements must agree
    void merge(const RetrievalContext& other) {
        for (const auto& [e, f] : other.nodes) nodes.emplace(e, f);
        for (const auto& [t, f] : other.triples) triples.emplace(t, f);
    }
};

namespace detail {

// Stamps `seeds` plus the union of their hop-neighborhoods into a context,
// attaching ciphertexts when a flag table is supplied.
inline RetrievalContext context_from_seeds(const KnowledgeGraph& graph,
                                           const std::vector<EntityId>& seeds, int hops,
                                           const FlagTable* flags) {
    RetrievalContext ctx;
    auto node_flag = [&](const EntityId& e) { return flags ? flags->node_flag(e) : std::string(); };
    for (const EntityId& s : seeds) {
        ctx.nodes.emplace(s, node_flag(s));
        for (const Triple& t : graph.neighborhood(s, hops).triples) {
            ctx.triples.emplace(t, flags ? flags->triple_flag(t) : std::string());
            ctx.nodes.emplace(t.head, node_flag(t.head));
            ctx.nodes.emplace(t.tail, node_flag(t.tail));
        }
    }
    return ctx;
}

}  // namespace detail

// Deterministic prompt text: one line per triple, sorted (map order).
inline std::string serialize_context(const RetrievalContext& ctx) {
    std::string out;
    for (const auto& [t, f] : ctx.triples) {
        out += t.head;
        out += " —[";  // em dash
        out += t.relation;
        out += "]→ ";  // right arrow
        out += t.tail;
        out += '\n';
    }
    return out;
}

}  // namespace aura
