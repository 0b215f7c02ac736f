#pragma once
// Knowledge-graph data model: labeled entities, relation types and triples
// with an incident-triple index. Graphs are immutable values; "mutation"
// (injection) builds a new graph. Entity identity is the label string
// itself; a dense numeric index for embedding lookup is derived on demand.
//
// Formats:
//   tsv            head<TAB>relation<TAB>tail, one triple per line
//   ntriples       subject predicate object ., tokens kept opaque
//   property-json  {"entities":[...],"triples":[...]} with per-element
//                  string-map "properties" (carrier for sealed flags)

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "aura/error.hpp"
#include "aura/util.hpp"

namespace aura {

using EntityId = std::string;
using RelationId = std::string;

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    friend auto operator<=>(const Triple&, const Triple&) = default;
};

// Canonical key: fields are tab-free by construction, so this is injective.
inline std::string triple_key(const Triple& t) {
    std::string k;
    k.reserve(t.head.size() + t.relation.size() + t.tail.size() + 2);
    k += t.head;
    k += '\t';
    k += t.relation;
    k += '\t';
    k += t.tail;
    return k;
}

// Opaque stable identifier, a pure function of (head, relation, tail).
inline std::string triple_id(const Triple& t) {
    return hex64(fnv1a64(triple_key(t)));
}

enum class Provenance { original, adulterant };

struct Subgraph {
    EntityId center;
    int hops = 1;
    std::vector<Triple> triples;  // sorted
};

namespace detail {

inline void validate_token(std::string_view id, const char* what) {
    if (id.empty()) throw invalid_input(std::string(what) + " must be non-empty");
    if (id.find_first_of("\t\n\r") != std::string_view::npos)
        throw invalid_input(std::string(what) + " contains tab/newline: '" + std::string(id) + "'");
}

}  // namespace detail

class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    const std::vector<EntityId>& entities() const { return entities_; }
    const std::vector<RelationId>& relations() const { return relations_; }
    const std::vector<Triple>& triples() const { return triples_; }

    std::size_t num_entities() const { return entities_.size(); }
    std::size_t num_relations() const { return relations_.size(); }
    std::size_t num_triples() const { return triples_.size(); }

    bool has_entity(const EntityId& id) const { return adjacency_.count(id) != 0; }

    bool has_triple(const Triple& t) const { return triple_index_.count(triple_key(t)) != 0; }

    // Display label; identity is the label itself.
    const std::string& label(const EntityId& id) const { return id; }

    // Indices into triples() of every triple incident to `id` (as head or tail).
    std::span<const std::uint32_t> incident(const EntityId& id) const {
        auto it = adjacency_.find(id);
        if (it == adjacency_.end()) throw not_found_error("unknown entity '" + id + "'");
        return it->second;
    }

    std::size_t degree(const EntityId& id) const { return incident(id).size(); }

    Provenance entity_provenance(const EntityId& id) const {
        if (!has_entity(id)) throw not_found_error("unknown entity '" + id + "'");
        return adulterant_entities_.count(id) ? Provenance::adulterant : Provenance::original;
    }

    Provenance triple_provenance(const Triple& t) const {
        if (!has_triple(t)) throw not_found_error("unknown triple " + triple_key(t));
        return adulterant_triples_.count(triple_key(t)) ? Provenance::adulterant
                                                        : Provenance::original;
    }

    std::size_t num_adulterant_entities() const { return adulterant_entities_.size(); }
    std::size_t num_adulterant_triples() const { return adulterant_triples_.size(); }

    // Breadth-first expansion over undirected triple incidence. A triple is
    // included iff it lies on a path of length <= hops from the center,
    // i.e. min(dist(head), dist(tail)) < hops.
    Subgraph neighborhood(const EntityId& center, int hops) const {
        if (hops < 1) throw invalid_input("hops must be >= 1");
        if (!has_entity(center)) throw not_found_error("unknown entity '" + center + "'");

        std::unordered_map<EntityId, int> dist;
        dist.emplace(center, 0);
        std::queue<const EntityId*> frontier;
        frontier.push(&center);
        std::set<Triple> picked;
        while (!frontier.empty()) {
            const EntityId& u = *frontier.front();
            frontier.pop();
            int du = dist.at(u);
            if (du >= hops) continue;
            for (std::uint32_t idx : incident(u)) {
                const Triple& t = triples_[idx];
                picked.insert(t);
                const EntityId& other = (t.head == u) ? t.tail : t.head;
                auto [it, fresh] = dist.emplace(other, du + 1);
                if (fresh) frontier.push(&it->first);
            }
        }
        Subgraph sg;
        sg.center = center;
        sg.hops = hops;
        sg.triples.assign(picked.begin(), picked.end());
        return sg;
    }

    // Rebuild-and-compare check backing the adjacency-consistency invariant.
    bool adjacency_consistent() const {
        std::unordered_map<EntityId, std::vector<std::uint32_t>> rebuilt;
        for (const auto& e : entities_) rebuilt[e];
        for (std::uint32_t i = 0; i < triples_.size(); ++i) {
            rebuilt[triples_[i].head].push_back(i);
            if (triples_[i].tail != triples_[i].head) rebuilt[triples_[i].tail].push_back(i);
        }
        return rebuilt == adjacency_;
    }

private:
    friend class GraphBuilder;

    std::vector<Triple> triples_;       // sorted, unique
    std::vector<EntityId> entities_;    // sorted, unique, superset of endpoints
    std::vector<RelationId> relations_; // sorted, unique
    std::unordered_map<EntityId, std::vector<std::uint32_t>> adjacency_;
    std::unordered_map<std::string, std::uint32_t> triple_index_;  // triple_key -> index
    std::unordered_set<EntityId> adulterant_entities_;
    std::unordered_set<std::string> adulterant_triples_;  // by triple_key
};

// Accumulates triples/entities, deduplicates, validates and freezes into an
// immutable KnowledgeGraph.
class GraphBuilder {
public:
    GraphBuilder& add_entity(const EntityId& id, Provenance p = Provenance::original) {
        detail::validate_token(id, "entity id");
        entities_.emplace(id, p);
        return *this;
    }

    GraphBuilder& add_triple(const Triple& t, Provenance p = Provenance::original) {
        detail::validate_token(t.head, "head");
        detail::validate_token(t.relation, "relation");
        detail::validate_token(t.tail, "tail");
        auto [it, fresh] = triples_.emplace(t, p);
        if (!fresh && it->second != p)
            throw invalid_input("triple " + triple_key(t) + " added with conflicting provenance");
        // Endpoints become entities; an entity seen earlier keeps its
        // provenance (adulterant edges touch original endpoints).
        add_entity(t.head, p);
        add_entity(t.tail, p);
        return *this;
    }

    bool has_triple(const Triple& t) const { return triples_.count(t) != 0; }

    KnowledgeGraph build() const {
        KnowledgeGraph g;
        g.triples_.reserve(triples_.size());
        std::set<RelationId> rels;
        for (const auto& [t, p] : triples_) {
            g.triples_.push_back(t);
            rels.insert(t.relation);
            if (p == Provenance::adulterant) g.adulterant_triples_.insert(triple_key(t));
        }
        g.relations_.assign(rels.begin(), rels.end());
        g.entities_.reserve(entities_.size());
        for (const auto& [e, p] : entities_) {
            g.entities_.push_back(e);
            g.adjacency_[e];
            if (p == Provenance::adulterant) g.adulterant_entities_.insert(e);
        }
        for (std::uint32_t i = 0; i < g.triples_.size(); ++i) {
            const Triple& t = g.triples_[i];
            g.adjacency_[t.head].push_back(i);
            if (t.tail != t.head) g.adjacency_[t.tail].push_back(i);
            g.triple_index_.emplace(triple_key(t), i);
        }
        return g;
    }

private:
    std::map<Triple, Provenance> triples_;  // sorted; duplicates collapse
    std::map<EntityId, Provenance> entities_;
};

// ---------------------------------------------------------------- parsing

enum class TripleFormat { tsv, ntriples };

inline const char* to_string(TripleFormat f) {
    return f == TripleFormat::tsv ? "tsv" : "ntriples";
}

inline TripleFormat triple_format_from_string(std::string_view s) {
    if (s == "tsv") return TripleFormat::tsv;
    if (s == "ntriples") return TripleFormat::ntriples;
    throw invalid_input("unknown triple format '" + std::string(s) + "' (tsv|ntriples)");
}

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline Triple parse_tsv_line(std::string_view line, std::size_t line_no) {
    std::size_t t1 = line.find('\t');
    if (t1 == std::string_view::npos) throw parse_error("expected 3 tab-separated fields", line_no);
    std::size_t t2 = line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) throw parse_error("expected 3 tab-separated fields", line_no);
    if (line.find('\t', t2 + 1) != std::string_view::npos)
        throw parse_error("expected exactly 3 fields", line_no);
    Triple t{std::string(line.substr(0, t1)), std::string(line.substr(t1 + 1, t2 - t1 - 1)),
             std::string(line.substr(t2 + 1))};
    if (t.head.empty() || t.relation.empty() || t.tail.empty())
        throw parse_error("empty field", line_no);
    return t;
}

// One term of an N-Triples statement: IRI (<...>), literal ("..." with an
// optional suffix) or a bare token. The token text is kept opaque.
inline std::string_view next_nt_term(std::string_view& rest, std::size_t line_no) {
    std::size_t b = rest.find_first_not_of(" \t");
    if (b == std::string_view::npos) throw parse_error("truncated statement", line_no);
    rest.remove_prefix(b);
    std::size_t end;
    if (rest.front() == '<') {
        end = rest.find('>');
        if (end == std::string_view::npos) throw parse_error("unterminated IRI", line_no);
        ++end;
    } else if (rest.front() == '"') {
        end = 1;
        while (end < rest.size() && !(rest[end] == '"' && rest[end - 1] != '\\')) ++end;
        if (end >= rest.size()) throw parse_error("unterminated literal", line_no);
        ++end;
        // language tag or datatype suffix stays attached to the token
        while (end < rest.size() && rest[end] != ' ' && rest[end] != '\t') ++end;
    } else {
        end = rest.find_first_of(" \t");
        if (end == std::string_view::npos) throw parse_error("truncated statement", line_no);
    }
    std::string_view term = rest.substr(0, end);
    rest.remove_prefix(end);
    return term;
}

inline Triple parse_ntriples_line(std::string_view line, std::size_t line_no) {
    std::string_view rest = line;
    std::string_view s = next_nt_term(rest, line_no);
    std::string_view p = next_nt_term(rest, line_no);
    std::string_view o = next_nt_term(rest, line_no);
    std::size_t dot = rest.find_first_not_of(" \t");
    if (dot == std::string_view::npos || rest[dot] != '.')
        throw parse_error("statement must end with '.'", line_no);
    if (rest.find_first_not_of(" \t", dot + 1) != std::string_view::npos)
        throw parse_error("trailing content after '.'", line_no);
    return Triple{std::string(s), std::string(p), std::string(o)};
}

}  // namespace detail

// Parses a triple stream. Duplicate statements collapse to one triple; the
// entity set is the union of all heads and tails. Empty input is an empty
// graph, not an error.
inline KnowledgeGraph parse_triples(std::string_view source, TripleFormat format) {
    GraphBuilder b;
    std::size_t line_no = 0;
    for (std::string_view raw : detail::split_lines(source)) {
        ++line_no;
        std::string_view line = detail::strip_cr(raw);
        if (line.empty()) continue;
        if (format == TripleFormat::ntriples && line.front() == '#') continue;
        Triple t = (format == TripleFormat::tsv) ? detail::parse_tsv_line(line, line_no)
                                                 : detail::parse_ntriples_line(line, line_no);
        try {
            b.add_triple(t);
        } catch (const invalid_input& e) {
            throw parse_error(e.what(), line_no);
        }
    }
    return b.build();
}

// -------------------------------------------------------------- injection

// Payload for inject(): raw triples plus any new fake entities they rely on.
struct Injection {
    std::vector<Triple> triples;
    std::vector<EntityId> fake_entities;
};

// Returns graph ∪ injection with every injected element flagged adulterant.
// The input graph is unchanged. Injecting a triple that already exists, or a
// fake entity that collides with an existing one, is an error: such an
// element would be factually true or ambiguous, which signals a generator bug.
inline KnowledgeGraph inject(const KnowledgeGraph& graph, const Injection& payload) {
    GraphBuilder b;
    for (const auto& e : graph.entities())
        b.add_entity(e, graph.entity_provenance(e));
    for (const auto& t : graph.triples())
        b.add_triple(t, graph.triple_provenance(t));
    for (const auto& fe : payload.fake_entities) {
        if (graph.has_entity(fe))
            throw invalid_input("fake entity '" + fe + "' already exists in graph");
        b.add_entity(fe, Provenance::adulterant);
    }
    std::unordered_set<EntityId> fakes(payload.fake_entities.begin(), payload.fake_entities.end());
    for (const auto& t : payload.triples) {
        if (graph.has_triple(t))
            throw invalid_input("adulterant duplicates original triple " + triple_key(t));
        for (const EntityId* ep : {&t.head, &t.tail}) {
            if (!graph.has_entity(*ep) && !fakes.count(*ep))
                throw invalid_input("adulterant endpoint '" + *ep + "' is neither an existing entity nor a declared fake");
        }
        b.add_triple(t, Provenance::adulterant);
    }
    return b.build();
}

// ------------------------------------------------------------ serializing

// Deterministic TSV: triples only, sorted lexicographically, LF endings,
// trailing newline. parse(serialize(g)) == g on triple content.
inline std::string to_tsv(const KnowledgeGraph& graph) {
    std::string out;
    for (const Triple& t : graph.triples()) {
        out += triple_key(t);
        out += '\n';
    }
    return out;
}

// Per-element metadata attached on serialization; used by the sealing layer.
struct PropertyAnnotations {
    std::map<std::string, std::string> header;  // extra top-level string fields
    std::function<std::map<std::string, std::string>(const EntityId&)> entity_props;
    std::function<std::map<std::string, std::string>(const Triple&)> triple_props;
};

inline std::string to_property_json(const KnowledgeGraph& graph,
                                    const PropertyAnnotations& ann = {}) {
    nlohmann::json doc;
    doc["format"] = "aura-graph";
    doc["version"] = 1;
    for (const auto& [k, v] : ann.header) doc[k] = v;
    auto& ents = doc["entities"] = nlohmann::json::array();
    for (const EntityId& e : graph.entities()) {
        nlohmann::json je;
        je["id"] = e;
        if (ann.entity_props) {
            auto props = ann.entity_props(e);
            if (!props.empty()) je["properties"] = props;
        }
        ents.push_back(std::move(je));
    }
    auto& trs = doc["triples"] = nlohmann::json::array();
    for (const Triple& t : graph.triples()) {
        nlohmann::json jt;
        jt["head"] = t.head;
        jt["relation"] = t.relation;
        jt["tail"] = t.tail;
        if (ann.triple_props) {
            auto props = ann.triple_props(t);
            if (!props.empty()) jt["properties"] = props;
        }
        trs.push_back(std::move(jt));
    }
    return doc.dump(2) + "\n";
}

// Parsed property-json document: the graph plus whatever per-element
// properties the file carried. Provenance is never read from properties;
// a freshly parsed graph is all-original by construction.
struct PropertyGraphFile {
    KnowledgeGraph graph;
    std::map<std::string, std::string> header;
    std::map<EntityId, std::map<std::string, std::string>> entity_props;
    std::map<std::string, std::map<std::string, std::string>> triple_props;  // by triple_key
};

inline PropertyGraphFile parse_property_json(std::string_view source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(source);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != "aura-graph")
        throw parse_error("not an aura-graph property-json document");
    PropertyGraphFile out;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (it.value().is_string() && it.key() != "format") out.header[it.key()] = it.value();
    }
    GraphBuilder b;
    for (const auto& je : doc.value("entities", nlohmann::json::array())) {
        EntityId id = je.at("id");
        b.add_entity(id);
        if (je.contains("properties"))
            out.entity_props[id] = je["properties"].get<std::map<std::string, std::string>>();
    }
    for (const auto& jt : doc.value("triples", nlohmann::json::array())) {
        Triple t{jt.at("head"), jt.at("relation"), jt.at("tail")};
        b.add_triple(t);
        if (jt.contains("properties"))
            out.triple_props[triple_key(t)] =
                jt["properties"].get<std::map<std::string, std::string>>();
    }
    out.graph = b.build();
    return out;
}

}  // namespace aura
