#pragma once
// Candidate adulterant generation. Two generators feed one pool:
//
//   edge candidates  for each key node and incident triple, the link
//                    predictor ranks replacement endpoints; the top-N
//                    completions that are NOT true facts become false edges
//   node candidates  a fake entity (label from a NameProvider) cloning the
//                    key node's entire incident neighborhood, both directions
//
// Candidate ids are content hashes domain-separated by kind, so pooling the
// two sets can never collide.

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "aura/error.hpp"
#include "aura/kg.hpp"
#include "aura/kge.hpp"
#include "aura/mvc.hpp"
#include "aura/util.hpp"

namespace aura {

enum class CandidateKind { edge, node };

struct CandidateAdulterant {
    CandidateKind kind = CandidateKind::edge;
    EntityId key_node;
    std::vector<Triple> triples;            // sorted; exactly 1 for edge kind
    std::optional<EntityId> fake_entity;    // node kind only
    std::optional<double> generator_score;  // edge kind only (link-predictor score)
    std::string candidate_id;
};

inline std::string candidate_id_for(CandidateKind kind, const EntityId& key_node,
                                    const std::vector<Triple>& triples,
                                    const std::optional<EntityId>& fake) {
    std::string material(kind == CandidateKind::edge ? "edge" : "node");
    material += '\0';
    material += key_node;
    material += '\0';
    if (fake) material += *fake;
    material += '\0';
    for (const Triple& t : triples) {
        material += triple_key(t);
        material += '\n';
    }
    return hex64(fnv1a64(material));
}

// ------------------------------------------------------------- providers

// Supplies a plausible fake label for a node clone. The neighborhood summary
// is context only; implementations may ignore it.
class NameProvider {
public:
    virtual ~NameProvider() = default;
    virtual std::string request(const std::string& entity_label,
                                const std::vector<std::string>& neighborhood_summary) = 0;
};

// Deterministic label perturbation, seeded per (seed, label): perturb a
// 4-digit year, swap a token with a lexicon sibling, or append a roman
// numeral. A stand-in for a generative model that keeps CI reproducible.
class MockNameProvider : public NameProvider {
public:
    explicit MockNameProvider(std::uint64_t seed = 0) : seed_(seed) {}

    std::string request(const std::string& entity_label,
                        const std::vector<std::string>& /*neighborhood_summary*/) override {
        if (entity_label.empty()) throw provider_error("empty entity label");
        std::mt19937_64 rng(derive_seed(seed_, entity_label));
        switch (draw_below(rng, 3)) {
            case 0:
                if (auto s = perturb_year(entity_label, rng)) return *s;
                [[fallthrough]];
            case 1:
                if (auto s = swap_token(entity_label, rng)) return *s;
                [[fallthrough]];
            default:
                return roman_suffix(entity_label, rng);
        }
    }

private:
    static std::optional<std::string> perturb_year(const std::string& label,
                                                   std::mt19937_64& rng) {
        for (std::size_t i = 0; i + 4 <= label.size(); ++i) {
            bool left_ok = i == 0 || !std::isdigit((unsigned char)label[i - 1]);
            bool right_ok = i + 4 == label.size() || !std::isdigit((unsigned char)label[i + 4]);
            if (!left_ok || !right_ok) continue;
            bool four_digits = true;
            for (int k = 0; k < 4; ++k)
                if (!std::isdigit((unsigned char)label[i + k])) four_digits = false;
            if (!four_digits || label[i] == '0') continue;
            int year = std::stoi(label.substr(i, 4));
            int delta = 1 + (int)draw_below(rng, 3);
            if (draw_below(rng, 2)) delta = -delta;
            return label.substr(0, i) + std::to_string(year + delta) + label.substr(i + 4);
        }
        return std::nullopt;
    }

    static std::optional<std::string> swap_token(const std::string& label,
                                                 std::mt19937_64& rng) {
        static const std::vector<std::pair<const char*, const char*>> lexicon = {
            {"north", "south"}, {"south", "north"}, {"east", "west"},   {"west", "east"},
            {"new", "old"},     {"old", "new"},     {"upper", "lower"}, {"lower", "upper"},
            {"great", "little"}, {"king", "queen"}, {"saint", "fort"},  {"river", "lake"},
            {"first", "second"}, {"red", "white"},  {"grand", "petit"},
        };
        std::vector<std::string> tokens;
        std::string cur;
        for (char c : label) {
            if (c == ' ') {
                tokens.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        tokens.push_back(cur);
        std::vector<std::size_t> swappable;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            std::string low;
            for (char c : tokens[i]) low += (char)std::tolower((unsigned char)c);
            for (const auto& [from, to] : lexicon)
                if (low == from) {
                    swappable.push_back(i);
                    break;
                }
        }
        if (swappable.empty()) return std::nullopt;
        std::size_t pick = swappable[draw_below(rng, swappable.size())];
        std::string low;
        for (char c : tokens[pick]) low += (char)std::tolower((unsigned char)c);
        for (const auto& [from, to] : lexicon) {
            if (low != from) continue;
            std::string repl(to);
            if (std::isupper((unsigned char)tokens[pick][0]))
                repl[0] = (char)std::toupper((unsigned char)repl[0]);
            tokens[pick] = repl;
            break;
        }
        std::string out;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) out += ' ';
            out += tokens[i];
        }
        return out;
    }

    static std::string roman_suffix(const std::string& label, std::mt19937_64& rng) {
        static const char* numerals[] = {"II", "III", "IV", "V", "VI", "VII"};
        return label + " " + numerals[draw_below(rng, 6)];
    }

    std::uint64_t seed_;
};

// ----------------------------------------------------------- edge kind

inline std::vector<CandidateAdulterant> gen_edge_candidates(const EmbeddingModel& model,
                                                            const KnowledgeGraph& graph,
                                                            const NodeSet& key_nodes,
                                                            std::size_t n_per_slot) {
    if (n_per_slot < 1) throw invalid_input("n_per_slot must be >= 1");
    std::map<std::string, CandidateAdulterant> dedup;
    // full rankings are reused across slots that share (anchor, relation, direction)
    std::map<std::string, std::vector<std::pair<EntityId, double>>> ranking_cache;

    for (const EntityId& vk : key_nodes.members) {
        if (!graph.has_entity(vk)) throw not_found_error("key node '" + vk + "' not in graph");
        for (std::uint32_t idx : graph.incident(vk)) {
            const Triple& t = graph.triples()[idx];
            bool tail_slot = (t.head == vk);  // (vk, r, ?) when vk is the head
            QueryDirection dir = tail_slot ? QueryDirection::tail_query
                                           : QueryDirection::head_query;
            const EntityId& ground_truth = tail_slot ? t.tail : t.head;

            std::string cache_key = vk;
            cache_key += '\0';
            cache_key += t.relation;
            cache_key += '\0';
            cache_key += tail_slot ? 't' : 'h';
            auto [it, fresh] = ranking_cache.try_emplace(cache_key);
            if (fresh)
                it->second = model.rank_completions(vk, t.relation, dir,
                                                    model.entity_ids().size());

            std::size_t taken = 0;
            for (const auto& [completion, score] : it->second) {
                if (taken >= n_per_slot) break;
                if (completion == ground_truth) continue;
                // translation models rank the anchor near the top of its own
                // slot (score(v,r,v) = -||r||); a self-loop is conspicuous,
                // not plausible, so it never becomes a candidate
                if (completion == vk) continue;
                Triple cand = tail_slot ? Triple{vk, t.relation, completion}
                                        : Triple{completion, t.relation, vk};
                // a completion that forms any true fact is no adulterant
                if (graph.has_triple(cand)) continue;
                ++taken;
                CandidateAdulterant c;
                c.kind = CandidateKind::edge;
                c.key_node = vk;
                c.triples = {cand};
                c.generator_score = score;
                c.candidate_id =
                    candidate_id_for(CandidateKind::edge, vk, c.triples, std::nullopt);
                dedup.emplace(c.candidate_id, std::move(c));
            }
        }
    }
    std::vector<CandidateAdulterant> out;
    out.reserve(dedup.size());
    for (auto& [id, c] : dedup) out.push_back(std::move(c));
    return out;
}

// ----------------------------------------------------------- node kind

inline std::vector<CandidateAdulterant> gen_node_candidates(
    NameProvider& provider, const KnowledgeGraph& graph, const NodeSet& key_nodes,
    std::vector<std::string>* warnings = nullptr) {
    auto warn = [&](std::string msg) {
        if (warnings) warnings->push_back(std::move(msg));
    };
    std::vector<CandidateAdulterant> out;
    std::set<EntityId> used_fakes;
    for (const EntityId& vk : key_nodes.members) {
        if (!graph.has_entity(vk)) throw not_found_error("key node '" + vk + "' not in graph");
        auto incident = graph.incident(vk);
        if (incident.empty()) {
            warn("key node '" + vk + "' is isolated; degenerate node candidate dropped");
            continue;
        }
        std::vector<std::string> summary;
        for (std::uint32_t idx : incident) {
            if (summary.size() >= 10) break;
            const Triple& t = graph.triples()[idx];
            summary.push_back(t.head + " —[" + t.relation + "]→ " + t.tail);
        }
        std::sort(summary.begin(), summary.end());

        std::string fake;
        try {
            fake = provider.request(vk, summary);
        } catch (const provider_error& e) {
            warn("provider failed for key node '" + vk + "': " + e.what());
            continue;
        }
        if (fake.empty() || fake.find_first_of("\t\n\r") != std::string::npos) {
            warn("provider returned unusable label for key node '" + vk + "'");
            continue;
        }
        std::string base = fake;
        for (int counter = 2; graph.has_entity(fake) || used_fakes.count(fake) || fake == vk;
             ++counter)
            fake = base + " (" + std::to_string(counter) + ")";
        used_fakes.insert(fake);

        CandidateAdulterant c;
        c.kind = CandidateKind::node;
        c.key_node = vk;
        c.fake_entity = fake;
        for (std::uint32_t idx : incident) {
            Triple t = graph.triples()[idx];
            if (t.head == vk) t.head = fake;
            if (t.tail == vk) t.tail = fake;
            c.triples.push_back(std::move(t));
        }
        std::sort(c.triples.begin(), c.triples.end());
        c.candidate_id = candidate_id_for(CandidateKind::node, vk, c.triples, c.fake_entity);
        out.push_back(std::move(c));
    }
    return out;
}

// ----------------------------------------------------------------- pool

struct CandidatePool {
    std::map<std::string, CandidateAdulterant> by_id;
    std::map<EntityId, std::vector<std::string>> by_key_node;  // sorted candidate ids

    std::size_t size() const { return by_id.size(); }

    const CandidateAdulterant& at(const std::string& id) const {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw not_found_error("no candidate " + id);
        return it->second;
    }
};

inline CandidatePool pool_candidates(const std::vector<CandidateAdulterant>& edge_candidates,
                                     const std::vector<CandidateAdulterant>& node_candidates) {
    CandidatePool p;
    for (const auto* group : {&edge_candidates, &node_candidates}) {
        for (const CandidateAdulterant& c : *group) {
            auto [it, fresh] = p.by_id.emplace(c.candidate_id, c);
            if (!fresh)
                throw error("internal: candidate_id collision on " + c.candidate_id);
            p.by_key_node[c.key_node].push_back(c.candidate_id);
        }
    }
    for (auto& [k, ids] : p.by_key_node) std::sort(ids.begin(), ids.end());
    return p;
}

// ------------------------------------------------------------ JSON lines

inline nlohmann::json candidate_to_json(const CandidateAdulterant& c) {
    nlohmann::json j;
    j["kind"] = c.kind == CandidateKind::edge ? "edge" : "node";
    j["key_node"] = c.key_node;
    j["candidate_id"] = c.candidate_id;
    auto& ts = j["triples"] = nlohmann::json::array();
    for (const Triple& t : c.triples)
        ts.push_back({{"head", t.head}, {"relation", t.relation}, {"tail", t.tail}});
    if (c.fake_entity) j["fake_entity"] = *c.fake_entity;
    if (c.generator_score) j["generator_score"] = *c.generator_score;
    return j;
}

inline CandidateAdulterant candidate_from_json(const nlohmann::json& j) {
    CandidateAdulterant c;
    try {
        std::string kind = j.at("kind");
        if (kind != "edge" && kind != "node") throw parse_error("bad candidate kind " + kind);
        c.kind = kind == "edge" ? CandidateKind::edge : CandidateKind::node;
        c.key_node = j.at("key_node");
        c.candidate_id = j.at("candidate_id");
        for (const auto& jt : j.at("triples"))
            c.triples.push_back({jt.at("head"), jt.at("relation"), jt.at("tail")});
        if (j.contains("fake_entity")) c.fake_entity = j["fake_entity"].get<EntityId>();
        if (j.contains("generator_score")) c.generator_score = j["generator_score"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("invalid candidate JSON: ") + e.what());
    }
    return c;
}

inline std::string pool_to_jsonl(const CandidatePool& pool) {
    std::string out;
    for (const auto& [id, c] : pool.by_id) {
        out += candidate_to_json(c).dump();
        out += '\n';
    }
    return out;
}

inline CandidatePool pool_from_jsonl(std::string_view source) {
    std::vector<CandidateAdulterant> all;
    std::size_t line_no = 0, pos = 0;
    while (pos < source.size()) {
        ++line_no;
        std::size_t nl = source.find('\n', pos);
        std::string_view line =
            source.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
        pos = nl == std::string_view::npos ? source.size() : nl + 1;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(std::string("invalid candidate JSON: ") + e.what(), line_no);
        }
        try {
            all.push_back(candidate_from_json(j));
        } catch (const parse_error& e) {
            throw parse_error(e.what(), line_no);
        }
    }
    CandidatePool p;
    for (CandidateAdulterant& c : all) {
        auto id = c.candidate_id;
        auto [it, fresh] = p.by_id.emplace(id, std::move(c));
        if (!fresh) throw parse_error("duplicate candidate_id " + id, 0);
        p.by_key_node[it->second.key_node].push_back(id);
    }
    for (auto& [k, ids] : p.by_key_node) std::sort(ids.begin(), ids.end());
    return p;
}

}  // namespace aura
