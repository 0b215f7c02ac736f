#pragma once
// Translational knowledge-graph embedding (TransE). Plausibility of a triple
// is score(h,r,t) = -||h + r - t||_2; training minimizes the margin ranking
// loss max(0, margin + d_pos - d_neg) by SGD with uniform filtered negative
// sampling (corrupt head or tail with probability 1/2, never sampling a true
// triple). Entity vectors are renormalized to unit length after every epoch.
//
// Training is single-threaded and fully seeded: the same (graph, hyperparams)
// yields bit-identical models. Checkpoints store a JSON header plus raw
// little-endian float32 matrices and roundtrip exactly.

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "aura/error.hpp"
#include "aura/kg.hpp"
#include "aura/util.hpp"

namespace aura {

struct KgeHyperparams {
    int dim = 64;
    double margin = 1.0;
    double learning_rate = 0.01;
    int epochs = 200;
    int negatives_per_positive = 1;
    std::uint64_t seed = 0;
};

enum class QueryDirection { tail_query, head_query };

// Per-epoch training telemetry (epoch-end values, after renormalization).
struct TrainTrace {
    std::vector<double> mean_positive_score;
};

class EmbeddingModel {
public:
    EmbeddingModel() = default;

    EmbeddingModel(int dim, std::vector<EntityId> entity_ids,
                   std::vector<RelationId> relation_ids, std::vector<float> entity_vecs,
                   std::vector<float> relation_vecs, KgeHyperparams hp = {})
        : dim_(dim),
          hp_(hp),
          entity_ids_(std::move(entity_ids)),
          relation_ids_(std::move(relation_ids)),
          entity_vecs_(std::move(entity_vecs)),
          relation_vecs_(std::move(relation_vecs)) {
        if (dim_ <= 0) throw invalid_input("embedding dim must be positive");
        if (!std::is_sorted(entity_ids_.begin(), entity_ids_.end()) ||
            !std::is_sorted(relation_ids_.begin(), relation_ids_.end()))
            throw invalid_input("model id lists must be sorted");
        if (entity_vecs_.size() != entity_ids_.size() * (std::size_t)dim_ ||
            relation_vecs_.size() != relation_ids_.size() * (std::size_t)dim_)
            throw invalid_input("vector storage does not match id count * dim");
    }

    int dim() const { return dim_; }
    const KgeHyperparams& hyperparams() const { return hp_; }
    const std::vector<EntityId>& entity_ids() const { return entity_ids_; }
    const std::vector<RelationId>& relation_ids() const { return relation_ids_; }

    bool has_entity(const EntityId& e) const {
        return std::binary_search(entity_ids_.begin(), entity_ids_.end(), e);
    }
    bool has_relation(const RelationId& r) const {
        return std::binary_search(relation_ids_.begin(), relation_ids_.end(), r);
    }

    std::span<const float> entity_vec(const EntityId& e) const {
        return row(entity_vecs_, entity_index(e));
    }
    std::span<const float> relation_vec(const RelationId& r) const {
        return row(relation_vecs_, relation_index(r));
    }

    // score(h,r,t) = -||h + r - t||_2, always <= 0, == 0 iff h + r == t.
    double score(const Triple& t) const {
        auto h = entity_vec(t.head);
        auto r = relation_vec(t.relation);
        auto tt = entity_vec(t.tail);
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) {
            double d = (double)h[i] + r[i] - tt[i];
            s += d * d;
        }
        return -std::sqrt(s);
    }

    // Exhaustively scores every entity as the missing slot of
    // (anchor, relation, ?) or (?, relation, anchor); descending score,
    // ties by lexicographic EntityId; top-k (clamped) returned.
    std::vector<std::pair<EntityId, double>> rank_completions(const EntityId& anchor,
                                                              const RelationId& relation,
                                                              QueryDirection direction,
                                                              std::size_t k) const {
        if (k < 1) throw invalid_input("k must be >= 1");
        auto a = entity_vec(anchor);          // throws on unknown anchor
        auto r = relation_vec(relation);      // throws on unknown relation
        std::vector<double> scores(entity_ids_.size());
        for (std::size_t e = 0; e < entity_ids_.size(); ++e) {
            auto v = row(entity_vecs_, e);
            double s = 0.0;
            for (int i = 0; i < dim_; ++i) {
                double d = (direction == QueryDirection::tail_query)
                               ? (double)a[i] + r[i] - v[i]
                               : (double)v[i] + r[i] - a[i];
                s += d * d;
            }
            scores[e] = -std::sqrt(s);
        }
        std::vector<std::size_t> order(entity_ids_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        // entity_ids_ is sorted, so stable sort by score leaves ties lexicographic
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
        std::vector<std::pair<EntityId, double>> out;
        out.reserve(std::min(k, order.size()));
        for (std::size_t i = 0; i < order.size() && i < k; ++i)
            out.emplace_back(entity_ids_[order[i]], scores[order[i]]);
        return out;
    }

    std::size_t entity_index(const EntityId& e) const {
        auto it = std::lower_bound(entity_ids_.begin(), entity_ids_.end(), e);
        if (it == entity_ids_.end() || *it != e)
            throw not_found_error("entity '" + e + "' unknown to model");
        return (std::size_t)(it - entity_ids_.begin());
    }
    std::size_t relation_index(const RelationId& r) const {
        auto it = std::lower_bound(relation_ids_.begin(), relation_ids_.end(), r);
        if (it == relation_ids_.end() || *it != r)
            throw not_found_error("relation '" + r + "' unknown to model");
        return (std::size_t)(it - relation_ids_.begin());
    }

    const std::vector<float>& entity_matrix() const { return entity_vecs_; }
    const std::vector<float>& relation_matrix() const { return relation_vecs_; }

private:
    friend EmbeddingModel train(const KnowledgeGraph&, const KgeHyperparams&, TrainTrace*);

    std::span<const float> row(const std::vector<float>& m, std::size_t i) const {
        return {m.data() + i * (std::size_t)dim_, (std::size_t)dim_};
    }
    std::span<float> mut_row(std::vector<float>& m, std::size_t i) {
        return {m.data() + i * (std::size_t)dim_, (std::size_t)dim_};
    }

    int dim_ = 0;
    KgeHyperparams hp_;
    std::vector<EntityId> entity_ids_;      // sorted
    std::vector<RelationId> relation_ids_;  // sorted
    std::vector<float> entity_vecs_;        // row-major [n_entities x dim]
    std::vector<float> relation_vecs_;      // row-major [n_relations x dim]
};

namespace detail {

inline void renormalize_rows(std::vector<float>& m, int dim) {
    for (std::size_t off = 0; off < m.size(); off += dim) {
        double n = 0.0;
        for (int i = 0; i < dim; ++i) n += (double)m[off + i] * m[off + i];
        if (n > 0.0) {
            float inv = (float)(1.0 / std::sqrt(n));
            for (int i = 0; i < dim; ++i) m[off + i] *= inv;
        }
    }
}

}  // namespace detail

inline EmbeddingModel train(const KnowledgeGraph& graph, const KgeHyperparams& hp = {},
                            TrainTrace* trace = nullptr) {
    if (graph.num_triples() == 0) throw invalid_input("cannot train on zero triples");
    if (hp.dim <= 0 || hp.epochs < 0 || hp.learning_rate <= 0.0)
        throw invalid_input("bad hyperparameters");

    EmbeddingModel m;
    m.dim_ = hp.dim;
    m.hp_ = hp;
    m.entity_ids_ = graph.entities();
    m.relation_ids_ = graph.relations();
    const std::size_t ne = m.entity_ids_.size(), nr = m.relation_ids_.size();
    const int dim = hp.dim;

    std::mt19937_64 rng(hp.seed);
    const double bound = 6.0 / std::sqrt((double)dim);
    m.entity_vecs_.resize(ne * dim);
    m.relation_vecs_.resize(nr * dim);
    for (auto& x : m.entity_vecs_) x = (float)draw_range(rng, -bound, bound);
    for (auto& x : m.relation_vecs_) x = (float)draw_range(rng, -bound, bound);
    detail::renormalize_rows(m.relation_vecs_, dim);  // relations normalized once at init
    detail::renormalize_rows(m.entity_vecs_, dim);

    // integer views of the positives + membership set for filtered sampling
    struct P {
        std::uint32_t h, r, t;
    };
    std::vector<P> pos;
    pos.reserve(graph.num_triples());
    std::unordered_set<std::uint64_t> truth;
    auto key_of = [&](std::uint64_t h, std::uint64_t r, std::uint64_t t) {
        return (h * nr + r) * ne + t;
    };
    for (const Triple& t : graph.triples()) {
        P p{(std::uint32_t)m.entity_index(t.head), (std::uint32_t)m.relation_index(t.relation),
            (std::uint32_t)m.entity_index(t.tail)};
        pos.push_back(p);
        truth.insert(key_of(p.h, p.r, p.t));
    }

    std::vector<float> upos(dim), uneg(dim);
    std::vector<std::size_t> order(pos.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    auto dist_of = [&](std::uint32_t h, std::uint32_t r, std::uint32_t t, std::vector<float>& u) {
        const float* vh = m.entity_vecs_.data() + (std::size_t)h * dim;
        const float* vr = m.relation_vecs_.data() + (std::size_t)r * dim;
        const float* vt = m.entity_vecs_.data() + (std::size_t)t * dim;
        double s = 0.0;
        for (int i = 0; i < dim; ++i) {
            u[i] = vh[i] + vr[i] - vt[i];
            s += (double)u[i] * u[i];
        }
        return std::sqrt(s);
    };

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        shuffle_seeded(order, rng);
        for (std::size_t oi : order) {
            const P p = pos[oi];
            for (int neg = 0; neg < hp.negatives_per_positive; ++neg) {
                bool corrupt_head = draw_below(rng, 2) == 0;
                std::uint32_t nh = p.h, nt = p.t;
                bool found = false;
                for (int attempt = 0; attempt < 64; ++attempt) {
                    std::uint32_t cand = (std::uint32_t)draw_below(rng, ne);
                    if (corrupt_head) nh = cand; else nt = cand;
                    if (!truth.count(key_of(nh, p.r, nt))) {
                        found = true;
                        break;
                    }
                }
                if (!found) continue;  // graph too dense around this slot; skip

                double dpos = dist_of(p.h, p.r, p.t, upos);
                double dneg = dist_of(nh, p.r, nt, uneg);
                double loss = hp.margin + dpos - dneg;
                if (loss <= 0.0) continue;

                const float lr = (float)hp.learning_rate;
                float ip = dpos > 0.0 ? (float)(1.0 / dpos) : 0.0f;
                float in = dneg > 0.0 ? (float)(1.0 / dneg) : 0.0f;
                float* vh = m.entity_vecs_.data() + (std::size_t)p.h * dim;
                float* vt = m.entity_vecs_.data() + (std::size_t)p.t * dim;
                float* vr = m.relation_vecs_.data() + (std::size_t)p.r * dim;
                float* wh = m.entity_vecs_.data() + (std::size_t)nh * dim;
                float* wt = m.entity_vecs_.data() + (std::size_t)nt * dim;
                for (int i = 0; i < dim; ++i) {
                    float gp = upos[i] * ip;  // d(dpos)/d(h+r-t)
                    float gn = uneg[i] * in;
                    vh[i] -= lr * gp;
                    vr[i] -= lr * gp;
                    vt[i] += lr * gp;
                    wh[i] += lr * gn;
                    vr[i] += lr * gn;
                    wt[i] -= lr * gn;
                }
            }
        }
        detail::renormalize_rows(m.entity_vecs_, dim);
        if (trace) {
            double acc = 0.0;
            std::vector<float> u(dim);
            for (const P& p : pos) acc += -dist_of(p.h, p.r, p.t, u);
            trace->mean_positive_score.push_back(acc / (double)pos.size());
        }
    }
    return m;
}

// Fraction of held-out triples whose true endpoint ranks in the top k when
// the model scores every entity for the corrupted slot; head and tail
// queries both count. Raw (unfiltered) ranks.
inline double hits_at_k(const EmbeddingModel& model, const std::vector<Triple>& held_out,
                        std::size_t k) {
    if (held_out.empty()) throw invalid_input("empty held-out set");
    std::size_t hits = 0, total = 0;
    for (const Triple& t : held_out) {
        for (QueryDirection dir : {QueryDirection::tail_query, QueryDirection::head_query}) {
            const EntityId& anchor = dir == QueryDirection::tail_query ? t.head : t.tail;
            const EntityId& target = dir == QueryDirection::tail_query ? t.tail : t.head;
            auto ranked = model.rank_completions(anchor, t.relation, dir, k);
            for (const auto& [e, s] : ranked)
                if (e == target) {
                    ++hits;
                    break;
                }
            ++total;
        }
    }
    return (double)hits / (double)total;
}

// ----------------------------------------------------------- checkpointing

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((char)((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(std::string_view in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= (std::uint32_t)(unsigned char)in[off + i] << (8 * i);
    return v;
}

inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

}  // namespace detail

inline constexpr std::string_view kKgeMagic = "AURAKGE1";

inline std::string serialize_model(const EmbeddingModel& m) {
    nlohmann::json header;
    header["dim"] = m.dim();
    header["entities"] = m.entity_ids();
    header["relations"] = m.relation_ids();
    const auto& hp = m.hyperparams();
    header["hyperparams"] = {{"margin", hp.margin},
                             {"learning_rate", hp.learning_rate},
                             {"epochs", hp.epochs},
                             {"negatives_per_positive", hp.negatives_per_positive},
                             {"seed", hp.seed},
                             {"dim", hp.dim}};
    std::string hj = header.dump();

    std::string out(kKgeMagic);
    detail::put_u32(out, (std::uint32_t)hj.size());
    out += hj;
    out.reserve(out.size() + 4 * (m.entity_matrix().size() + m.relation_matrix().size()));
    for (float f : m.entity_matrix()) detail::put_f32(out, f);
    for (float f : m.relation_matrix()) detail::put_f32(out, f);
    return out;
}

inline EmbeddingModel deserialize_model(std::string_view bytes) {
    if (bytes.size() < kKgeMagic.size() + 4 || bytes.substr(0, kKgeMagic.size()) != kKgeMagic)
        throw parse_error("not a model checkpoint (bad magic)");
    std::size_t off = kKgeMagic.size();
    std::uint32_t hlen = detail::get_u32(bytes, off);
    off += 4;
    if (off + hlen > bytes.size()) throw parse_error("truncated checkpoint header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(off, hlen));
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad checkpoint header: ") + e.what());
    }
    off += hlen;

    int dim;
    std::vector<EntityId> ents;
    std::vector<RelationId> rels;
    KgeHyperparams hp;
    try {
        dim = header.at("dim");
        ents = header.at("entities").get<std::vector<EntityId>>();
        rels = header.at("relations").get<std::vector<RelationId>>();
        const auto& jh = header.at("hyperparams");
        hp.dim = jh.at("dim");
        hp.margin = jh.at("margin");
        hp.learning_rate = jh.at("learning_rate");
        hp.epochs = jh.at("epochs");
        hp.negatives_per_positive = jh.at("negatives_per_positive");
        hp.seed = jh.at("seed");
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("bad checkpoint header: ") + e.what());
    }

    std::size_t nf = (ents.size() + rels.size()) * (std::size_t)dim;
    if (bytes.size() - off != nf * 4) throw parse_error("checkpoint matrix size mismatch");
    std::vector<float> ev(ents.size() * (std::size_t)dim), rv(rels.size() * (std::size_t)dim);
    for (auto& f : ev) {
        f = std::bit_cast<float>(detail::get_u32(bytes, off));
        off += 4;
    }
    for (auto& f : rv) {
        f = std::bit_cast<float>(detail::get_u32(bytes, off));
        off += 4;
    }
    return EmbeddingModel(dim, std::move(ents), std::move(rels), std::move(ev), std::move(rv), hp);
}

}  // namespace aura
