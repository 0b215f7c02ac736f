#pragma once
// Sealing: every node and edge gets a provenance bit (0 original,
// 1 adulterant) encrypted under AES-256-GCM with a fresh 12-byte nonce and a
// 16-byte tag, base64-encoded. Both plaintexts are one byte, so ciphertext
// length leaks nothing; random nonces keep equal plaintexts from producing
// equal ciphertexts.
//
// Authorized filtering is hierarchical: node flags are checked first, and a
// dropped node takes all its incident context triples with it *without*
// decrypting their edge flags; surviving edge flags are checked second.
// Authentication failure anywhere is fatal — silent degradation would break
// the fidelity guarantee.

#include <openssl/evp.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <array>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "aura/context.hpp"
#include "aura/error.hpp"
#include "aura/kg.hpp"
#include "aura/sds.hpp"
#include "aura/util.hpp"

namespace aura {

struct OwnerKey {
    std::array<unsigned char, 32> bytes{};

    // short fingerprint for operator sanity checks; reveals nothing useful
    std::string key_id() const {
        unsigned char digest[SHA256_DIGEST_LENGTH];
        SHA256(bytes.data(), bytes.size(), digest);
        return bytes_to_hex(digest, 4);  // first 8 hex chars
    }
};

inline OwnerKey owner_key_from_hex(std::string_view hex) {
    // tolerate surrounding whitespace (key files end with newlines)
    while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r' || hex.back() == ' '))
        hex.remove_suffix(1);
    while (!hex.empty() && (hex.front() == ' ')) hex.remove_prefix(1);
    auto bytes = hex_to_bytes(hex);
    if (!bytes || bytes->size() != 32)
        throw invalid_input("owner key must be exactly 64 hex characters");
    OwnerKey k;
    std::copy(bytes->begin(), bytes->end(), k.bytes.begin());
    return k;
}

inline OwnerKey random_owner_key() {
    OwnerKey k;
    if (RAND_bytes(k.bytes.data(), (int)k.bytes.size()) != 1)
        throw error("system entropy source failed");
    return k;
}

// Fills nonce bytes. The default draws from the OS CSPRNG; a seeded source
// makes sealing reproducible for byte-identical pipeline reruns.
using NonceSource = std::function<void(unsigned char*, std::size_t)>;

inline NonceSource os_nonce_source() {
    return [](unsigned char* p, std::size_t n) {
        if (RAND_bytes(p, (int)n) != 1) throw error("system entropy source failed");
    };
}

inline NonceSource seeded_nonce_source(std::uint64_t seed) {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [rng](unsigned char* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) p[i] = (unsigned char)draw_below(*rng, 256);
    };
}

namespace detail {

constexpr std::size_t kNonceLen = 12, kTagLen = 16, kFlagCtLen = kNonceLen + 1 + kTagLen;

struct EvpCtx {
    EVP_CIPHER_CTX* ctx;
    EvpCtx() : ctx(EVP_CIPHER_CTX_new()) {
        if (!ctx) throw error("EVP context allocation failed");
    }
    ~EvpCtx() { EVP_CIPHER_CTX_free(ctx); }
    EvpCtx(const EvpCtx&) = delete;
    EvpCtx& operator=(const EvpCtx&) = delete;
};

}  // namespace detail

// base64( nonce(12) || ciphertext(1) || tag(16) ), always 40 chars
inline std::string encrypt_flag(Provenance flag, const OwnerKey& key,
                                const unsigned char nonce[12]) {
    detail::EvpCtx c;
    if (EVP_EncryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, detail::kNonceLen, nullptr) != 1 ||
        EVP_EncryptInit_ex(c.ctx, nullptr, nullptr, key.bytes.data(), nonce) != 1)
        throw error("cipher init failed");
    unsigned char plain = flag == Provenance::adulterant ? 1 : 0;
    unsigned char buf[detail::kFlagCtLen];
    std::memcpy(buf, nonce, detail::kNonceLen);
    int len = 0;
    if (EVP_EncryptUpdate(c.ctx, buf + detail::kNonceLen, &len, &plain, 1) != 1 || len != 1)
        throw error("cipher update failed");
    if (EVP_EncryptFinal_ex(c.ctx, buf + detail::kNonceLen + 1, &len) != 1)
        throw error("cipher final failed");
    if (EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_GET_TAG, detail::kTagLen,
                            buf + detail::kNonceLen + 1) != 1)
        throw error("tag extraction failed");
    return base64_encode(buf, detail::kFlagCtLen);
}

// Authenticated decryption. Malformed base64/length -> parse_error; failed
// authentication (wrong key, tampering) -> auth_error. Never a wrong flag.
inline Provenance decrypt_flag(const std::string& ciphertext, const OwnerKey& key) {
    auto raw = base64_decode(ciphertext);
    if (!raw || raw->size() != detail::kFlagCtLen)
        throw parse_error("flag ciphertext is not 29 base64-decoded bytes");
    const unsigned char* nonce = raw->data();
    const unsigned char ct = (*raw)[detail::kNonceLen];
    unsigned char tag[detail::kTagLen];
    std::memcpy(tag, raw->data() + detail::kNonceLen + 1, detail::kTagLen);

    detail::EvpCtx c;
    if (EVP_DecryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
        EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_IVLEN, detail::kNonceLen, nullptr) != 1 ||
        EVP_DecryptInit_ex(c.ctx, nullptr, nullptr, key.bytes.data(), nonce) != 1)
        throw error("cipher init failed");
    unsigned char plain = 0xff;
    int len = 0;
    if (EVP_DecryptUpdate(c.ctx, &plain, &len, &ct, 1) != 1) throw error("cipher update failed");
    if (EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_TAG, detail::kTagLen, tag) != 1)
        throw error("tag set failed");
    unsigned char dummy;
    if (EVP_DecryptFinal_ex(c.ctx, &dummy, &len) != 1)
        throw auth_error("flag authentication failed (wrong key or tampered data)");
    if (plain > 1) throw parse_error("authenticated flag byte out of range");
    return plain ? Provenance::adulterant : Provenance::original;
}

struct SealedGraph {
    KnowledgeGraph graph;  // originals + adulterants, provenance present in memory
    FlagTable flags;
};

// Seals every node and edge of `graph` with its provenance bit. The
// adulterant set is cross-checked against the graph's provenance so a
// mismatched audit trail cannot silently mislabel elements.
inline SealedGraph seal(const KnowledgeGraph& graph, const AdulterantSet& adulterants,
                        const OwnerKey& key, const std::string& property_name = "remark",
                        const NonceSource& nonces = os_nonce_source()) {
    if (property_name.empty()) throw invalid_input("property name must be non-empty");
    for (const auto& [vk, c] : adulterants.chosen) {
        for (const Triple& t : c.triples) {
            if (!graph.has_triple(t))
                throw invalid_input("adulterant triple " + triple_key(t) +
                                    " missing from graph (inject before sealing)");
            if (graph.triple_provenance(t) != Provenance::adulterant)
                throw invalid_input("triple " + triple_key(t) +
                                    " lacks adulterant provenance");
        }
        if (c.fake_entity) {
            if (!graph.has_entity(*c.fake_entity) ||
                graph.entity_provenance(*c.fake_entity) != Provenance::adulterant)
                throw invalid_input("fake entity '" + *c.fake_entity +
                                    "' missing adulterant provenance");
        }
    }

    SealedGraph sg;
    sg.graph = graph;
    sg.flags.property_name = property_name;
    sg.flags.key_id = key.key_id();
    std::set<std::array<unsigned char, detail::kNonceLen>> used;
    auto fresh_nonce = [&](unsigned char* out) {
        std::array<unsigned char, detail::kNonceLen> n;
        do {
            nonces(n.data(), n.size());
        } while (!used.insert(n).second);
        std::memcpy(out, n.data(), n.size());
    };
    unsigned char nonce[detail::kNonceLen];
    for (const EntityId& e : graph.entities()) {
        fresh_nonce(nonce);
        sg.flags.node_flags[e] = encrypt_flag(graph.entity_provenance(e), key, nonce);
    }
    for (const Triple& t : graph.triples()) {
        fresh_nonce(nonce);
        sg.flags.triple_flags[triple_key(t)] = encrypt_flag(graph.triple_provenance(t), key, nonce);
    }
    return sg;
}

// Decrypts every flag and rebuilds the clean (pre-injection) graph.
inline KnowledgeGraph unseal_graph(const SealedGraph& sealed, const OwnerKey& key) {
    GraphBuilder b;
    for (const EntityId& e : sealed.graph.entities())
        if (decrypt_flag(sealed.flags.node_flag(e), key) == Provenance::original) b.add_entity(e);
    for (const Triple& t : sealed.graph.triples())
        if (decrypt_flag(sealed.flags.triple_flag(t), key) == Provenance::original)
            b.add_triple(t);
    return b.build();
}

struct FilterStats {
    std::size_t decryptions = 0;
    std::size_t nodes_dropped = 0;
    std::size_t triples_dropped = 0;
};

// Hierarchical authorized filter. Stage 1: decrypt node flags, drop
// adulterated nodes and every triple touching them (their edge flags are
// never decrypted). Stage 2: decrypt remaining edge flags, drop adulterated
// triples.
inline RetrievalContext filter_context(const RetrievalContext& ctx, const OwnerKey& key,
                                       FilterStats* stats = nullptr) {
    FilterStats local;
    RetrievalContext out;
    out.query = ctx.query;
    out.retriever = ctx.retriever;

    std::set<EntityId> dropped;
    for (const auto& [e, flag] : ctx.nodes) {
        if (flag.empty()) throw invalid_input("context node '" + e + "' carries no flag");
        ++local.decryptions;
        if (decrypt_flag(flag, key) == Provenance::adulterant) {
            dropped.insert(e);
            ++local.nodes_dropped;
        } else {
            out.nodes.emplace(e, flag);
        }
    }
    for (const auto& [t, flag] : ctx.triples) {
        if (dropped.count(t.head) || dropped.count(t.tail)) {
            ++local.triples_dropped;  // hierarchical: no decryption spent
            continue;
        }
        if (flag.empty())
            throw invalid_input("context triple " + triple_key(t) + " carries no flag");
        ++local.decryptions;
        if (decrypt_flag(flag, key) == Provenance::adulterant) {
            ++local.triples_dropped;
        } else {
            out.triples.emplace(t, flag);
        }
    }
    if (stats) *stats = local;
    return out;
}

// ------------------------------------------------------- file round trip

// Sealed property-json: ordinary graph file whose per-element properties
// carry the flag under an inconspicuous name. Only key_id is advertised.
inline std::string sealed_to_property_json(const SealedGraph& sealed) {
    PropertyAnnotations ann;
    ann.header["key_id"] = sealed.flags.key_id;
    const std::string& prop = sealed.flags.property_name;
    ann.entity_props = [&](const EntityId& e) {
        return std::map<std::string, std::string>{{prop, sealed.flags.node_flag(e)}};
    };
    ann.triple_props = [&](const Triple& t) {
        return std::map<std::string, std::string>{{prop, sealed.flags.triple_flag(t)}};
    };
    return to_property_json(sealed.graph, ann);
}

inline SealedGraph sealed_from_property_json(std::string_view source,
                                             const std::string& property_name = "remark") {
    PropertyGraphFile file = parse_property_json(source);
    SealedGraph sg;
    sg.graph = std::move(file.graph);
    sg.flags.property_name = property_name;
    auto hdr = file.header.find("key_id");
    if (hdr != file.header.end()) sg.flags.key_id = hdr->second;
    for (const EntityId& e : sg.graph.entities()) {
        auto pit = file.entity_props.find(e);
        if (pit == file.entity_props.end() || !pit->second.count(property_name))
            throw parse_error("node '" + e + "' missing sealed property '" + property_name + "'");
        sg.flags.node_flags[e] = pit->second.at(property_name);
    }
    for (const Triple& t : sg.graph.triples()) {
        auto pit = file.triple_props.find(triple_key(t));
        if (pit == file.triple_props.end() || !pit->second.count(property_name))
            throw parse_error("triple " + triple_key(t) + " missing sealed property '" +
                              property_name + "'");
        sg.flags.triple_flags[triple_key(t)] = pit->second.at(property_name);
    }
    return sg;
}

}  // namespace aura
