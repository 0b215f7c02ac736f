// Acceptance gate: eleven end-to-end checks over the whole toolkit, each
// printed as a single PASS/FAIL line with the measured numbers. The binary
// exits nonzero if any check fails, so it slots directly into ctest.
//
// The checks are intentionally heavier than the unit suite: exhaustive
// brute-force cross-checks, thousand-graph sweeps, full pipeline runs on
// multi-thousand-triple corpora and a 50k-triple latency benchmark.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "aura/bench.hpp"
#include "aura/genpool.hpp"
#include "aura/kge.hpp"
#include "aura/mvc.hpp"
#include "aura/redteam.hpp"
#include "aura/sds.hpp"
#include "aura/seal.hpp"
#include "support/synth.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw aura::not_found_error("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path scratch_root() {
    auto p = std::filesystem::temp_directory_path() / "aura_acceptance";
    return p;
}

// ------------------------------------------------------- 1. exact vs brute

// Exhaustive minimum-cover search over all vertex subsets; only viable for
// tiny graphs, which is exactly what makes it a trustworthy oracle.
std::size_t brute_force_mvc(const aura::KnowledgeGraph& g) {
    const auto& ents = g.entities();
    std::size_t n = ents.size();
    if (n > 16) throw aura::invalid_input("brute force capped at 16 nodes");
    std::unordered_map<std::string, unsigned> index;
    for (unsigned i = 0; i < n; ++i) index[ents[i]] = i;
    std::set<std::uint32_t> edges;
    for (const aura::Triple& t : g.triples()) {
        unsigned u = index[t.head], v = index[t.tail];
        if (u != v) edges.insert((1u << u) | (1u << v));
    }
    std::size_t best = n;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if ((std::size_t)std::popcount(mask) >= best) continue;
        bool covers = true;
        for (std::uint32_t e : edges)
            if ((mask & e) == 0) {
                covers = false;
                break;
            }
        if (covers) best = std::popcount(mask);
    }
    return best;
}

Outcome check_exact_matches_brute_force() {
    auto t0 = Clock::now();
    int agree = 0;
    const int runs = 300;
    for (int seed = 0; seed < runs; ++seed) {
        int n = 4 + seed % 13;                    // 4..16 nodes
        double p = 0.15 + 0.05 * (seed % 12);     // 0.15..0.70
        auto g = synth::er_kg(n, p, (std::uint64_t)seed);
        std::size_t exact = aura::exact_mvc(g).objective();
        std::size_t brute = brute_force_mvc(g);
        if (exact == brute) ++agree;
    }
    double elapsed = seconds_since(t0);
    Outcome o;
    o.pass = agree == runs && elapsed < 10.0;
    o.detail = fmt("exact solver vs brute force: %d/%d optimal in %.2fs (budget 10s)", agree,
                   runs, elapsed);
    return o;
}

// -------------------------------------------------- 2. covers always verify

Outcome check_all_methods_verify() {
    int verified = 0;
    const int runs = 1000;
    for (int seed = 0; seed < runs; ++seed) {
        int n = 2 + seed % 19;                  // 2..20 nodes
        double p = 0.05 + 0.05 * (seed % 10);   // 0.05..0.50
        auto g = synth::er_kg(n, p, (std::uint64_t)seed);
        aura::NodeSet covers[4] = {
            aura::exact_mvc(g),
            aura::malatya_mvc(g),
            aura::baseline_mvc(g, aura::BaselineStrategy::degree_greedy, (std::uint64_t)seed),
            aura::baseline_mvc(g, aura::BaselineStrategy::edge_greedy, (std::uint64_t)seed),
        };
        for (const auto& c : covers)
            if (aura::verify_cover(g, c)) ++verified;
    }
    Outcome o;
    o.pass = verified == 4 * runs;
    o.detail = fmt("cover verification: %d/%d node sets verified across 4 methods on %d graphs",
                   verified, 4 * runs, runs);
    return o;
}

// ------------------------------------------- 3. centrality vs greedy quality

Outcome check_centrality_beats_greedy() {
    const int runs = 200;
    int le_degree = 0, le_edge = 0;
    for (int seed = 0; seed < runs; ++seed) {
        auto g = synth::er_kg(200, 0.05, (std::uint64_t)seed);
        std::size_t m = aura::malatya_mvc(g).objective();
        std::size_t d =
            aura::baseline_mvc(g, aura::BaselineStrategy::degree_greedy, (std::uint64_t)seed)
                .objective();
        std::size_t e =
            aura::baseline_mvc(g, aura::BaselineStrategy::edge_greedy, (std::uint64_t)seed)
                .objective();
        if (m <= d) ++le_degree;
        if (m <= e) ++le_edge;
    }
    Outcome o;
    o.pass = le_degree >= (int)(0.90 * runs) && le_edge >= (int)(0.95 * runs);
    o.detail = fmt("centrality cover <= degree-greedy on %d/%d (need 180), <= edge-greedy on "
                   "%d/%d (need 190)",
                   le_degree, runs, le_edge, runs);
    return o;
}

// ----------------------------------------------------- 4. link predictor

Outcome check_link_predictor_sanity() {
    auto t0 = Clock::now();
    auto g = synth::clustered_kg(300, 8, 2000, 6, 77);

    std::vector<aura::Triple> all = g.triples();
    std::mt19937_64 rng(aura::derive_seed(77, "holdout"));
    aura::shuffle_seeded(all, rng);
    std::size_t held = all.size() / 10;  // 10% held out
    std::vector<aura::Triple> test(all.begin(), all.begin() + held);
    aura::GraphBuilder b;
    for (std::size_t i = held; i < all.size(); ++i) b.add_triple(all[i]);
    auto train_graph = b.build();

    aura::KgeHyperparams hp;
    hp.dim = 32;
    hp.epochs = 30;
    hp.seed = 13;
    aura::TrainTrace trace;
    auto model = aura::train(train_graph, hp, &trace);

    bool rising = trace.mean_positive_score.size() >= 5;
    for (std::size_t i = 1; rising && i < 5; ++i)
        rising = trace.mean_positive_score[i] > trace.mean_positive_score[i - 1];

    std::vector<aura::Triple> evaluable;  // endpoints must exist in the training vocabulary
    for (const auto& t : test)
        if (model.has_entity(t.head) && model.has_entity(t.tail) && model.has_relation(t.relation))
            evaluable.push_back(t);
    double h10 = aura::hits_at_k(model, evaluable, 10);
    double random_expect = 10.0 / (double)model.entity_ids().size();
    double elapsed = seconds_since(t0);

    Outcome o;
    o.pass = h10 >= 3.0 * random_expect && rising && elapsed < 60.0;
    o.detail = fmt("hits@10 %.3f vs 3x random %.3f on %zu held-out triples; first-5-epoch score "
                   "%s; %.1fs (budget 60s)",
                   h10, 3.0 * random_expect, evaluable.size(),
                   rising ? "strictly rising" : "NOT rising", elapsed);
    return o;
}

// ------------------------------------- 5/6/7/11. full pipeline on 5k triples

// Three full pipeline runs on a 5,000-triple star-forest corpus: seed 42
// twice (reproducibility) and seed 43 once (fidelity must hold per seed).
struct PipelineRuns {
    aura::PipelineResult a, b, repeat_a;
    std::string sealed_a, metrics_a, sealed_repeat, metrics_repeat;
};

const PipelineRuns& pipeline_runs() {
    static PipelineRuns runs = [] {
        auto root = scratch_root();
        std::filesystem::remove_all(root);
        std::filesystem::create_directories(root);
        auto corpus = synth::star_forest_kg(500, 10, 5);  // 5,000 triples
        std::string input = (root / "corpus.tsv").string();
        {
            std::ofstream out(input, std::ios::binary);
            out << aura::to_tsv(corpus);
        }
        aura::PipelineConfig cfg;
        cfg.input = input;
        cfg.seed = 42;
        cfg.kge.dim = 32;
        cfg.kge.epochs = 30;
        cfg.scoring_per_node = 3;
        cfg.eval_per_node = 1;

        PipelineRuns r;
        cfg.output_dir = (root / "run_a").string();
        r.a = aura::run_pipeline(cfg);
        cfg.output_dir = (root / "run_a_repeat").string();
        r.repeat_a = aura::run_pipeline(cfg);
        cfg.output_dir = (root / "run_b").string();
        cfg.seed = 43;
        r.b = aura::run_pipeline(cfg);

        r.sealed_a = slurp(r.a.artifacts.at("sealed"));
        r.metrics_a = slurp(r.a.artifacts.at("metrics"));
        r.sealed_repeat = slurp(r.repeat_a.artifacts.at("sealed"));
        r.metrics_repeat = slurp(r.repeat_a.artifacts.at("metrics"));
        return r;
    }();
    return runs;
}

Outcome check_poisoned_retrieval_rate() {
    const auto& m = pipeline_runs().a.metrics;
    Outcome o;
    o.pass = m.arr == 1.0 && m.questions > 0;
    o.detail = fmt("unauthorized poisoned-context rate %.4f on %zu one-hop questions at key "
                   "nodes (need exactly 1.0)",
                   m.arr, m.questions);
    return o;
}

Outcome check_authorized_fidelity() {
    const auto& ma = pipeline_runs().a.metrics;
    const auto& mb = pipeline_runs().b.metrics;
    Outcome o;
    o.pass = ma.cdpa == 1.0 && ma.cira == 1.0 && mb.cdpa == 1.0 && mb.cira == 1.0;
    o.detail = fmt("authorized answer/context agreement: seed 42 cdpa %.4f cira %.4f, seed 43 "
                   "cdpa %.4f cira %.4f (need exactly 1.0)",
                   ma.cdpa, ma.cira, mb.cdpa, mb.cira);
    return o;
}

Outcome check_hallucination_rate() {
    const auto& m = pipeline_runs().a.metrics;
    Outcome o;
    o.pass = m.hs >= 0.90 && m.baseline_correct > 0;
    o.detail = fmt("unauthorized answers steered off gold on %.4f of %zu baseline-correct "
                   "questions (need >= 0.90)",
                   m.hs, m.baseline_correct);
    return o;
}

Outcome check_reproducibility() {
    const auto& r = pipeline_runs();
    bool sealed_same = r.sealed_a == r.sealed_repeat;
    bool metrics_same = r.metrics_a == r.metrics_repeat;
    Outcome o;
    o.pass = sealed_same && metrics_same;
    o.detail = fmt("same config+seed rerun: sealed graph %s (%zu bytes), metrics %s (%zu bytes)",
                   sealed_same ? "byte-identical" : "DIFFERS", r.sealed_a.size(),
                   metrics_same ? "byte-identical" : "DIFFERS", r.metrics_a.size());
    return o;
}

// ----------------------------------------------------- 8. flag cryptography

Outcome check_flag_crypto() {
    auto key = aura::owner_key_from_hex(
        "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f");
    auto nonces = aura::seeded_nonce_source(99);
    const int total = 10000;

    // Round-trip and length uniformity over 10,000 flags.
    std::vector<std::string> cts;
    std::vector<int> labels;
    cts.reserve(total);
    int roundtrip_ok = 0;
    std::set<std::size_t> lengths;
    unsigned char nonce[12];
    for (int i = 0; i < total; ++i) {
        auto flag = i % 2 ? aura::Provenance::adulterant : aura::Provenance::original;
        nonces(nonce, sizeof nonce);
        std::string ct = aura::encrypt_flag(flag, key, nonce);
        lengths.insert(ct.size());
        if (aura::decrypt_flag(ct, key) == flag) ++roundtrip_ok;
        cts.push_back(std::move(ct));
        labels.push_back(i % 2);
    }

    // 1,000 wrong keys must all fail authentication, never mis-decode.
    int silent_wrong = 0;
    std::mt19937_64 rng(aura::derive_seed(5, "wrong-keys"));
    for (int i = 0; i < 1000; ++i) {
        aura::OwnerKey wrong;
        for (auto& byte : wrong.bytes) byte = (unsigned char)aura::draw_below(rng, 256);
        if (wrong.bytes == key.bytes) continue;
        try {
            (void)aura::decrypt_flag(cts[i], wrong);
            ++silent_wrong;  // decoded without authentication failure
        } catch (const aura::auth_error&) {
        }
    }

    // A naive-Bayes byte-frequency classifier on the raw ciphertext bytes
    // must stay at chance: 5,000 train, 5,000 held out.
    double freq[2][256];
    double class_total[2] = {256.0, 256.0};  // Laplace smoothing
    for (auto& row : freq)
        for (double& cell : row) cell = 1.0;
    for (int i = 0; i < 5000; ++i) {
        auto raw = aura::base64_decode(cts[i]);
        for (unsigned char byte : *raw) {
            freq[labels[i]][byte] += 1.0;
            class_total[labels[i]] += 1.0;
        }
    }
    int correct = 0;
    for (int i = 5000; i < total; ++i) {
        auto raw = aura::base64_decode(cts[i]);
        double score[2] = {0.0, 0.0};
        for (unsigned char byte : *raw)
            for (int c = 0; c < 2; ++c) score[c] += std::log(freq[c][byte] / class_total[c]);
        int pred = score[1] > score[0] ? 1 : 0;
        if (pred == labels[i]) ++correct;
    }
    double accuracy = correct / 5000.0;

    Outcome o;
    o.pass = roundtrip_ok == total && silent_wrong == 0 && lengths.size() == 1 &&
             accuracy >= 0.47 && accuracy <= 0.53;
    o.detail = fmt("roundtrip %d/%d, silent wrong-key decodes %d/1000, %zu distinct ciphertext "
                   "length(s), byte-frequency classifier %.4f (need 0.50 +/- 0.03)",
                   roundtrip_ok, total, silent_wrong, lengths.size(), accuracy);
    return o;
}

// -------------------------------------------------- 9. purge robustness

// Embedding purge is evaluated on a cluster-structured corpus: relations tie
// cluster pairs together, so in-pattern fabrications score like true triples
// even under a model the attacker trains on the original graph. Disjoint
// toy topologies would make the purge look artificially strong.
Outcome check_purge_robustness() {
    auto clean = synth::clustered_kg(600, 12, 5000, 6, 11);

    aura::KgeHyperparams gen_hp;
    gen_hp.dim = 32;
    gen_hp.epochs = 40;
    gen_hp.seed = 1;
    auto gen_model = aura::train(clean, gen_hp);

    auto cover = aura::malatya_mvc(clean);
    aura::NodeSet keys;  // 60 key nodes keep the injection rate near 1%
    keys.method = cover.method;
    keys.members.assign(cover.members.begin(),
                        cover.members.begin() + std::min<std::size_t>(60, cover.members.size()));
    auto pool = aura::pool_candidates(aura::gen_edge_candidates(gen_model, clean, keys, 1), {});
    auto questions = aura::gen_scoring_questions(clean, keys, 3);
    auto adults = aura::select_adulterants(pool, questions, clean);
    auto adulterated = aura::inject(clean, adults);
    auto truth = aura::adulterant_triple_ids(adulterated);
    if (truth.empty()) return {false, "no adulterants were injected; nothing to purge"};

    // Worst case for the defender: the attacker trains on the original graph.
    double min_rr = 1.0;
    aura::EmbeddingModel first_attack;
    for (int s = 0; s < 5; ++s) {
        aura::KgeHyperparams hp;
        hp.dim = 32;
        hp.epochs = 40;
        hp.seed = 100 + (std::uint64_t)s;
        auto attack = aura::train(clean, hp);
        auto purge = aura::kge_purge(adulterated, attack, 0.2);
        aura::score_report(purge.report, truth);
        min_rr = std::min(min_rr, purge.report.retain_rate);
        if (s == 0) first_attack = std::move(attack);
    }

    bool monotone = true;
    double prev = 1.0;
    for (double q = 0.0; q < 0.95 && monotone; q += 0.1) {
        auto purge = aura::kge_purge(adulterated, first_attack, q);
        aura::score_report(purge.report, truth);
        if (purge.report.retain_rate > prev + 1e-12) monotone = false;
        prev = purge.report.retain_rate;
    }

    Outcome o;
    o.pass = min_rr >= 0.5 && monotone;
    o.detail = fmt("embedding purge at quantile 0.2: min retain rate %.3f over 5 original-graph "
                   "models (need >= 0.5), %zu adulterants; retain %s in quantile",
                   min_rr, truth.size(), monotone ? "monotone non-increasing" : "NOT monotone");
    return o;
}

// ------------------------------------------------------------- 10. latency

Outcome check_filtering_latency() {
    auto clean = synth::star_forest_kg(1000, 50, 5);  // 50,000 triples
    aura::Injection payload;
    for (int i = 0; i < 100; ++i) {
        payload.triples.push_back({synth::padded("hub_", i), synth::padded("rel_", i % 5, 2),
                                   synth::padded("leaf_", (i + 37) % 1000) + "_0"});
    }
    auto adulterated = aura::inject(clean, payload);
    auto key = aura::owner_key_from_hex(
        "202122232425262728292a2b2c2d2e2f303132333435363738393a3b3c3d3e3f");
    auto sealed =
        aura::seal(adulterated, aura::AdulterantSet{}, key, "remark", aura::seeded_nonce_source(7));

    std::vector<aura::Question> questions;
    for (int i = 0; i < 30; ++i) {
        aura::Question q;
        std::string hub = synth::padded("hub_", i * 17 % 1000);
        std::string rel = synth::padded("rel_", (i * 17 % 1000) % 5, 2);
        q.text = "What is the " + rel + " of " + hub + "?";
        q.anchor_entity = hub;
        q.relation_path = {rel};
        questions.push_back(std::move(q));
    }
    auto lat = aura::measure_latency(sealed, key, questions, aura::RetrieverKind::dense, 10, 8);

    Outcome o;
    o.pass = lat.overhead < 0.15 && lat.decrypt_median_ms < 0.1;
    o.detail = fmt("50k-triple dense retrieval: clean %.3fms vs filtered %.3fms median, overhead "
                   "%.1f%% (need < 15%%); per-flag decrypt %.4fms median (need < 0.1ms)",
                   lat.clean_median_ms, lat.filtered_median_ms, 100.0 * lat.overhead,
                   lat.decrypt_median_ms);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "exact cover optimality", check_exact_matches_brute_force},
        {2, "cover validity", check_all_methods_verify},
        {3, "centrality cover quality", check_centrality_beats_greedy},
        {4, "link predictor sanity", check_link_predictor_sanity},
        {5, "poisoned retrieval rate", check_poisoned_retrieval_rate},
        {6, "authorized fidelity", check_authorized_fidelity},
        {7, "hallucination rate", check_hallucination_rate},
        {8, "flag cryptography", check_flag_crypto},
        {9, "purge robustness", check_purge_robustness},
        {10, "filtering latency", check_filtering_latency},
        {11, "reproducibility", check_reproducibility},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failures;
        std::printf("[%2d] %s  %s — %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %zu/%zu criteria passed\n", criteria.size() - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
