// End-to-end walkthrough on a pocket-sized movie graph: pick key nodes,
// train a link predictor, generate and score candidate adulterants, inject,
// seal, then answer the same question with and without the owner key.
//
// Every stage is seeded, so the output is identical on every run.

#include <iostream>

#include "aura/genpool.hpp"
#include "aura/kge.hpp"
#include "aura/mvc.hpp"
#include "aura/sds.hpp"
#include "aura/seal.hpp"

int main() {
    aura::GraphBuilder b;
    b.add_triple({"Inception", "directed_by", "Nolan"});
    b.add_triple({"Inception", "released_in", "2010"});
    b.add_triple({"Inception", "starring", "DiCaprio"});
    b.add_triple({"Tenet", "directed_by", "Nolan"});
    b.add_triple({"Tenet", "released_in", "2020"});
    b.add_triple({"Interstellar", "directed_by", "Nolan"});
    b.add_triple({"Interstellar", "released_in", "2014"});
    b.add_triple({"Memento", "directed_by", "Nolan"});
    b.add_triple({"Memento", "released_in", "2000"});
    b.add_triple({"Memento", "starring", "Pearce"});
    auto clean = b.build();
    std::cout << "clean graph: " << clean.num_triples() << " triples, "
              << clean.num_entities() << " entities\n";

    // 1. Key nodes: the smallest node set touching every edge.
    auto keys = aura::select_key_nodes(clean);
    std::cout << "key nodes (" << keys.method << "):";
    for (const auto& k : keys.members) std::cout << " " << k;
    std::cout << "\n";

    // 2. Link predictor proposes plausible-but-false completions there.
    aura::KgeHyperparams hp;
    hp.dim = 16;
    hp.epochs = 60;
    hp.seed = 3;
    auto model = aura::train(clean, hp);
    aura::MockNameProvider provider(3);
    auto pool = aura::pool_candidates(aura::gen_edge_candidates(model, clean, keys, 1),
                                      aura::gen_node_candidates(provider, clean, keys));
    std::cout << "candidate pool: " << pool.size() << " candidates\n";

    // 3. Keep the candidate that displaces answers the most per key node.
    auto questions = aura::gen_scoring_questions(clean, keys, 4);
    auto adulterants = aura::select_adulterants(pool, questions, clean);
    for (const auto& [node, cand] : adulterants.chosen)
        for (const auto& t : cand.triples)
            std::cout << "adulterant at " << node << ": (" << t.head << ", " << t.relation
                      << ", " << t.tail << ")\n";

    // 4. Inject and seal: every node and edge gets an encrypted provenance bit.
    auto published = aura::inject(clean, adulterants);
    auto key = aura::owner_key_from_hex(
        "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f");
    auto sealed = aura::seal(published, adulterants, key, "remark", aura::seeded_nonce_source(11));
    std::cout << "sealed " << sealed.flags.node_flags.size() << " node flags and "
              << sealed.flags.triple_flags.size() << " triple flags (key id "
              << sealed.flags.key_id << ")\n";

    // 5. Same question, two views.
    aura::Question q;
    q.text = "What is the directed_by of Inception?";
    q.anchor_entity = "Inception";
    q.relation_path = {"directed_by"};

    aura::AnswerPipeline answerer;
    auto ctx = answerer.retrieve(q, sealed.graph, &sealed.flags);
    std::cout << "\nQ: " << q.text << "\n";
    std::cout << "unauthorized answer: " << aura::extract_answer(q, ctx) << "\n";

    aura::FilterStats stats;
    auto filtered = aura::filter_context(ctx, key, &stats);
    std::cout << "authorized answer:   " << aura::extract_answer(q, filtered) << " ("
              << stats.triples_dropped << " adulterated triple(s) filtered out)\n";
    return 0;
}
