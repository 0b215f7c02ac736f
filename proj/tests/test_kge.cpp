#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "aura/kge.hpp"
#include "support/synth.hpp"

using namespace aura;

namespace {

EmbeddingModel toy_model() {
    // dim 4, entities {a, b, c}, relation {r}; v_b = v_a + v_r exactly
    std::vector<float> ev = {
        1, 0, 0, 0,  // a
        1, 1, 0, 0,  // b
        0, 0, 1, 0,  // c
    };
    std::vector<float> rv = {0, 1, 0, 0};  // r
    return EmbeddingModel(4, {"a", "b", "c"}, {"r"}, ev, rv);
}

std::pair<std::vector<Triple>, std::vector<Triple>> split_holdout(const KnowledgeGraph& g,
                                                                  double frac,
                                                                  std::uint64_t seed) {
    std::vector<Triple> all = g.triples();
    std::mt19937_64 rng(seed);
    shuffle_seeded(all, rng);
    std::size_t n_test = (std::size_t)(frac * all.size());
    std::vector<Triple> test(all.begin(), all.begin() + n_test);
    std::vector<Triple> train_set(all.begin() + n_test, all.end());
    return {train_set, test};
}

KnowledgeGraph graph_of(const std::vector<Triple>& ts) {
    GraphBuilder b;
    for (const auto& t : ts) b.add_triple(t);
    return b.build();
}

}  // namespace

TEST_CASE("score is the negative translation distance", "[kge]") {
    auto m = toy_model();
    REQUIRE(m.score({"a", "r", "b"}) == 0.0);                     // h + r = t exactly
    REQUIRE(m.score({"b", "r", "a"}) == Catch::Approx(-std::sqrt(0.0 + 4.0 + 0.0)));
    // h + r - t = (3,4,0,0) -> score -5
    EmbeddingModel m2(4, {"x", "y"}, {"r"}, {3, 4, 0, 0, 0, 0, 0, 0}, {0, 0, 0, 0});
    REQUIRE(m2.score({"x", "r", "y"}) == -5.0);
    REQUIRE_THROWS_AS(m.score({"ghost", "r", "b"}), not_found_error);
    REQUIRE_THROWS_AS(m.score({"a", "ghost", "b"}), not_found_error);
}

TEST_CASE("scores are never positive", "[kge]") {
    auto g = synth::clustered_kg(40, 4, 120, 4, 3);
    KgeHyperparams hp;
    hp.dim = 16;
    hp.epochs = 5;
    auto m = train(g, hp);
    for (const auto& t : g.triples()) REQUIRE(m.score(t) <= 0.0);
}

TEST_CASE("rank_completions returns descending scores with lexicographic ties", "[kge]") {
    auto m = toy_model();
    auto top = m.rank_completions("a", "r", QueryDirection::tail_query, 1);
    REQUIRE(top.size() == 1);
    REQUIRE(top[0].first == "b");
    REQUIRE(top[0].second == 0.0);

    // k larger than entity count clamps to the full ranking
    auto full = m.rank_completions("a", "r", QueryDirection::tail_query, 99);
    REQUIRE(full.size() == 3);
    REQUIRE(std::is_sorted(full.begin(), full.end(),
                           [](auto& x, auto& y) { return x.second > y.second; }));

    // head query: which h makes (h, r, a) plausible?
    auto heads = m.rank_completions("a", "r", QueryDirection::head_query, 3);
    REQUIRE(heads.size() == 3);

    REQUIRE_THROWS_AS(m.rank_completions("nope", "r", QueryDirection::tail_query, 1),
                      not_found_error);
    REQUIRE_THROWS_AS(m.rank_completions("a", "nope", QueryDirection::tail_query, 1),
                      not_found_error);
    REQUIRE_THROWS_AS(m.rank_completions("a", "r", QueryDirection::tail_query, 0), invalid_input);

    // exact ties break lexicographically: duplicate vectors
    EmbeddingModel dup(2, {"aa", "zz"}, {"r"}, {1, 0, 1, 0}, {0, 0});
    auto tied = dup.rank_completions("aa", "r", QueryDirection::tail_query, 2);
    REQUIRE(tied[0].first == "aa");
    REQUIRE(tied[0].second == tied[1].second);
}

TEST_CASE("rank_completions agrees with an exhaustive-scan oracle", "[kge]") {
    auto g = synth::clustered_kg(30, 3, 90, 3, 11);
    KgeHyperparams hp;
    hp.dim = 8;
    hp.epochs = 3;
    auto m = train(g, hp);
    for (const auto& anchor : {g.entities()[0], g.entities()[7]}) {
        for (auto dir : {QueryDirection::tail_query, QueryDirection::head_query}) {
            auto got = m.rank_completions(anchor, g.relations()[0], dir, m.entity_ids().size());
            // independent oracle: score each entity via the public score()
            std::vector<std::pair<EntityId, double>> want;
            for (const auto& e : m.entity_ids()) {
                Triple t = dir == QueryDirection::tail_query
                               ? Triple{anchor, g.relations()[0], e}
                               : Triple{e, g.relations()[0], anchor};
                want.emplace_back(e, m.score(t));
            }
            std::stable_sort(want.begin(), want.end(),
                             [](auto& x, auto& y) { return x.second > y.second; });
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                REQUIRE(got[i].first == want[i].first);
                REQUIRE(got[i].second == Catch::Approx(want[i].second).margin(1e-12));
            }
        }
    }
}

TEST_CASE("training pulls a positive ahead of its reversal", "[kge]") {
    GraphBuilder b;
    b.add_triple({"a", "r", "b"});
    KgeHyperparams hp;
    hp.dim = 8;
    hp.epochs = 50;
    hp.seed = 4;
    auto m = train(b.build(), hp);
    REQUIRE(m.score({"a", "r", "b"}) > m.score({"b", "r", "a"}));
}

TEST_CASE("training rejects empty graphs and bad hyperparameters", "[kge]") {
    REQUIRE_THROWS_AS(train(KnowledgeGraph{}), invalid_input);
    GraphBuilder b;
    b.add_triple({"a", "r", "b"});
    KgeHyperparams hp;
    hp.dim = 0;
    REQUIRE_THROWS_AS(train(b.build(), hp), invalid_input);
}

TEST_CASE("training is deterministic and insertion-order invariant", "[kge]") {
    auto ts = synth::random_triples(60, 21);
    KgeHyperparams hp;
    hp.dim = 12;
    hp.epochs = 8;
    hp.seed = 77;

    auto m1 = train(graph_of(ts), hp);
    auto m2 = train(graph_of(ts), hp);
    REQUIRE(serialize_model(m1) == serialize_model(m2));

    std::vector<Triple> reversed(ts.rbegin(), ts.rend());
    auto m3 = train(graph_of(reversed), hp);
    REQUIRE(serialize_model(m1) == serialize_model(m3));

    KgeHyperparams other = hp;
    other.seed = 78;
    REQUIRE(serialize_model(train(graph_of(ts), other)) != serialize_model(m1));
}

TEST_CASE("mean positive score rises over early epochs", "[kge]") {
    auto g = synth::clustered_kg(80, 5, 400, 4, 9);
    KgeHyperparams hp;
    hp.dim = 24;
    hp.epochs = 5;
    hp.seed = 1;
    TrainTrace trace;
    train(g, hp, &trace);
    REQUIRE(trace.mean_positive_score.size() == 5);
    for (std::size_t i = 1; i < trace.mean_positive_score.size(); ++i)
        REQUIRE(trace.mean_positive_score[i] > trace.mean_positive_score[i - 1]);
}

TEST_CASE("held-out hits@10 beats the random-rank baseline", "[kge]") {
    auto g = synth::clustered_kg(120, 6, 500, 4, 5);
    auto [train_ts, test_ts] = split_holdout(g, 0.1, 99);
    KgeHyperparams hp;
    hp.dim = 32;
    hp.epochs = 30;
    hp.seed = 13;
    auto m = train(graph_of(train_ts), hp);
    // held-out entities may be missing from the training graph; keep testable ones
    std::vector<Triple> evaluable;
    for (const auto& t : test_ts)
        if (m.has_entity(t.head) && m.has_entity(t.tail) && m.has_relation(t.relation))
            evaluable.push_back(t);
    REQUIRE(evaluable.size() >= 20);
    double h10 = hits_at_k(m, evaluable, 10);
    double random_expect = 10.0 / (double)m.entity_ids().size();
    INFO("hits@10=" << h10 << " random=" << random_expect);
    REQUIRE(h10 >= 2.0 * random_expect);
}

TEST_CASE("checkpoints roundtrip bit-exactly", "[kge]") {
    auto g = synth::clustered_kg(30, 3, 80, 3, 2);
    KgeHyperparams hp;
    hp.dim = 8;
    hp.epochs = 4;
    hp.seed = 555;
    auto m = train(g, hp);
    std::string bytes = serialize_model(m);
    auto back = deserialize_model(bytes);
    REQUIRE(back.dim() == m.dim());
    REQUIRE(back.entity_ids() == m.entity_ids());
    REQUIRE(back.relation_ids() == m.relation_ids());
    REQUIRE(back.entity_matrix() == m.entity_matrix());
    REQUIRE(back.relation_matrix() == m.relation_matrix());
    REQUIRE(back.hyperparams().seed == 555);
    REQUIRE(serialize_model(back) == bytes);

    REQUIRE_THROWS_AS(deserialize_model("GARBAGE!"), parse_error);
    REQUIRE_THROWS_AS(deserialize_model(bytes.substr(0, bytes.size() - 3)), parse_error);
    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    REQUIRE_THROWS_AS(deserialize_model(wrong_magic), parse_error);
}

TEST_CASE("hits_at_k validates its input", "[kge]") {
    REQUIRE_THROWS_AS(hits_at_k(toy_model(), {}, 10), invalid_input);
}
