#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "aura/sds.hpp"
#include "aura/text_embed.hpp"
#include "support/synth.hpp"

using namespace aura;

namespace {

KnowledgeGraph graph_of(const std::vector<Triple>& ts) {
    GraphBuilder b;
    for (const Triple& t : ts) b.add_triple(t);
    return b.build();
}

Question q_1hop(const EntityId& anchor, const RelationId& rel,
                std::vector<EntityId> golds = {}) {
    Question q;
    q.text = "What is the " + rel + " of " + anchor + "?";
    q.anchor_entity = anchor;
    q.relation_path = {rel};
    std::sort(golds.begin(), golds.end());
    q.gold_answers = std::move(golds);
    return q;
}

CandidateAdulterant edge_cand(const EntityId& vk, Triple t) {
    CandidateAdulterant c;
    c.kind = CandidateKind::edge;
    c.key_node = vk;
    c.triples = {std::move(t)};
    c.candidate_id = candidate_id_for(CandidateKind::edge, vk, c.triples, std::nullopt);
    return c;
}

NodeSet keys(std::vector<EntityId> members) {
    NodeSet s;
    s.members = std::move(members);
    std::sort(s.members.begin(), s.members.end());
    s.method = "test";
    return s;
}

}  // namespace

TEST_CASE("answer extraction walks the relation path", "[sds]") {
    auto g = graph_of({{"a", "r", "b"}, {"c", "r", "d"}});
    CHECK(default_answer(q_1hop("a", "r"), g) == "b");

    // anchor never retrieved -> unknown
    Question missing = q_1hop("zzz", "r");
    CHECK(default_answer(missing, g) == "unknown");

    // anchor in graph but absent from the question text -> unknown
    Question unmentioned = q_1hop("a", "r");
    unmentioned.text = "What is the r of something else?";
    CHECK(default_answer(unmentioned, g) == "unknown");

    // dead relation path -> unknown
    Question dead = q_1hop("a", "nope");
    dead.text = "What is the nope of a?";
    CHECK(default_answer(dead, g) == "unknown");

    // multi-tail answers come back sorted and comma-joined
    auto g2 = graph_of({{"a", "r", "d"}, {"a", "r", "b"}});
    CHECK(default_answer(q_1hop("a", "r"), g2) == "b, d");
}

TEST_CASE("two-hop extraction composes relations", "[sds]") {
    auto g = graph_of({{"a", "r1", "b"}, {"b", "r2", "c"}});
    Question q;
    q.text = "What is the r2 of the r1 of a?";
    q.anchor_entity = "a";
    q.relation_path = {"r1", "r2"};
    q.gold_answers = {"c"};
    CHECK(default_answer(q, g) == "c");
}

TEST_CASE("answer pipeline works with every retriever kind", "[sds]") {
    auto g = graph_of({{"Inception", "directed_by", "Nolan"}});
    Question q = q_1hop("Inception", "directed_by", {"Nolan"});
    for (auto kind : {RetrieverKind::symbolic, RetrieverKind::dense, RetrieverKind::hybrid}) {
        AnswerPipeline p;
        p.retriever = kind;
        CHECK(p.answer(q, g) == "Nolan");
    }
}

TEST_CASE("gold answer text matches the clean default answer", "[sds]") {
    auto g = graph_of({{"a", "r", "b"}, {"a", "r", "c"}});
    auto qs = gen_questions(g, 1, 1, 7);
    REQUIRE(qs.size() == 1);
    CHECK(qs[0].anchor_entity == "a");
    CHECK(qs[0].relation_path == std::vector<RelationId>{"r"});
    CHECK(qs[0].gold_answers == std::vector<EntityId>{"b", "c"});
    CHECK(qs[0].text == "What is the r of a?");
    CHECK(default_answer(qs[0], g) == gold_answer_text(qs[0]));
}

TEST_CASE("question generation covers two-hop paths", "[sds]") {
    auto g = graph_of({{"a", "r1", "b"}, {"b", "r2", "c"}});
    auto qs = gen_questions(g, 1, 2, 3);
    REQUIRE(qs.size() == 1);
    CHECK(qs[0].text == "What is the r2 of the r1 of a?");
    CHECK(qs[0].relation_path == std::vector<RelationId>{"r1", "r2"});
    CHECK(qs[0].gold_answers == std::vector<EntityId>{"c"});
}

TEST_CASE("question generation is seeded and warns on small graphs", "[sds]") {
    auto g = synth::er_kg(20, 0.15, 4, 2);
    CHECK(questions_to_jsonl(gen_questions(g, 10, 1, 5)) ==
          questions_to_jsonl(gen_questions(g, 10, 1, 5)));

    auto tiny = graph_of({{"a", "r", "b"}});
    std::vector<std::string> warnings;
    auto qs = gen_questions(tiny, 50, 1, 1, &warnings);
    CHECK(qs.size() == 1);  // only one distinct (anchor, path) exists
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("generated 1") != std::string::npos);

    CHECK_THROWS_AS(gen_questions(tiny, 0, 1, 1), invalid_input);
    CHECK_THROWS_AS(gen_questions(tiny, 1, 3, 1), invalid_input);

    GraphBuilder b;
    b.add_entity("only");
    warnings.clear();
    CHECK(gen_questions(b.build(), 1, 1, 1, &warnings).empty());
    CHECK(warnings.size() == 1);
}

TEST_CASE("scoring questions anchor near the key nodes", "[sds]") {
    auto g = graph_of({{"h", "r", "l1"}, {"h", "r", "l2"}});
    auto qs = gen_scoring_questions(g, keys({"h"}), 20);
    REQUIRE(qs.size() == 1);  // one outgoing relation, leaves have none
    CHECK(qs[0].anchor_entity == "h");
    CHECK(qs[0].gold_answers == std::vector<EntityId>{"l1", "l2"});

    // per_node caps the BFS expansion
    auto chain = graph_of({{"a", "ra", "b"}, {"b", "rb", "c"}, {"c", "rc", "d"}});
    auto capped = gen_scoring_questions(chain, keys({"a"}), 2);
    REQUIRE(capped.size() == 2);
    CHECK(capped[0].anchor_entity == "a");
    CHECK(capped[1].anchor_entity == "b");

    // global dedup across key nodes
    auto shared = graph_of({{"a", "r", "b"}});
    CHECK(gen_scoring_questions(shared, keys({"a", "b"}), 20).size() == 1);

    CHECK_THROWS_AS(gen_scoring_questions(shared, keys({"zzz"}), 5), not_found_error);
}

TEST_CASE("sds score is zero for candidates that cannot surface", "[sds]") {
    auto g = graph_of({{"a", "r", "b"}, {"c", "r", "a"}, {"x", "r", "y"}});
    std::vector<Question> qs{q_1hop("a", "r", {"b"})};
    // touches the anchor as tail only: context gains nothing on the r-path
    CHECK(sds_score(edge_cand("x", {"x", "r", "a"}), qs, g) == 0.0);
    // entirely outside the question's neighborhood
    CHECK(sds_score(edge_cand("x", {"x", "r", "b2"}), qs,
                    graph_of({{"a", "r", "b"}, {"x", "r", "y"}, {"b2", "r", "y"}})) == 0.0);
    CHECK_THROWS_AS(sds_score(edge_cand("x", {"x", "r", "y2"}), {}, g), invalid_input);
}

TEST_CASE("sds score measures answer displacement", "[sds]") {
    auto g = graph_of({{"a", "r", "b"}, {"x", "r", "y"}});
    std::vector<Question> qs{q_1hop("a", "r", {"b"})};
    auto cand = edge_cand("a", {"a", "r", "y"});
    double expect = l2_distance(embed_text("b"), embed_text("b, y"));
    CHECK(expect > 0.0);
    CHECK(sds_score(cand, qs, g) == Catch::Approx(expect));

    // a second, untouched question halves the mean
    std::vector<Question> qs2{q_1hop("a", "r", {"b"}), q_1hop("x", "r", {"y"})};
    CHECK(sds_score(cand, qs2, g) == Catch::Approx(expect / 2.0));
}

TEST_CASE("pool scoring fast path equals the straight definition", "[sds]") {
    auto g = synth::er_kg(30, 0.1, 13, 2);
    KgeHyperparams hp;
    hp.dim = 8;
    hp.epochs = 2;
    hp.seed = 3;
    auto model = train(g, hp);
    auto ns = malatya_mvc(g);
    MockNameProvider provider(5);
    auto pool = pool_candidates(gen_edge_candidates(model, g, ns, 2),
                                gen_node_candidates(provider, g, ns));
    REQUIRE(pool.size() > 4);
    auto qs = gen_questions(g, 8, 1, 99);
    REQUIRE(qs.size() == 8);

    auto fast = sds_scores_for_pool(pool, qs, g);
    REQUIRE(fast.size() == pool.size());
    for (const auto& [id, score] : fast) {
        CHECK(score == sds_score(pool.at(id), qs, g));  // exact, not approximate
    }
    // identical for any thread count
    auto threaded = sds_scores_for_pool(pool, qs, g, {}, 3);
    CHECK(threaded == fast);

    // non-symbolic pipelines take the straight path; still deterministic
    AnswerPipeline dense;
    dense.retriever = RetrieverKind::dense;
    auto sd = sds_scores_for_pool(pool, qs, g, dense, 2);
    for (const auto& [id, score] : sd) CHECK(score == sds_score(pool.at(id), qs, g, dense));
}

TEST_CASE("selection takes the argmax per key node", "[sds]") {
    auto g = graph_of({{"a", "r", "b"}, {"x", "r", "y"}});
    std::vector<Question> qs{q_1hop("a", "r", {"b"})};
    auto c1 = edge_cand("a", {"a", "r", "x"});
    auto c2 = edge_cand("a", {"a", "r", "y"});
    auto pool = pool_candidates({c1, c2}, {});
    auto set = select_adulterants(pool, qs, g);
    REQUIRE(set.chosen.count("a") == 1);

    double s1 = sds_score(c1, qs, g), s2 = sds_score(c2, qs, g);
    const std::string& expect_id =
        s1 > s2 ? c1.candidate_id
                : (s2 > s1 ? c2.candidate_id : std::min(c1.candidate_id, c2.candidate_id));
    CHECK(set.chosen.at("a").candidate_id == expect_id);
    CHECK(set.scores.at(c1.candidate_id) == s1);
    CHECK(set.scores.at(c2.candidate_id) == s2);
    REQUIRE(set.triples.size() == 1);
    CHECK(set.triples[0] == set.chosen.at("a").triples[0]);
}

TEST_CASE("selection breaks exact ties toward the smaller candidate id", "[sds]") {
    auto g = graph_of({{"a", "r", "b"}, {"k", "r", "a"}, {"x", "r", "y"}});
    std::vector<Question> qs{q_1hop("a", "r", {"b"})};
    // both candidates leave the answer untouched: scores are exactly 0
    auto c1 = edge_cand("k", {"k", "r", "y"});
    auto c2 = edge_cand("k", {"k", "r", "x"});
    auto pool = pool_candidates({c1, c2}, {});
    auto set = select_adulterants(pool, qs, g);
    CHECK(set.scores.at(c1.candidate_id) == 0.0);
    CHECK(set.scores.at(c2.candidate_id) == 0.0);
    CHECK(set.chosen.at("k").candidate_id == std::min(c1.candidate_id, c2.candidate_id));
}

TEST_CASE("selection warns about key nodes with no candidates", "[sds]") {
    auto g = graph_of({{"a", "r", "b"}});
    std::vector<Question> qs{q_1hop("a", "r", {"b"})};
    CandidatePool pool;
    pool.by_key_node["ghost"] = {};
    auto set = select_adulterants(pool, qs, g);
    CHECK(set.chosen.empty());
    REQUIRE(set.warnings.size() == 1);
    CHECK(set.warnings[0].find("ghost") != std::string::npos);
}

TEST_CASE("chosen adulterants inject as one payload", "[sds]") {
    auto g = synth::er_kg(25, 0.12, 8, 2);
    KgeHyperparams hp;
    hp.dim = 8;
    hp.epochs = 2;
    hp.seed = 3;
    auto model = train(g, hp);
    auto ns = malatya_mvc(g);
    MockNameProvider provider(17);
    auto pool = pool_candidates(gen_edge_candidates(model, g, ns, 2),
                                gen_node_candidates(provider, g, ns));
    auto qs = gen_scoring_questions(g, ns, 5);
    REQUIRE_FALSE(qs.empty());
    auto set = select_adulterants(pool, qs, g);
    CHECK(set.chosen.size() == ns.members.size());

    auto adulterated = inject(g, set);
    CHECK(adulterated.num_triples() == g.num_triples() + set.triples.size());
    CHECK(adulterated.num_adulterant_triples() == set.triples.size());
    for (const Triple& t : set.triples) {
        CHECK(adulterated.triple_provenance(t) == Provenance::adulterant);
        CHECK_FALSE(g.has_triple(t));
    }
    auto payload = set.to_injection();
    for (const EntityId& f : payload.fake_entities)
        CHECK(adulterated.entity_provenance(f) == Provenance::adulterant);
}

TEST_CASE("question JSON lines round trip", "[sds]") {
    auto g = graph_of({{"a", "r", "b"}, {"a", "r", "c"}});
    auto qs = gen_questions(g, 1, 1, 2);
    auto text = questions_to_jsonl(qs);
    auto back = questions_from_jsonl(text);
    REQUIRE(back.size() == qs.size());
    CHECK(back[0].text == qs[0].text);
    CHECK(back[0].anchor_entity == qs[0].anchor_entity);
    CHECK(back[0].relation_path == qs[0].relation_path);
    CHECK(back[0].gold_answers == qs[0].gold_answers);

    try {
        questions_from_jsonl(text + "{broken\n");
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line == qs.size() + 1);
    }
    CHECK_THROWS_AS(question_from_json(nlohmann::json{{"text", "x"}}), parse_error);
}

TEST_CASE("adulterant set JSON round trips", "[sds]") {
    auto g = graph_of({{"a", "r", "b"}, {"x", "r", "y"}});
    std::vector<Question> qs{q_1hop("a", "r", {"b"})};
    auto pool = pool_candidates({edge_cand("a", {"a", "r", "x"}),
                                 edge_cand("a", {"a", "r", "y"})},
                                {});
    auto set = select_adulterants(pool, qs, g);
    set.warnings.push_back("note");
    auto text = adulterant_set_to_json(set);
    auto back = adulterant_set_from_json(text);
    REQUIRE(back.chosen.size() == 1);
    CHECK(back.chosen.at("a").candidate_id == set.chosen.at("a").candidate_id);
    CHECK(back.triples == set.triples);
    CHECK(back.warnings == std::vector<std::string>{"note"});
    CHECK(back.scores.at(set.chosen.at("a").candidate_id) ==
          set.scores.at(set.chosen.at("a").candidate_id));
    CHECK_THROWS_AS(adulterant_set_from_json("{}"), parse_error);
}
