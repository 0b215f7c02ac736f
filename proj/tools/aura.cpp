// aura — command line for the knowledge-graph adulteration toolkit.
//
// Every pipeline stage is independently invokable and chains through files:
//
//   aura ingest     --in kg.tsv --out normalized.tsv
//   aura keynodes   --in kg.tsv --out keys.json
//   aura train-kge  --in kg.tsv --out model.bin
//   aura generate   --in kg.tsv --keys keys.json --model model.bin --out pool.jsonl
//   aura select     --in kg.tsv --pool pool.jsonl --keys keys.json --out adulterants.json
//   aura inject     --in kg.tsv --adulterants adulterants.json --out adulterated.tsv
//   aura seal       --in kg.tsv --adulterants adulterants.json --key-file k.hex --out sealed.json
//   aura query      --graph sealed.json --question "What is the directed_by of Inception?"
//   aura evaluate   --clean kg.tsv --sealed sealed.json --keys keys.json --key-file k.hex
//   aura redteam    --in kg.tsv --adulterants adulterants.json --attack kge_purge
//   aura pipeline   --config run.toml
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.
// The owner key comes from --key, --key-file, or the KG_AURA_KEY variable.

#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aura/bench.hpp"
#include "aura/provider_http.hpp"

using namespace aura;

namespace {

KnowledgeGraph load_graph(const std::string& path, const std::string& format) {
    return parse_triples(detail::read_file(path), triple_format_from_string(format));
}

void add_format_flag(CLI::App* cmd, std::string& format) {
    cmd->add_option("--format", format, "Triples format: tsv|ntriples")
        ->default_val("tsv")
        ->check(CLI::IsMember({"tsv", "ntriples"}));
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-")
        std::cout << content;
    else
        detail::write_file(out_path, content);
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

// ----------------------------------------------------------------- key flags

struct KeyFlags {
    std::string hex;
    std::string file;
    bool ignore_env = false;
};

void add_key_flags(CLI::App* cmd, KeyFlags& kf) {
    cmd->add_option("--key", kf.hex, "Owner key, 64 hex characters");
    cmd->add_option("--key-file", kf.file, "File holding the owner key hex");
    cmd->add_flag("--no-env-key", kf.ignore_env, "Ignore the KG_AURA_KEY variable");
}

std::optional<OwnerKey> optional_key(const KeyFlags& kf) {
    if (!kf.hex.empty()) return owner_key_from_hex(kf.hex);
    if (!kf.file.empty()) return owner_key_from_hex(detail::read_file(kf.file));
    if (!kf.ignore_env)
        if (const char* v = std::getenv("KG_AURA_KEY"); v && *v) return owner_key_from_hex(v);
    return std::nullopt;
}

OwnerKey require_key(const KeyFlags& kf) {
    if (auto k = optional_key(kf)) return *k;
    throw config_error("owner key required: pass --key/--key-file or set KG_AURA_KEY");
}

// Recognizes the toolkit's question templates; anything else is treated as a
// plain retrieval query (use --anchor/--relation to answer it anyway).
Question parse_question_text(const std::string& text) {
    static const std::regex two(R"(^What is the (.+) of the (.+) of (.+)\?$)");
    static const std::regex one(R"(^What is the (.+) of (.+)\?$)");
    Question q;
    q.text = text;
    std::smatch m;
    if (std::regex_match(text, m, two)) {
        q.anchor_entity = m[3];
        q.relation_path = {m[2], m[1]};
    } else if (std::regex_match(text, m, one)) {
        q.anchor_entity = m[2];
        q.relation_path = {m[1]};
    }
    return q;
}

// ------------------------------------------------------------------- ingest

void setup_ingest(CLI::App& app) {
    struct Opts {
        std::string in, format, out;
        bool json = false;
    };
    auto opt = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand("ingest", "Parse a triples file and report its shape");
    cmd->add_option("--in", opt->in, "Input triples file")->required();
    add_format_flag(cmd, opt->format);
    cmd->add_option("--out", opt->out, "Write normalized TSV here");
    cmd->add_flag("--json", opt->json, "Machine-readable summary");
    cmd->callback([opt] {
        auto g = load_graph(opt->in, opt->format);
        if (!opt->out.empty()) emit(opt->out, to_tsv(g));
        nlohmann::json j{{"entities", g.num_entities()},
                         {"relations", g.num_relations()},
                         {"triples", g.num_triples()}};
        if (opt->json)
            std::cout << j.dump(2) << "\n";
        else
            std::cout << "entities " << g.num_entities() << ", relations " << g.num_relations()
                      << ", triples " << g.num_triples() << "\n";
    });
}

// ----------------------------------------------------------------- keynodes

void setup_keynodes(CLI::App& app) {
    struct Opts {
        std::string in, format, out, method = "auto";
        std::size_t exact_threshold = 2000;
        std::int64_t budget_ms = 5000;
        std::uint64_t seed = 0;
        bool json = false;
    };
    auto opt = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand("keynodes", "Select key nodes (minimum vertex cover)");
    cmd->add_option("--in", opt->in, "Input triples file")->required();
    add_format_flag(cmd, opt->format);
    cmd->add_option("--out", opt->out, "NodeSet JSON path (stdout if omitted)");
    cmd->add_option("--method", opt->method, "auto|exact|malatya|degree_greedy|edge_greedy")
        ->check(CLI::IsMember({"auto", "exact", "malatya", "degree_greedy", "edge_greedy"}));
    cmd->add_option("--exact-threshold", opt->exact_threshold,
                    "Node count above which auto skips the exact solver");
    cmd->add_option("--budget-ms", opt->budget_ms, "Exact solver time budget");
    cmd->add_option("--seed", opt->seed, "Seed for randomized baselines");
    cmd->add_flag("--json", opt->json, "Machine-readable summary");
    cmd->callback([opt] {
        auto g = load_graph(opt->in, opt->format);
        NodeSet ns;
        if (opt->method == "auto") {
            MvcConfig cfg;
            cfg.exact_node_threshold = opt->exact_threshold;
            cfg.time_budget = std::chrono::milliseconds(opt->budget_ms);
            cfg.rng_seed = opt->seed;
            ns = select_key_nodes(g, cfg);
        } else if (opt->method == "exact") {
            ns = exact_mvc(g, std::chrono::milliseconds(opt->budget_ms));
        } else if (opt->method == "malatya") {
            ns = malatya_mvc(g);
        } else if (opt->method == "degree_greedy") {
            ns = baseline_mvc(g, BaselineStrategy::degree_greedy, opt->seed);
        } else {
            ns = baseline_mvc(g, BaselineStrategy::edge_greedy, opt->seed);
        }
        emit(opt->out, node_set_to_json(ns));
        if (!opt->out.empty()) {
            if (opt->json) {
                nlohmann::json j{{"method", ns.method},
                                 {"size", ns.objective()},
                                 {"fallback", ns.fallback}};
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << "key nodes: " << ns.objective() << " (method " << ns.method
                          << (ns.fallback ? ", fallback" : "") << ")\n";
            }
        }
    });
}

// ---------------------------------------------------------------- train-kge

void setup_train(CLI::App& app) {
    struct Opts {
        std::string in, format, out;
        KgeHyperparams hp;
        bool json = false;
    };
    auto opt = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand("train-kge", "Train translation embeddings");
    cmd->add_option("--in", opt->in, "Input triples file")->required();
    add_format_flag(cmd, opt->format);
    cmd->add_option("--out", opt->out, "Model checkpoint path")->required();
    cmd->add_option("--dim", opt->hp.dim, "Embedding dimension");
    cmd->add_option("--epochs", opt->hp.epochs, "Training epochs");
    cmd->add_option("--lr", opt->hp.learning_rate, "Learning rate");
    cmd->add_option("--margin", opt->hp.margin, "Ranking margin");
    cmd->add_option("--negatives", opt->hp.negatives_per_positive, "Negatives per positive");
    cmd->add_option("--seed", opt->hp.seed, "Training seed");
    cmd->add_flag("--json", opt->json, "Machine-readable summary");
    cmd->callback([opt] {
        auto g = load_graph(opt->in, opt->format);
        TrainTrace trace;
        auto model = train(g, opt->hp, &trace);
        detail::write_file(opt->out, serialize_model(model));
        double final_score =
            trace.mean_positive_score.empty() ? 0.0 : trace.mean_positive_score.back();
        if (opt->json) {
            nlohmann::json j{{"entities", g.num_entities()},
                             {"dim", opt->hp.dim},
                             {"epochs", opt->hp.epochs},
                             {"final_mean_positive_score", final_score}};
            std::cout << j.dump(2) << "\n";
        } else {
            std::cout << "trained dim " << opt->hp.dim << " for " << opt->hp.epochs
                      << " epochs; final mean positive score " << final_score << "\n";
        }
    });
}

// ----------------------------------------------------------------- generate

void setup_generate(CLI::App& app) {
    struct Opts {
        std::string in, format, keys, model, out;
        std::size_t n_per_slot = 1;
        std::uint64_t seed = 0;
        std::string provider = "mock";
        std::string provider_host = "127.0.0.1";
        int provider_port = 8080;
        std::string provider_path = "/fake_label";
        int provider_timeout_ms = 2000;
        int provider_retries = 2;
        bool json = false;
    };
    auto opt = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand("generate", "Build the candidate adulterant pool");
    cmd->add_option("--in", opt->in, "Input triples file")->required();
    add_format_flag(cmd, opt->format);
    cmd->add_option("--keys", opt->keys, "Key-node JSON from `keynodes`")->required();
    cmd->add_option("--model", opt->model, "Embedding checkpoint from `train-kge`")->required();
    cmd->add_option("--out", opt->out, "Candidate pool JSONL (stdout if omitted)");
    cmd->add_option("--n-per-slot", opt->n_per_slot, "Edge candidates per answer slot");
    cmd->add_option("--seed", opt->seed, "Seed for the mock name provider");
    cmd->add_option("--provider", opt->provider, "Name provider: mock|http")
        ->check(CLI::IsMember({"mock", "http"}));
    cmd->add_option("--provider-host", opt->provider_host, "HTTP provider host");
    cmd->add_option("--provider-port", opt->provider_port, "HTTP provider port");
    cmd->add_option("--provider-path", opt->provider_path, "HTTP provider route");
    cmd->add_option("--provider-timeout-ms", opt->provider_timeout_ms, "HTTP timeout");
    cmd->add_option("--provider-retries", opt->provider_retries, "HTTP retries");
    cmd->add_flag("--json", opt->json, "Machine-readable summary");
    cmd->callback([opt] {
        auto g = load_graph(opt->in, opt->format);
        auto keys = node_set_from_json(detail::read_file(opt->keys));
        auto model = deserialize_model(detail::read_file(opt->model));
        auto edges = gen_edge_candidates(model, g, keys, opt->n_per_slot);
        std::unique_ptr<NameProvider> provider;
        if (opt->provider == "http") {
            HttpProviderOptions po;
            po.host = opt->provider_host;
            po.port = opt->provider_port;
            po.path = opt->provider_path;
            po.timeout_ms = opt->provider_timeout_ms;
            po.retries = opt->provider_retries;
            provider = std::make_unique<HttpNameProvider>(po);
        } else {
            provider = std::make_unique<MockNameProvider>(opt->seed);
        }
        std::vector<std::string> warnings;
        auto nodes = gen_node_candidates(*provider, g, keys, &warnings);
        auto pool = pool_candidates(edges, nodes);
        emit(opt->out, pool_to_jsonl(pool));
        print_warnings(warnings);
        if (!opt->out.empty()) {
            if (opt->json) {
                nlohmann::json j{{"candidates", pool.size()},
                                 {"edges", edges.size()},
                                 {"nodes", nodes.size()}};
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << "candidates: " << pool.size() << " (" << edges.size() << " edge, "
                          << nodes.size() << " node)\n";
            }
        }
    });
}

// ------------------------------------------------------------------- select

void setup_select(CLI::App& app) {
    struct Opts {
        std::string in, format, pool, keys, questions, out, retriever = "symbolic";
        std::size_t per_node = 20, top_k = 4;
        unsigned threads = 1;
        bool json = false;
    };
    auto opt = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand("select", "Score candidates and pick one per key node");
    cmd->add_option("--in", opt->in, "Input triples file")->required();
    add_format_flag(cmd, opt->format);
    cmd->add_option("--pool", opt->pool, "Candidate pool JSONL from `generate`")->required();
    cmd->add_option("--keys", opt->keys, "Key-node JSON (for generated probe questions)");
    cmd->add_option("--questions", opt->questions, "Probe questions JSONL (overrides --keys)");
    cmd->add_option("--per-node", opt->per_node, "Probe questions per key node");
    cmd->add_option("--retriever", opt->retriever, "symbolic|dense|hybrid")
        ->check(CLI::IsMember({"symbolic", "dense", "hybrid"}));
    cmd->add_option("--top-k", opt->top_k, "Dense retrieval depth");
    cmd->add_option("--threads", opt->threads, "Worker threads for scoring");
    cmd->add_option("--out", opt->out, "Adulterant audit JSON (stdout if omitted)");
    cmd->add_flag("--json", opt->json, "Machine-readable summary");
    cmd->callback([opt] {
        auto g = load_graph(opt->in, opt->format);
        auto pool = pool_from_jsonl(detail::read_file(opt->pool));
        std::vector<Question> questions;
        if (!opt->questions.empty()) {
            questions = questions_from_jsonl(detail::read_file(opt->questions));
        } else if (!opt->keys.empty()) {
            auto keys = node_set_from_json(detail::read_file(opt->keys));
            questions = gen_scoring_questions(g, keys, opt->per_node);
        } else {
            throw config_error("select needs --questions or --keys to build probes");
        }
        AnswerPipeline pipeline;
        pipeline.retriever = retriever_from_string(opt->retriever);
        pipeline.dense_top_k = opt->top_k;
        auto set = select_adulterants(pool, questions, g, pipeline, opt->threads);
        emit(opt->out, adulterant_set_to_json(set));
        print_warnings(set.warnings);
        if (!opt->out.empty()) {
            if (opt->json) {
                nlohmann::json j{{"chosen", set.chosen.size()},
                                 {"triples", set.triples.size()},
                                 {"scored", set.scores.size()}};
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << "chose " << set.chosen.size() << " adulterants covering "
                          << set.triples.size() << " triples\n";
            }
        }
    });
}

// ------------------------------------------------------------------- inject

void setup_inject(CLI::App& app) {
    struct Opts {
        std::string in, format, adulterants, out;
    };
    auto opt = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand("inject", "Apply an adulterant audit to the clean graph");
    cmd->add_option("--in", opt->in, "Clean triples file")->required();
    add_format_flag(cmd, opt->format);
    cmd->add_option("--adulterants", opt->adulterants, "Audit JSON from `select`")->required();
    cmd->add_option("--out", opt->out, "Adulterated TSV (stdout if omitted)");
    cmd->callback([opt] {
        auto g = load_graph(opt->in, opt->format);
        auto set = adulterant_set_from_json(detail::read_file(opt->adulterants));
        auto adulterated = inject(g, set);
        emit(opt->out, to_tsv(adulterated));
        if (!opt->out.empty())
            std::cout << "injected " << set.triples.size() << " triples; graph now "
                      << adulterated.num_triples() << " triples\n";
    });
}

// --------------------------------------------------------------------- seal

void setup_seal(CLI::App& app) {
    struct Opts {
        std::string in, format, adulterants, out, property = "remark";
        KeyFlags key;
        std::optional<std::uint64_t> seed;
    };
    auto opt = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand(
        "seal", "Re-inject the audit into the clean graph and encrypt per-element flags");
    cmd->add_option("--in", opt->in, "Clean triples file")->required();
    add_format_flag(cmd, opt->format);
    cmd->add_option("--adulterants", opt->adulterants, "Audit JSON from `select`")->required();
    cmd->add_option("--out", opt->out, "Sealed property-graph JSON")->required();
    cmd->add_option("--property", opt->property, "Property name carrying the flags");
    cmd->add_option("--seed", opt->seed, "Seeded nonces for reproducible sealing");
    add_key_flags(cmd, opt->key);
    cmd->callback([opt] {
        auto g = load_graph(opt->in, opt->format);
        auto set = adulterant_set_from_json(detail::read_file(opt->adulterants));
        auto key = require_key(opt->key);
        auto adulterated = inject(g, set);
        auto sealed = seal(adulterated, set, key, opt->property,
                           opt->seed ? seeded_nonce_source(*opt->seed) : os_nonce_source());
        detail::write_file(opt->out, sealed_to_property_json(sealed));
        std::cout << "sealed " << adulterated.num_entities() << " nodes and "
                  << adulterated.num_triples() << " triples (key id " << key.key_id() << ")\n";
    });
}

// -------------------------------------------------------------------- query

void setup_query(CLI::App& app) {
    struct Opts {
        std::string graph, question, anchor, property = "remark", retriever = "symbolic";
        std::vector<std::string> relations;
        std::size_t top_k = 4;
        KeyFlags key;
        bool unauthorized = false;
        bool json = false;
    };
    auto opt = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand("query", "Answer one question against a sealed graph");
    cmd->add_option("--graph", opt->graph, "Sealed property-graph JSON")->required();
    cmd->add_option("--question", opt->question, "Question text")->required();
    cmd->add_option("--anchor", opt->anchor, "Anchor entity (overrides template parsing)");
    cmd->add_option("--relation", opt->relations,
                    "Relation path, repeatable (overrides template parsing)");
    cmd->add_option("--property", opt->property, "Property name carrying the flags");
    cmd->add_option("--retriever", opt->retriever, "symbolic|dense|hybrid")
        ->check(CLI::IsMember({"symbolic", "dense", "hybrid"}));
    cmd->add_option("--top-k", opt->top_k, "Dense retrieval depth");
    cmd->add_flag("--unauthorized", opt->unauthorized,
                  "Force the unauthorized view even when a key is available");
    add_key_flags(cmd, opt->key);
    cmd->add_flag("--json", opt->json, "Machine-readable output");
    cmd->callback([opt] {
        auto sealed = sealed_from_property_json(detail::read_file(opt->graph), opt->property);
        Question q = parse_question_text(opt->question);
        if (!opt->anchor.empty()) q.anchor_entity = opt->anchor;
        if (!opt->relations.empty()) q.relation_path = opt->relations;
        AnswerPipeline pipeline;
        pipeline.retriever = retriever_from_string(opt->retriever);
        pipeline.dense_top_k = opt->top_k;
        RetrievalContext ctx = pipeline.retrieve(q, sealed.graph, &sealed.flags);
        std::optional<OwnerKey> key = opt->unauthorized ? std::nullopt : optional_key(opt->key);
        FilterStats stats;
        bool authorized = false;
        if (key) {
            ctx = filter_context(ctx, *key, &stats);
            authorized = true;
        }
        std::string answer = extract_answer(q, ctx);
        if (opt->json) {
            nlohmann::json j;
            j["question"] = q.text;
            j["authorized"] = authorized;
            j["answer"] = answer;
            auto& triples = j["context"] = nlohmann::json::array();
            for (const auto& [t, flag] : ctx.triples)
                triples.push_back({{"head", t.head}, {"relation", t.relation}, {"tail", t.tail}});
            auto& nodes = j["nodes"] = nlohmann::json::array();
            for (const auto& [node, flag] : ctx.nodes) nodes.push_back(node);
            if (authorized)
                j["filter_stats"] = {{"decryptions", stats.decryptions},
                                     {"nodes_dropped", stats.nodes_dropped},
                                     {"triples_dropped", stats.triples_dropped}};
            std::cout << j.dump(2) << "\n";
        } else {
            std::cout << (authorized ? "[authorized view]\n" : "[unauthorized view]\n")
                      << serialize_context(ctx) << "answer: " << answer << "\n";
        }
    });
}

// ----------------------------------------------------------------- evaluate

void setup_evaluate(CLI::App& app) {
    struct Opts {
        std::string clean, format, sealed, questions, keys, out, latency_out;
        std::string property = "remark", retriever = "symbolic";
        std::size_t per_node = 1, top_k = 4, repetitions = 10;
        unsigned threads = 1;
        KeyFlags key;
        bool latency = false;
        bool json = false;
    };
    auto opt = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand("evaluate", "Score effectiveness and fidelity metrics");
    cmd->add_option("--clean", opt->clean, "Clean triples file")->required();
    add_format_flag(cmd, opt->format);
    cmd->add_option("--sealed", opt->sealed, "Sealed property-graph JSON")->required();
    cmd->add_option("--questions", opt->questions, "Evaluation questions JSONL");
    cmd->add_option("--keys", opt->keys, "Key-node JSON (generates questions when given)");
    cmd->add_option("--per-node", opt->per_node, "Generated questions per key node");
    cmd->add_option("--property", opt->property, "Property name carrying the flags");
    cmd->add_option("--retriever", opt->retriever, "symbolic|dense|hybrid")
        ->check(CLI::IsMember({"symbolic", "dense", "hybrid"}));
    cmd->add_option("--top-k", opt->top_k, "Dense retrieval depth");
    cmd->add_option("--threads", opt->threads, "Worker threads for evaluation");
    cmd->add_flag("--latency", opt->latency, "Also measure query latency overhead");
    cmd->add_option("--repetitions", opt->repetitions, "Latency repetitions (>= 10)");
    cmd->add_option("--latency-out", opt->latency_out, "Write the full latency report here");
    cmd->add_option("--out", opt->out, "Metrics JSON path");
    add_key_flags(cmd, opt->key);
    cmd->add_flag("--json", opt->json, "Print the metrics JSON to stdout");
    cmd->callback([opt] {
        auto clean = load_graph(opt->clean, opt->format);
        auto sealed = sealed_from_property_json(detail::read_file(opt->sealed), opt->property);
        auto key = require_key(opt->key);
        std::vector<Question> questions;
        if (!opt->questions.empty()) {
            questions = questions_from_jsonl(detail::read_file(opt->questions));
        } else if (!opt->keys.empty()) {
            auto keys = node_set_from_json(detail::read_file(opt->keys));
            questions = gen_scoring_questions(clean, keys, opt->per_node);
        } else {
            throw config_error("evaluate needs --questions or --keys");
        }
        AnswerPipeline pipeline;
        pipeline.retriever = retriever_from_string(opt->retriever);
        pipeline.dense_top_k = opt->top_k;
        auto eff = eval_effectiveness(clean, sealed, questions, pipeline, opt->threads);
        auto fid = eval_fidelity(clean, sealed, key, questions, pipeline, opt->threads);
        MetricsReport metrics = merge_metrics(eff, fid);
        if (opt->latency) {
            auto rep = measure_latency(sealed, key, questions, pipeline.retriever,
                                       opt->repetitions, opt->top_k);
            metrics.latency_overhead = rep.overhead;
            if (!opt->latency_out.empty())
                detail::write_file(opt->latency_out, latency_to_json(rep).dump(2) + "\n");
        }
        if (!opt->out.empty()) detail::write_file(opt->out, metrics_to_json(metrics));
        if (opt->json) {
            std::cout << metrics_to_json(metrics);
        } else {
            std::cout << "arr " << metrics.arr << ", hs " << metrics.hs << ", cdpa "
                      << metrics.cdpa << ", cira " << metrics.cira;
            if (metrics.latency_overhead)
                std::cout << ", latency overhead " << *metrics.latency_overhead;
            std::cout << " (" << metrics.questions << " questions)\n";
        }
    });
}

// ------------------------------------------------------------------ redteam

void setup_redteam(CLI::App& app) {
    struct Opts {
        std::string in, format, adulterants, model, out, out_graph;
        std::string attack;
        std::string train_on = "published";
        double quantile = 0.2, cutoff = 3.0, combined_cutoff = 3.5, sigmas = 2.0;
        std::size_t min_relation_triples = 5;
        int train_dim = 32, train_epochs = 100;
        std::uint64_t seed = 0;
        bool json = false;
    };
    auto opt = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand(
        "redteam", "Run a sanitization attack against the adulterated graph");
    cmd->add_option("--in", opt->in, "Clean triples file")->required();
    add_format_flag(cmd, opt->format);
    cmd->add_option("--adulterants", opt->adulterants, "Audit JSON (ground truth for scoring)")
        ->required();
    cmd->add_option("--attack", opt->attack, "kge_purge|structural|semantic|hybrid")
        ->required()
        ->check(CLI::IsMember({"kge_purge", "structural", "semantic", "hybrid"}));
    cmd->add_option("--model", opt->model, "Attack embedding checkpoint (else trains one)");
    cmd->add_option("--train-on", opt->train_on, "Graph the attack model trains on")
        ->check(CLI::IsMember({"published", "original"}));
    cmd->add_option("--train-dim", opt->train_dim, "Attack model dimension");
    cmd->add_option("--train-epochs", opt->train_epochs, "Attack model epochs");
    cmd->add_option("--seed", opt->seed, "Attack model training seed");
    cmd->add_option("--quantile", opt->quantile, "kge_purge removal quantile in [0, 1)");
    cmd->add_option("--cutoff", opt->cutoff, "Structural outlier cutoff");
    cmd->add_option("--combined-cutoff", opt->combined_cutoff, "Hybrid combined-z cutoff");
    cmd->add_option("--sigmas", opt->sigmas, "Semantic low-score threshold in sigmas");
    cmd->add_option("--min-relation-triples", opt->min_relation_triples,
                    "Smallest relation the semantic attack scores");
    cmd->add_option("--out", opt->out, "Report JSON path (stdout if omitted)");
    cmd->add_option("--out-graph", opt->out_graph, "Purged TSV (kge_purge only)");
    cmd->add_flag("--json", opt->json, "Print the report JSON to stdout");
    cmd->callback([opt] {
        auto clean = load_graph(opt->in, opt->format);
        auto set = adulterant_set_from_json(detail::read_file(opt->adulterants));
        auto published = inject(clean, set);

        auto attack_model = [&]() -> EmbeddingModel {
            if (!opt->model.empty()) return deserialize_model(detail::read_file(opt->model));
            KgeHyperparams hp;
            hp.dim = opt->train_dim;
            hp.epochs = opt->train_epochs;
            hp.seed = opt->seed;
            return train(opt->train_on == "original" ? clean : published, hp);
        };

        SanitizationReport report;
        std::set<std::string> truth;
        if (opt->attack == "kge_purge") {
            auto purged = kge_purge(published, attack_model(), opt->quantile);
            report = purged.report;
            truth = adulterant_triple_ids(published);
            if (!opt->out_graph.empty()) detail::write_file(opt->out_graph, to_tsv(purged.graph));
        } else if (opt->attack == "structural") {
            report = structural_detect(published, opt->cutoff);
            truth = adulterant_node_ids(published);
        } else if (opt->attack == "semantic") {
            report = semantic_detect(published, attack_model(), opt->sigmas,
                                     opt->min_relation_triples);
            truth = adulterant_triple_ids(published);
        } else {
            report = hybrid_detect(published, attack_model(), opt->combined_cutoff, opt->cutoff,
                                   opt->sigmas, opt->min_relation_triples);
            truth = adulterant_triple_ids(published);
            for (const std::string& id : adulterant_node_ids(published)) truth.insert(id);
        }
        score_report(report, truth);
        print_warnings(report.warnings);
        std::string payload = report_to_json(report).dump(2) + "\n";
        emit(opt->out, payload);
        if (!opt->out.empty()) {
            if (opt->json)
                std::cout << payload;
            else
                std::cout << report.attack << ": flagged " << report.flagged_or_removed.size()
                          << ", detection " << report.detection_rate << ", retain "
                          << report.retain_rate << "\n";
        }
    });
}

// ----------------------------------------------------------------- pipeline

void setup_pipeline(CLI::App& app) {
    struct Opts {
        std::string config, input, output_dir;
        std::optional<std::uint64_t> seed;
        std::optional<unsigned> threads;
        bool json = false;
    };
    auto opt = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand("pipeline", "Run every stage from one config file");
    cmd->add_option("--config", opt->config, "Config file (JSON or key=value)")->required();
    cmd->add_option("--input", opt->input, "Override the config's input path");
    cmd->add_option("--output-dir", opt->output_dir, "Override the config's output directory");
    cmd->add_option("--seed", opt->seed, "Override the config's seed");
    cmd->add_option("--threads", opt->threads, "Override the config's worker count");
    cmd->add_flag("--json", opt->json, "Machine-readable summary");
    cmd->callback([opt] {
        PipelineConfig cfg = load_config(opt->config);
        if (!opt->input.empty()) cfg.input = opt->input;
        if (!opt->output_dir.empty()) cfg.output_dir = opt->output_dir;
        if (opt->seed) cfg.seed = *opt->seed;
        if (opt->threads) cfg.threads = *opt->threads;
        auto result = run_pipeline(cfg);
        print_warnings(result.warnings);
        if (opt->json) {
            nlohmann::json j;
            j["key_nodes"] = result.key_nodes.objective();
            j["metrics"] = nlohmann::json::parse(metrics_to_json(result.metrics));
            j["artifacts"] = result.artifacts;
            std::cout << j.dump(2) << "\n";
        } else {
            std::cout << "key nodes: " << result.key_nodes.objective() << "\n";
            if (cfg.do_evaluate) {
                std::cout << "arr " << result.metrics.arr << ", hs " << result.metrics.hs
                          << ", cdpa " << result.metrics.cdpa << ", cira "
                          << result.metrics.cira;
                if (result.metrics.rr) std::cout << ", rr " << *result.metrics.rr;
                std::cout << "\n";
            }
            for (const auto& [name, path] : result.artifacts)
                std::cout << "  " << name << ": " << path << "\n";
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aura: adulterate, seal, and evaluate knowledge graphs"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    setup_ingest(app);
    setup_keynodes(app);
    setup_train(app);
    setup_generate(app);
    setup_select(app);
    setup_inject(app);
    setup_seal(app);
    setup_query(app);
    setup_evaluate(app);
    setup_redteam(app);
    setup_pipeline(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
