#pragma once
// Evaluation harness and end-to-end pipeline.
//
// Three consumer views drive the metrics:
//   unauthorized — retrieves over the sealed graph as-is; flags are opaque
//                  ciphertext, nothing is filtered. ARR/HS live here.
//   authorized   — retrieves over the sealed graph, then filters the context
//                  with the owner key. CDPA/CIRA compare it against the
//                  clean graph the owner started from.
//   attacker     — redteam sanitization over the published graph (redteam.hpp);
//                  the pipeline folds its retain rate into the report as RR.
//
// run_pipeline chains every stage, fans one config seed into per-stage
// streams, and writes each artifact to disk. With a fixed config the whole
// run is byte-reproducible, sealed ciphertexts included.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "aura/context.hpp"
#include "aura/error.hpp"
#include "aura/genpool.hpp"
#include "aura/kg.hpp"
#include "aura/kge.hpp"
#include "aura/mvc.hpp"
#include "aura/redteam.hpp"
#include "aura/retrieve.hpp"
#include "aura/sds.hpp"
#include "aura/seal.hpp"
#include "aura/util.hpp"

namespace aura {

// ---------------------------------------------------------------- reports

// Per-question audit row. Effectiveness fills the unauthorized columns,
// fidelity the authorized ones; the pipeline zips both into one row.
struct QuestionRecord {
    std::string question;
    EntityId anchor;
    std::string gold;
    std::string clean_answer;
    std::string unauthorized_answer;
    std::string authorized_answer;
    bool baseline_correct = false;  // clean-graph answer matches gold exactly
    bool poisoned = false;          // unauthorized context held >= 1 adulterant element
    bool hallucinated = false;      // baseline-correct, yet unauthorized answer left gold
    double context_jaccard = 1.0;   // filtered vs clean retrieval, by triple id
};

struct EffectivenessResult {
    double arr = 0.0;  // fraction of questions whose unauthorized context was poisoned
    double hs = 0.0;   // fraction of baseline-correct questions steered off gold
    std::size_t baseline_correct = 0;
    std::vector<QuestionRecord> per_question;
};

struct FidelityResult {
    double cdpa = 0.0;  // authorized answer == clean answer, exact
    double cira = 0.0;  // mean context_jaccard
    std::vector<QuestionRecord> per_question;
};

struct LatencyReport {
    double clean_median_ms = 0.0;     // retrieval + extraction on the clean graph
    double filtered_median_ms = 0.0;  // retrieval + filter_context + extraction, sealed
    double overhead = 0.0;            // (filtered - clean) / clean
    double decrypt_median_ms = 0.0;   // single flag decryption
    std::size_t repetitions = 0;
    std::size_t decrypt_iterations = 0;
};

struct MetricsReport {
    double arr = 0.0;
    double hs = 0.0;
    double cdpa = 0.0;
    double cira = 0.0;
    std::optional<double> rr;                // redteam retain rate (first quantile)
    std::optional<double> latency_overhead;  // filled by measure_latency callers
    std::size_t questions = 0;
    std::size_t baseline_correct = 0;
    std::vector<QuestionRecord> per_question;
};

// ------------------------------------------------------------ effectiveness

// Unauthorized view: questions run against the sealed graph with no
// filtering. A question counts toward ARR when its retrieved context holds
// any element absent from the clean graph; toward HS when the clean graph
// answered it correctly but the sealed graph steers the answer off gold.
inline EffectivenessResult eval_effectiveness(const KnowledgeGraph& clean,
                                              const SealedGraph& sealed,
                                              const std::vector<Question>& questions,
                                              const AnswerPipeline& pipeline = {},
                                              unsigned threads = 1) {
    if (questions.empty()) throw invalid_input("questions must be non-empty");
    EffectivenessResult res;
    res.per_question.resize(questions.size());
    parallel_for(questions.size(), threads, [&](std::size_t i) {
        const Question& q = questions[i];
        QuestionRecord& rec = res.per_question[i];
        rec.question = q.text;
        rec.anchor = q.anchor_entity;
        rec.gold = gold_answer_text(q);
        rec.clean_answer = pipeline.answer(q, clean);
        rec.baseline_correct = rec.clean_answer == rec.gold;
        RetrievalContext ctx = pipeline.retrieve(q, sealed.graph, &sealed.flags);
        rec.unauthorized_answer = extract_answer(q, ctx);
        for (const auto& [node, flag] : ctx.nodes)
            if (!clean.has_entity(node)) {
                rec.poisoned = true;
                break;
            }
        if (!rec.poisoned)
            for (const auto& [t, flag] : ctx.triples)
                if (!clean.has_triple(t)) {
                    rec.poisoned = true;
                    break;
                }
        rec.hallucinated = rec.baseline_correct && rec.unauthorized_answer != rec.gold;
    });
    std::size_t poisoned = 0, hallucinated = 0;
    for (const QuestionRecord& rec : res.per_question) {
        poisoned += rec.poisoned;
        res.baseline_correct += rec.baseline_correct;
        hallucinated += rec.hallucinated;
    }
    res.arr = static_cast<double>(poisoned) / static_cast<double>(questions.size());
    res.hs = res.baseline_correct == 0
                 ? 0.0
                 : static_cast<double>(hallucinated) / static_cast<double>(res.baseline_correct);
    return res;
}

// ---------------------------------------------------------------- fidelity

// Authorized view: retrieve over the sealed graph, filter with the owner
// key, answer from what survives. A wrong key surfaces as auth_error.
inline FidelityResult eval_fidelity(const KnowledgeGraph& clean, const SealedGraph& sealed,
                                    const OwnerKey& key, const std::vector<Question>& questions,
                                    const AnswerPipeline& pipeline = {}, unsigned threads = 1) {
    if (questions.empty()) throw invalid_input("questions must be non-empty");
    FidelityResult res;
    res.per_question.resize(questions.size());
    parallel_for(questions.size(), threads, [&](std::size_t i) {
        const Question& q = questions[i];
        QuestionRecord& rec = res.per_question[i];
        rec.question = q.text;
        rec.anchor = q.anchor_entity;
        rec.gold = gold_answer_text(q);
        RetrievalContext clean_ctx = pipeline.retrieve(q, clean);
        rec.clean_answer = extract_answer(q, clean_ctx);
        rec.baseline_correct = rec.clean_answer == rec.gold;
        RetrievalContext filtered =
            filter_context(pipeline.retrieve(q, sealed.graph, &sealed.flags), key);
        rec.authorized_answer = extract_answer(q, filtered);
        std::set<std::string> a, b;
        for (const auto& [t, flag] : filtered.triples) a.insert(triple_id(t));
        for (const auto& [t, flag] : clean_ctx.triples) b.insert(triple_id(t));
        std::size_t both = 0;
        for (const std::string& id : a) both += b.count(id);
        std::size_t either = a.size() + b.size() - both;
        rec.context_jaccard =
            either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
    });
    double cdpa_acc = 0.0, cira_acc = 0.0;
    for (const QuestionRecord& rec : res.per_question) {
        cdpa_acc += (rec.authorized_answer == rec.clean_answer) ? 1.0 : 0.0;
        cira_acc += rec.context_jaccard;
    }
    res.cdpa = cdpa_acc / static_cast<double>(questions.size());
    res.cira = cira_acc / static_cast<double>(questions.size());
    return res;
}

// Zips effectiveness and fidelity rows (same question list, same order).
inline MetricsReport merge_metrics(const EffectivenessResult& eff, const FidelityResult& fid) {
    if (eff.per_question.size() != fid.per_question.size())
        throw invalid_input("effectiveness and fidelity evaluated different question lists");
    MetricsReport m;
    m.arr = eff.arr;
    m.hs = eff.hs;
    m.cdpa = fid.cdpa;
    m.cira = fid.cira;
    m.questions = eff.per_question.size();
    m.baseline_correct = eff.baseline_correct;
    m.per_question = eff.per_question;
    for (std::size_t i = 0; i < m.per_question.size(); ++i) {
        m.per_question[i].authorized_answer = fid.per_question[i].authorized_answer;
        m.per_question[i].context_jaccard = fid.per_question[i].context_jaccard;
    }
    return m;
}

// ----------------------------------------------------------------- latency

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Median per-query wall clock, clean vs sealed + filtered, single worker.
// Index construction for dense retrieval happens once per graph outside the
// timed region: it is a deployment cost, not per-query latency.
inline LatencyReport measure_latency(const SealedGraph& sealed, const OwnerKey& key,
                                     const std::vector<Question>& questions,
                                     RetrieverKind retriever = RetrieverKind::symbolic,
                                     std::size_t repetitions = 10, std::size_t dense_top_k = 4,
                                     std::size_t decrypt_iterations = 10000) {
    if (questions.empty()) throw invalid_input("questions must be non-empty");
    if (repetitions < 10) throw invalid_input("repetitions must be >= 10");
    if (decrypt_iterations < 10000) throw invalid_input("decrypt_iterations must be >= 10000");

    const std::string* ct = nullptr;
    if (!sealed.flags.node_flags.empty())
        ct = &sealed.flags.node_flags.begin()->second;
    else if (!sealed.flags.triple_flags.empty())
        ct = &sealed.flags.triple_flags.begin()->second;
    else
        throw invalid_input("sealed graph carries no flags to benchmark");

    KnowledgeGraph clean = unseal_graph(sealed, key);
    std::optional<DenseIndex> idx_clean, idx_sealed;
    if (retriever != RetrieverKind::symbolic) {
        idx_clean = build_dense_index(clean);
        idx_sealed = build_dense_index(sealed.graph);
    }
    auto retrieve_on = [&](const Question& q, const KnowledgeGraph& g, const DenseIndex* idx,
                           const FlagTable* flags) {
        int hops = std::max<int>(1, static_cast<int>(q.relation_path.size()));
        if (retriever == RetrieverKind::symbolic) return retrieve_symbolic(q.text, g, hops, flags);
        if (retriever == RetrieverKind::dense)
            return retrieve_dense(q.text, g, *idx, dense_top_k, hops, flags);
        return retrieve_hybrid(q.text, g, *idx, dense_top_k, hops, flags);
    };

    using clock = std::chrono::steady_clock;
    std::size_t sink = 0;  // consumed below so samples can't be optimized away
    std::vector<double> clean_ms, filtered_ms;
    clean_ms.reserve(repetitions * questions.size());
    filtered_ms.reserve(repetitions * questions.size());
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        for (const Question& q : questions) {
            auto t0 = clock::now();
            RetrievalContext ctx = retrieve_on(q, clean, idx_clean ? &*idx_clean : nullptr, nullptr);
            sink += extract_answer(q, ctx).size();
            auto t1 = clock::now();
            clean_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        for (const Question& q : questions) {
            auto t0 = clock::now();
            RetrievalContext ctx =
                retrieve_on(q, sealed.graph, idx_sealed ? &*idx_sealed : nullptr, &sealed.flags);
            RetrievalContext filtered = filter_context(ctx, key);
            sink += extract_answer(q, filtered).size();
            auto t1 = clock::now();
            filtered_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
    }

    std::vector<double> decrypt_ms;
    decrypt_ms.reserve(decrypt_iterations);
    for (std::size_t i = 0; i < decrypt_iterations; ++i) {
        auto t0 = clock::now();
        sink += static_cast<std::size_t>(decrypt_flag(*ct, key));
        auto t1 = clock::now();
        decrypt_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    if (sink == SIZE_MAX) throw error("unreachable");

    LatencyReport rep;
    rep.clean_median_ms = detail::median_of(std::move(clean_ms));
    rep.filtered_median_ms = detail::median_of(std::move(filtered_ms));
    rep.overhead = rep.clean_median_ms <= 0.0
                       ? 0.0
                       : (rep.filtered_median_ms - rep.clean_median_ms) / rep.clean_median_ms;
    rep.decrypt_median_ms = detail::median_of(std::move(decrypt_ms));
    rep.repetitions = repetitions;
    rep.decrypt_iterations = decrypt_iterations;
    return rep;
}

// ------------------------------------------------------------ report JSON

inline nlohmann::json question_record_to_json(const QuestionRecord& r) {
    return nlohmann::json{{"question", r.question},
                          {"anchor", r.anchor},
                          {"gold", r.gold},
                          {"clean_answer", r.clean_answer},
                          {"unauthorized_answer", r.unauthorized_answer},
                          {"authorized_answer", r.authorized_answer},
                          {"baseline_correct", r.baseline_correct},
                          {"poisoned", r.poisoned},
                          {"hallucinated", r.hallucinated},
                          {"context_jaccard", r.context_jaccard}};
}

inline std::string metrics_to_json(const MetricsReport& m) {
    nlohmann::json j{{"arr", m.arr},
                     {"hs", m.hs},
                     {"cdpa", m.cdpa},
                     {"cira", m.cira},
                     {"questions", m.questions},
                     {"baseline_correct", m.baseline_correct}};
    j["rr"] = m.rr ? nlohmann::json(*m.rr) : nlohmann::json();
    j["latency_overhead"] = m.latency_overhead ? nlohmann::json(*m.latency_overhead) : nlohmann::json();
    auto& rows = j["per_question"] = nlohmann::json::array();
    for (const QuestionRecord& r : m.per_question) rows.push_back(question_record_to_json(r));
    return j.dump(2) + "\n";
}

inline nlohmann::json latency_to_json(const LatencyReport& r) {
    return nlohmann::json{{"clean_median_ms", r.clean_median_ms},
                          {"filtered_median_ms", r.filtered_median_ms},
                          {"overhead", r.overhead},
                          {"decrypt_median_ms", r.decrypt_median_ms},
                          {"repetitions", r.repetitions},
                          {"decrypt_iterations", r.decrypt_iterations}};
}

// ------------------------------------------------------------------ config

struct PipelineConfig {
    std::string input;  // triples file
    TripleFormat input_format = TripleFormat::tsv;
    std::string output_dir = "aura-out";
    std::uint64_t seed = 0;
    unsigned threads = 1;
    RetrieverKind retriever = RetrieverKind::symbolic;
    std::size_t dense_top_k = 4;
    std::string property_name = "remark";
    // Key source, first match wins: inline hex, key file, env var. When all
    // are empty the key is derived from the run seed — fine for experiments
    // and reproducible reruns, not for guarding real data.
    std::string key_hex;
    std::string key_file;
    std::string key_env;
    MvcConfig mvc;
    KgeHyperparams kge;  // seed field is overridden per stage
    std::size_t n_per_slot = 1;
    std::size_t scoring_per_node = 20;  // SDS probe questions per key node
    std::size_t eval_per_node = 1;      // evaluation questions per key node
    bool do_seal = true;
    bool do_evaluate = true;
    bool do_redteam = false;
    std::vector<double> redteam_quantiles = {0.2};
    std::string redteam_model = "adulterated";  // or "original"
};

inline void validate_config(const PipelineConfig& cfg) {
    if (cfg.input.empty()) throw config_error("input path is required");
    if (cfg.output_dir.empty()) throw config_error("output_dir must be non-empty");
    if (cfg.property_name.empty()) throw config_error("property_name must be non-empty");
    if (cfg.n_per_slot < 1) throw config_error("n_per_slot must be >= 1");
    if (cfg.scoring_per_node < 1) throw config_error("scoring_per_node must be >= 1");
    if (cfg.eval_per_node < 1) throw config_error("eval_per_node must be >= 1");
    if (cfg.do_evaluate && !cfg.do_seal)
        throw config_error("evaluation needs sealed flags; enable seal or disable evaluate");
    int key_sources = (!cfg.key_hex.empty()) + (!cfg.key_file.empty()) + (!cfg.key_env.empty());
    if (key_sources > 1) throw config_error("configure at most one key source (hex|file|env)");
    if (cfg.do_redteam && cfg.redteam_quantiles.empty())
        throw config_error("redteam needs at least one quantile");
    for (double q : cfg.redteam_quantiles)
        if (!(q >= 0.0 && q < 1.0)) throw config_error("redteam quantiles must lie in [0, 1)");
    if (cfg.redteam_model != "adulterated" && cfg.redteam_model != "original")
        throw config_error("redteam model must be 'adulterated' or 'original'");
}

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw not_found_error("cannot open '" + path + "' for reading");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw error("read failed on '" + path + "'");
    return data;
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error("cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw error("write failed on '" + path + "'");
}

template <typename T>
T config_scalar(const nlohmann::json& j, const char* key) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw config_error(std::string("bad value for '") + key + "'");
    }
}

// Flat key=value -> nested JSON. "kge.dim = 32" lands at {"kge":{"dim":32}};
// comma lists become arrays; '#' starts a comment.
inline nlohmann::json flat_config_to_json(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
            s.remove_suffix(1);
        return s;
    };
    auto scalar = [&](std::string_view v) -> nlohmann::json {
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
            return std::string(v.substr(1, v.size() - 2));
        if (v == "true") return true;
        if (v == "false") return false;
        try {
            std::size_t used = 0;
            std::string s(v);
            if (s.find_first_of(".eE") == std::string::npos) {
                long long n = std::stoll(s, &used);
                if (used == s.size()) return n;
            } else {
                double d = std::stod(s, &used);
                if (used == s.size()) return d;
            }
        } catch (const std::exception&) {
        }
        return std::string(v);
    };

    nlohmann::json root = nlohmann::json::object();
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw parse_error("expected key = value", line_no);
        std::string_view key = trim(line.substr(0, eq));
        std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) throw parse_error("empty config key", line_no);

        nlohmann::json parsed;
        if (value.find(',') != std::string_view::npos) {
            parsed = nlohmann::json::array();
            std::size_t vp = 0;
            while (vp <= value.size()) {
                std::size_t comma = value.find(',', vp);
                if (comma == std::string_view::npos) comma = value.size();
                parsed.push_back(scalar(trim(value.substr(vp, comma - vp))));
                vp = comma + 1;
            }
        } else {
            parsed = scalar(value);
        }

        nlohmann::json* slot = &root;
        std::size_t kp = 0;
        while (true) {
            std::size_t dot = key.find('.', kp);
            std::string part(key.substr(kp, dot == std::string_view::npos ? dot : dot - kp));
            if (part.empty()) throw parse_error("empty config key segment", line_no);
            if (dot == std::string_view::npos) {
                (*slot)[part] = std::move(parsed);
                break;
            }
            slot = &(*slot)[part];
            if (!slot->is_object() && !slot->is_null())
                throw parse_error("key '" + part + "' used as both value and section", line_no);
            kp = dot + 1;
        }
    }
    return root;
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw config_error("config root must be an object");
    PipelineConfig cfg;
    static const std::set<std::string> known{
        "input",    "format",     "output_dir", "seed",     "threads",
        "retriever", "dense_top_k", "property_name", "key", "mvc",
        "kge",      "n_per_slot", "questions",  "seal",     "evaluate",
        "redteam"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw config_error("unknown config key '" + k + "'");
    using detail::config_scalar;
    if (j.contains("input")) cfg.input = config_scalar<std::string>(j["input"], "input");
    if (j.contains("format")) {
        try {
            cfg.input_format =
                triple_format_from_string(config_scalar<std::string>(j["format"], "format"));
        } catch (const invalid_input& e) {
            throw config_error(e.what());
        }
    }
    if (j.contains("output_dir"))
        cfg.output_dir = config_scalar<std::string>(j["output_dir"], "output_dir");
    if (j.contains("seed")) cfg.seed = config_scalar<std::uint64_t>(j["seed"], "seed");
    if (j.contains("threads")) cfg.threads = config_scalar<unsigned>(j["threads"], "threads");
    if (j.contains("retriever")) {
        try {
            cfg.retriever =
                retriever_from_string(config_scalar<std::string>(j["retriever"], "retriever"));
        } catch (const invalid_input& e) {
            throw config_error(e.what());
        }
    }
    if (j.contains("dense_top_k"))
        cfg.dense_top_k = config_scalar<std::size_t>(j["dense_top_k"], "dense_top_k");
    if (j.contains("property_name"))
        cfg.property_name = config_scalar<std::string>(j["property_name"], "property_name");
    if (j.contains("key")) {
        const auto& k = j["key"];
        if (!k.is_object()) throw config_error("'key' must be a section");
        for (const auto& [kk, vv] : k.items())
            if (kk != "hex" && kk != "file" && kk != "env")
                throw config_error("unknown key source '" + kk + "' (hex|file|env)");
        if (k.contains("hex")) cfg.key_hex = config_scalar<std::string>(k["hex"], "key.hex");
        if (k.contains("file")) cfg.key_file = config_scalar<std::string>(k["file"], "key.file");
        if (k.contains("env")) cfg.key_env = config_scalar<std::string>(k["env"], "key.env");
    }
    if (j.contains("mvc")) {
        const auto& m = j["mvc"];
        if (!m.is_object()) throw config_error("'mvc' must be a section");
        for (const auto& [kk, vv] : m.items())
            if (kk != "exact_node_threshold" && kk != "time_budget_ms")
                throw config_error("unknown config key 'mvc." + kk + "'");
        if (m.contains("exact_node_threshold"))
            cfg.mvc.exact_node_threshold =
                config_scalar<std::size_t>(m["exact_node_threshold"], "mvc.exact_node_threshold");
        if (m.contains("time_budget_ms"))
            cfg.mvc.time_budget = std::chrono::milliseconds(
                config_scalar<std::int64_t>(m["time_budget_ms"], "mvc.time_budget_ms"));
    }
    if (j.contains("kge")) {
        const auto& g = j["kge"];
        if (!g.is_object()) throw config_error("'kge' must be a section");
        for (const auto& [kk, vv] : g.items())
            if (kk != "dim" && kk != "margin" && kk != "learning_rate" && kk != "epochs" &&
                kk != "negatives_per_positive")
                throw config_error("unknown config key 'kge." + kk + "'");
        if (g.contains("dim")) cfg.kge.dim = config_scalar<int>(g["dim"], "kge.dim");
        if (g.contains("margin")) cfg.kge.margin = config_scalar<double>(g["margin"], "kge.margin");
        if (g.contains("learning_rate"))
            cfg.kge.learning_rate = config_scalar<double>(g["learning_rate"], "kge.learning_rate");
        if (g.contains("epochs")) cfg.kge.epochs = config_scalar<int>(g["epochs"], "kge.epochs");
        if (g.contains("negatives_per_positive"))
            cfg.kge.negatives_per_positive =
                config_scalar<int>(g["negatives_per_positive"], "kge.negatives_per_positive");
    }
    if (j.contains("n_per_slot"))
        cfg.n_per_slot = config_scalar<std::size_t>(j["n_per_slot"], "n_per_slot");
    if (j.contains("questions")) {
        const auto& q = j["questions"];
        if (!q.is_object()) throw config_error("'questions' must be a section");
        for (const auto& [kk, vv] : q.items())
            if (kk != "scoring_per_node" && kk != "eval_per_node")
                throw config_error("unknown config key 'questions." + kk + "'");
        if (q.contains("scoring_per_node"))
            cfg.scoring_per_node =
                config_scalar<std::size_t>(q["scoring_per_node"], "questions.scoring_per_node");
        if (q.contains("eval_per_node"))
            cfg.eval_per_node =
                config_scalar<std::size_t>(q["eval_per_node"], "questions.eval_per_node");
    }
    if (j.contains("seal")) cfg.do_seal = config_scalar<bool>(j["seal"], "seal");
    if (j.contains("evaluate")) cfg.do_evaluate = config_scalar<bool>(j["evaluate"], "evaluate");
    if (j.contains("redteam")) {
        const auto& r = j["redteam"];
        if (!r.is_object()) throw config_error("'redteam' must be a section");
        for (const auto& [kk, vv] : r.items())
            if (kk != "enabled" && kk != "quantiles" && kk != "model")
                throw config_error("unknown config key 'redteam." + kk + "'");
        if (r.contains("enabled"))
            cfg.do_redteam = config_scalar<bool>(r["enabled"], "redteam.enabled");
        if (r.contains("quantiles")) {
            cfg.redteam_quantiles.clear();
            const auto& qs = r["quantiles"];
            if (qs.is_array())
                for (const auto& q : qs)
                    cfg.redteam_quantiles.push_back(config_scalar<double>(q, "redteam.quantiles"));
            else
                cfg.redteam_quantiles.push_back(
                    config_scalar<double>(qs, "redteam.quantiles"));
        }
        if (r.contains("model"))
            cfg.redteam_model = config_scalar<std::string>(r["model"], "redteam.model");
    }
    validate_config(cfg);
    return cfg;
}

// Accepts a JSON object or flat key=value lines (sniffed on the first
// printable character).
inline PipelineConfig parse_config(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\n' ||
                               text[i] == '\r'))
        ++i;
    if (i < text.size() && text[i] == '{') {
        nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
        if (j.is_discarded()) throw parse_error("config is not valid JSON");
        return config_from_json(j);
    }
    return config_from_json(detail::flat_config_to_json(text));
}

inline PipelineConfig load_config(const std::string& path) {
    return parse_config(detail::read_file(path));
}

// Resolved key-source label for the redacted config echo (never the material).
inline std::string key_source_label(const PipelineConfig& cfg) {
    if (!cfg.key_hex.empty()) return "inline-hex";
    if (!cfg.key_file.empty()) return "file:" + cfg.key_file;
    if (!cfg.key_env.empty()) return "env:" + cfg.key_env;
    return "derived-from-seed";
}

inline OwnerKey resolve_key(const PipelineConfig& cfg) {
    if (!cfg.key_hex.empty()) return owner_key_from_hex(cfg.key_hex);
    if (!cfg.key_file.empty()) return owner_key_from_hex(detail::read_file(cfg.key_file));
    if (!cfg.key_env.empty()) {
        const char* v = std::getenv(cfg.key_env.c_str());
        if (!v || !*v)
            throw config_error("key environment variable '" + cfg.key_env + "' is unset or empty");
        return owner_key_from_hex(v);
    }
    std::mt19937_64 rng(derive_seed(cfg.seed, "owner-key"));
    OwnerKey k;
    for (auto& b : k.bytes) b = static_cast<unsigned char>(draw_below(rng, 256));
    return k;
}

inline nlohmann::json config_to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["input"] = cfg.input;
    j["format"] = to_string(cfg.input_format);
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["retriever"] = to_string(cfg.retriever);
    j["dense_top_k"] = cfg.dense_top_k;
    j["property_name"] = cfg.property_name;
    j["key"] = {{"source", key_source_label(cfg)}};  // material stays out of artifacts
    j["mvc"] = {{"exact_node_threshold", cfg.mvc.exact_node_threshold},
                {"time_budget_ms", cfg.mvc.time_budget.count()}};
    j["kge"] = {{"dim", cfg.kge.dim},
                {"margin", cfg.kge.margin},
                {"learning_rate", cfg.kge.learning_rate},
                {"epochs", cfg.kge.epochs},
                {"negatives_per_positive", cfg.kge.negatives_per_positive}};
    j["n_per_slot"] = cfg.n_per_slot;
    j["questions"] = {{"scoring_per_node", cfg.scoring_per_node},
                      {"eval_per_node", cfg.eval_per_node}};
    j["seal"] = cfg.do_seal;
    j["evaluate"] = cfg.do_evaluate;
    j["redteam"] = {{"enabled", cfg.do_redteam},
                    {"quantiles", cfg.redteam_quantiles},
                    {"model", cfg.redteam_model}};
    return j;
}

// ---------------------------------------------------------------- pipeline

struct PipelineResult {
    NodeSet key_nodes;
    AdulterantSet adulterants;
    MetricsReport metrics;
    std::map<std::string, std::string> artifacts;  // logical name -> written path
    std::vector<std::string> warnings;
};

namespace detail {

template <typename Fn>
auto run_stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw error(std::string("stage ") + name + ": " + e.what());
    }
}

}  // namespace detail

// ingest -> select_key_nodes -> train -> generate -> select_adulterants ->
// inject -> seal -> evaluate -> redteam. Every stage draws its seed from the
// config seed, every artifact lands under output_dir, and a rerun of the
// same config reproduces every byte.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
    validate_config(cfg);
    PipelineResult result;
    std::filesystem::create_directories(cfg.output_dir);
    auto art = [&](const char* name, const char* filename, std::string_view content) {
        std::string path = (std::filesystem::path(cfg.output_dir) / filename).string();
        detail::write_file(path, content);
        result.artifacts[name] = path;
    };
    art("config", "config.json", config_to_json(cfg).dump(2) + "\n");

    KnowledgeGraph clean = detail::run_stage("ingest", [&] {
        return parse_triples(detail::read_file(cfg.input), cfg.input_format);
    });

    MvcConfig mvc_cfg = cfg.mvc;
    mvc_cfg.rng_seed = derive_seed(cfg.seed, "mvc");
    result.key_nodes = detail::run_stage("select_key_nodes", [&] {
        return select_key_nodes(clean, mvc_cfg);
    });
    art("key_nodes", "key_nodes.json", node_set_to_json(result.key_nodes));

    KgeHyperparams hp = cfg.kge;
    hp.seed = derive_seed(cfg.seed, "kge");
    EmbeddingModel model = detail::run_stage("train", [&] { return train(clean, hp); });
    art("model", "kge_model.bin", serialize_model(model));

    CandidatePool pool = detail::run_stage("generate", [&] {
        auto edges = gen_edge_candidates(model, clean, result.key_nodes, cfg.n_per_slot);
        MockNameProvider provider(derive_seed(cfg.seed, "provider"));
        auto nodes = gen_node_candidates(provider, clean, result.key_nodes, &result.warnings);
        return pool_candidates(edges, nodes);
    });
    art("candidates", "candidates.jsonl", pool_to_jsonl(pool));

    std::vector<Question> scoring_qs = detail::run_stage("questions", [&] {
        return gen_scoring_questions(clean, result.key_nodes, cfg.scoring_per_node);
    });
    art("scoring_questions", "scoring_questions.jsonl", questions_to_jsonl(scoring_qs));

    AnswerPipeline answerer;
    answerer.retriever = cfg.retriever;
    answerer.dense_top_k = cfg.dense_top_k;
    result.adulterants = detail::run_stage("select_adulterants", [&] {
        return select_adulterants(pool, scoring_qs, clean, answerer, cfg.threads);
    });
    result.warnings.insert(result.warnings.end(), result.adulterants.warnings.begin(),
                           result.adulterants.warnings.end());
    art("adulterants", "adulterants.json", adulterant_set_to_json(result.adulterants));

    KnowledgeGraph adulterated = detail::run_stage("inject", [&] {
        return inject(clean, result.adulterants);
    });
    art("adulterated", "adulterated.tsv", to_tsv(adulterated));

    std::optional<SealedGraph> sealed;
    OwnerKey key;
    if (cfg.do_seal) {
        sealed = detail::run_stage("seal", [&] {
            key = resolve_key(cfg);
            return seal(adulterated, result.adulterants, key, cfg.property_name,
                        seeded_nonce_source(derive_seed(cfg.seed, "seal")));
        });
        art("sealed", "sealed.json", sealed_to_property_json(*sealed));
        if (key_source_label(cfg) == "derived-from-seed")
            art("owner_key", "owner_key.hex",
                bytes_to_hex(key.bytes.data(), key.bytes.size()) + "\n");
    }

    if (cfg.do_evaluate) {
        detail::run_stage("evaluate", [&] {
            std::vector<Question> eval_qs =
                gen_scoring_questions(clean, result.key_nodes, cfg.eval_per_node);
            art("eval_questions", "eval_questions.jsonl", questions_to_jsonl(eval_qs));
            auto eff = eval_effectiveness(clean, *sealed, eval_qs, answerer, cfg.threads);
            auto fid = eval_fidelity(clean, *sealed, key, eval_qs, answerer, cfg.threads);
            result.metrics = merge_metrics(eff, fid);
            return 0;
        });
    }

    if (cfg.do_redteam) {
        detail::run_stage("redteam", [&] {
            KgeHyperparams attack_hp = cfg.kge;
            attack_hp.seed = derive_seed(cfg.seed, "redteam");
            const KnowledgeGraph& attack_view =
                cfg.redteam_model == "original" ? clean : adulterated;
            EmbeddingModel attack_model = train(attack_view, attack_hp);
            std::set<std::string> truth = adulterant_triple_ids(adulterated);
            auto runs = nlohmann::json::array();
            for (double q : cfg.redteam_quantiles) {
                PurgeResult purged = kge_purge(adulterated, attack_model, q);
                score_report(purged.report, truth);
                nlohmann::json row = report_to_json(purged.report);
                row["quantile"] = q;
                runs.push_back(std::move(row));
                if (!result.metrics.rr) result.metrics.rr = purged.report.retain_rate;
            }
            nlohmann::json j{{"model", cfg.redteam_model}, {"runs", runs}};
            art("redteam", "redteam.json", j.dump(2) + "\n");
            return 0;
        });
    }

    if (cfg.do_evaluate) art("metrics", "metrics.json", metrics_to_json(result.metrics));
    return result;
}

}  // namespace aura
