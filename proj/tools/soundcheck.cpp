#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "soundcheck/adversaries.hpp"
#include "soundcheck/board.hpp"
#include "soundcheck/datagen.hpp"
#include "soundcheck/harness.hpp"
#include "soundcheck/metrics.hpp"
#include "soundcheck/protocol.hpp"
#include "soundcheck/reference_models.hpp"
#include "soundcheck/worldmodel.hpp"

namespace fs = std::filesystem;
using namespace soundcheck;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct ModelArgs {
    std::string spec;
    int timeout_ms = 30000;
    int sessions = 1;
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
    cmd->add_option("--model", m.spec, "builtin:<name> or exec:<cmd> | tcp:<host>:<port> | unix:<path>")->required();
    cmd->add_option("--timeout-ms", m.timeout_ms, "per-request timeout for external models")->check(CLI::PositiveNumber);
}

std::unique_ptr<Model> open_model(const ModelArgs& m) {
    if (m.spec.starts_with("builtin:"))
        return make_builtin_model(std::string_view(m.spec).substr(8));
    return std::make_unique<ProtocolModel>(Endpoint::parse(m.spec), std::chrono::milliseconds(m.timeout_ms),
                                           std::max(1, m.sessions));
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << std::setprecision(12);
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty())
            out.push_back(item);
    return out;
}

void print_report(const CampaignReport& r) {
    std::cout << std::setprecision(4) << r.adversary << " / " << r.policy << ": asr " << r.asr << " ("
              << r.successes << "/" << r.episodes << "), illegal " << r.illegal_rate << ", end " << r.end_rate
              << ", mean length " << r.mean_seq_len << " plies, mean queries " << r.mean_queries << "\n";
}

void write_campaign_files(const fs::path& dir, const CampaignReport& r) {
    auto curve = open_out(dir / "asr_curve.csv");
    write_asr_curve_csv(curve, r);
    auto tax = open_out(dir / "taxonomy.csv");
    write_taxonomy_csv(tax, r);
}

// ── attack ──────────────────────────────────────────────────────────────────

struct AttackArgs {
    ModelArgs model;
    std::string adversaries = "imo";
    std::string policy = "greedy";
    std::string warmups = "random:100:10:0";
    int max_plies = 600;
    int reps = 1;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::uint64_t query_budget = 0;
    std::size_t imo_batch = 128;
    fs::path out = "attack-out";
};

int run_attack(AttackArgs& a) {
    a.model.sessions = static_cast<int>(a.workers);
    auto model = open_model(a.model);
    const auto warmups = sample_warmups(WarmupSpec::parse(a.warmups));
    const auto names = split_list(a.adversaries);
    if (names.empty())
        throw std::invalid_argument("no adversary given");

    EpisodeConfig cfg;
    cfg.policy = DecodingPolicy::parse(a.policy);
    cfg.max_plies = a.max_plies;
    cfg.seed = a.seed;
    cfg.query_budget = a.query_budget;
    cfg.imo.batch_size = a.imo_batch;

    fs::create_directories(a.out);
    auto ndjson = open_out(a.out / "outcomes.ndjson");
    std::vector<CampaignReport> reports;
    for (const std::string& name : names) {
        cfg.adversary = AdversarySpec::parse(name);
        std::size_t done = 0;
        const std::size_t total = warmups.size() * static_cast<std::size_t>(a.reps);
        CampaignOptions opt;
        opt.workers = a.workers;
        opt.on_outcome = [&](const AttackOutcome&) {
            if (++done % 50 == 0 || done == total)
                std::cerr << "\r" << cfg.adversary.str() << ": " << done << "/" << total << std::flush;
        };
        const auto outcomes = run_campaign(*model, warmups, cfg, a.reps, opt);
        std::cerr << "\n";
        for (const AttackOutcome& o : outcomes)
            write_outcome(ndjson, o);
        reports.push_back(build_report(outcomes));
        print_report(reports.back());
        write_campaign_files(names.size() == 1 ? a.out : a.out / cfg.adversary.str(), reports.back());
    }
    auto summary = open_out(a.out / "summary.csv");
    write_summary_csv(summary, reports);
    return 0;
}

// ── report ──────────────────────────────────────────────────────────────────

int run_report(const std::vector<fs::path>& inputs, const fs::path& out) {
    std::map<std::pair<std::string, std::string>, std::vector<AttackOutcome>> groups;
    for (const fs::path& p : inputs)
        for (AttackOutcome& o : read_outcomes(p))
            groups[{o.adversary, o.policy}].push_back(std::move(o));
    if (groups.empty())
        throw EmptyCampaign("no outcome records");
    std::vector<CampaignReport> reports;
    for (const auto& [key, outcomes] : groups) {
        reports.push_back(build_report(outcomes));
        print_report(reports.back());
        if (!out.empty())
            write_campaign_files(groups.size() == 1 ? out : out / (key.first + "_" + key.second), reports.back());
    }
    if (!out.empty()) {
        auto summary = open_out(out / "summary.csv");
        write_summary_csv(summary, reports);
    }
    return 0;
}

// ── corpus tools ────────────────────────────────────────────────────────────

void print_stats(const CorpusStats& s) {
    std::cout << "games " << s.games << "\nmoves " << s.moves << "\ntokens " << s.tokens << "\nmean_length "
              << s.mean_length << "\nstddev_length " << s.stddev_length << "\nmin_length " << s.min_length
              << "\nmax_length " << s.max_length << "\npremature_ends " << s.premature_ends << "\nissues "
              << s.issues.size() << "\n";
    for (const auto& [bucket, count] : s.length_histogram)
        std::cout << "length " << bucket << "-" << bucket + 9 << " " << count << "\n";
    for (const CorpusIssue& i : s.issues)
        std::cerr << "line " << i.line_index + 1 << ": " << i.message << "\n";
}

int run_perft(const std::string& fen, int depth, bool divide) {
    const BoardState b = fen.empty() ? BoardState() : BoardState::from_fen(fen);
    if (divide) {
        std::uint64_t total = 0;
        for (const Move& m : legal_moves(b)) {
            const std::uint64_t n = depth > 1 ? perft(apply_unchecked(b, m), depth - 1) : 1;
            std::cout << m.uci() << " " << n << "\n";
            total += n;
        }
        std::cout << "total " << total << "\n";
    } else {
        std::cout << perft(b, depth) << "\n";
    }
    return 0;
}

// ── serve / conform ─────────────────────────────────────────────────────────

int run_serve(const std::string& model_name, const std::string& listen, int max_ctx) {
    auto model = make_builtin_model(model_name);
    if (listen == "stdio") {
        serve_stream(*model, std::cin, std::cout, max_ctx);
        return 0;
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const Endpoint ep = Endpoint::parse(listen);
    serve_endpoint(
        *model, ep, g_stop,
        [&](int port) {
            if (ep.kind == Endpoint::Kind::Tcp)
                std::cerr << "listening on tcp:" << ep.target << ":" << port << "\n";
            else
                std::cerr << "listening on " << ep.str() << "\n";
        },
        max_ctx);
    return 0;
}

int run_conform(const ModelArgs& m) {
    ProtocolModel model(Endpoint::parse(m.spec), std::chrono::milliseconds(m.timeout_ms));
    bool ok = true;
    for (const ConformanceCheck& c : run_conformance(model)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.detail.empty())
            std::cout << ": " << c.detail;
        std::cout << "\n";
        ok = ok && c.passed;
    }
    return ok ? 0 : 1;
}

// ── evaluate ────────────────────────────────────────────────────────────────

struct EvalArgs {
    ModelArgs model;
    fs::path corpus;
    std::size_t games = 0;  // 0 = all
    double epsilon = 0.01;
    std::string policy = "greedy";
    std::uint64_t seed = 0;
    std::string side = "both";
    fs::path out;
};

Corpus load_eval_corpus(const EvalArgs& e) {
    Corpus c = read_corpus(e.corpus);
    for (const CorpusIssue& i : c.issues)
        std::cerr << "skipping line " << i.line_index + 1 << ": " << i.message << "\n";
    if (e.games > 0 && c.games.size() > e.games)
        c.games.resize(e.games);
    return c;
}

template <class F>
void for_each_boundary(const Corpus& corpus, F&& f) {
    for (std::size_t g = 0; g < corpus.games.size(); ++g) {
        GameCursor c;
        for (const Move& m : corpus.games[g].game.moves) {
            f(g, c);
            c = c.after_move(m);
        }
        f(g, c);
    }
}

int run_eval_iou(const EvalArgs& e) {
    auto model = open_model(e.model);
    const auto records = iou_over_games(*model, load_eval_corpus(e), e.epsilon);
    double wm = 0.0, wb = 0.0, mb = 0.0;
    std::size_t nb = 0;
    for (const IouRecord& r : records) {
        wm += r.iou.wm;
        if (r.iou.wb) {
            wb += *r.iou.wb;
            mb += *r.iou.mb;
            ++nb;
        }
    }
    const double n = static_cast<double>(std::max<std::size_t>(records.size(), 1));
    std::cout << "boundaries " << records.size() << "\niou_w_m " << wm / n << "\n";
    if (nb > 0)
        std::cout << "iou_w_b " << wb / static_cast<double>(nb) << "\niou_m_b " << mb / static_cast<double>(nb)
                  << "\n";
    if (!e.out.empty()) {
        auto out = open_out(e.out);
        write_iou_csv(out, records);
    }
    return 0;
}

int run_eval_probe(const EvalArgs& e) {
    auto model = open_model(e.model);
    if (!model->capabilities().probe)
        throw CapabilityMissing("model has no probe");
    double acc = 0.0, piece = 0.0;
    std::size_t n = 0;
    for_each_boundary(load_eval_corpus(e), [&](std::size_t, const GameCursor& c) {
        const ProbeAccuracy a = probe_accuracy(model->probe(c.tokens()), c.board().position());
        acc += a.accuracy;
        piece += a.piece_accuracy;
        ++n;
    });
    const double d = static_cast<double>(std::max<std::size_t>(n, 1));
    std::cout << "boundaries " << n << "\naccuracy " << acc / d << "\npiece_accuracy " << piece / d << "\n";
    return 0;
}

int run_eval_end(const EvalArgs& e) {
    auto model = open_model(e.model);
    std::cout << "game_end_recognition " << game_end_recognition(*model, load_eval_corpus(e)) << "\n";
    return 0;
}

int run_eval_ratio(const EvalArgs& e) {
    auto model = open_model(e.model);
    RatioSide side = RatioSide::Both;
    if (e.side == "black")
        side = RatioSide::Black;
    else if (e.side != "both")
        throw std::invalid_argument("--side must be both or black");
    std::mt19937_64 rng(e.seed);
    std::cout << "legal_move_ratio "
              << legal_move_ratio(*model, load_eval_corpus(e), DecodingPolicy::parse(e.policy), rng, side) << "\n";
    return 0;
}

int run_eval_grad(const EvalArgs& e) {
    auto model = open_model(e.model);
    if (!model->capabilities().grad_cos)
        throw CapabilityMissing("model has no grad_cos");
    double sum = 0.0;
    std::size_t n = 0;
    for_each_boundary(load_eval_corpus(e), [&](std::size_t, const GameCursor& c) {
        if (c.plies() == 0)
            return;
        sum += model->grad_cos(c.tokens());
        ++n;
    });
    std::cout << "boundaries " << n << "\nmean_cos_dist " << sum / static_cast<double>(std::max<std::size_t>(n, 1))
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial soundness checks for chess sequence models"};
    app.require_subcommand(1);
    int rc = 0;

    AttackArgs attack;
    auto* c_attack = app.add_subcommand("attack", "run adversarial episodes against a model");
    add_model_options(c_attack, attack.model);
    c_attack->add_option("--adversary", attack.adversaries,
                         "comma-separated: rm, smm, imo, bso, ad, adaptive-imo[:k], self-play")
        ->capture_default_str();
    c_attack->add_option("--policy", attack.policy, "greedy | topk:<k> | topp:<p>")->capture_default_str();
    c_attack->add_option("--warmups", attack.warmups, "corpus:<file>:<n>:<plies> | random:<n>:<plies>:<seed>")
        ->capture_default_str();
    c_attack->add_option("--max-plies", attack.max_plies, "plies after the warmup")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_attack->add_option("--reps", attack.reps)->check(CLI::PositiveNumber)->capture_default_str();
    c_attack->add_option("--seed", attack.seed)->capture_default_str();
    c_attack->add_option("--workers", attack.workers)->check(CLI::PositiveNumber)->capture_default_str();
    c_attack->add_option("--query-budget", attack.query_budget, "per episode, 0 = unlimited")->capture_default_str();
    c_attack->add_option("--imo-batch", attack.imo_batch)->check(CLI::PositiveNumber)->capture_default_str();
    c_attack->add_option("--out", attack.out, "output directory")->capture_default_str();
    c_attack->callback([&] { rc = run_attack(attack); });

    std::vector<fs::path> report_in;
    fs::path report_out;
    auto* c_report = app.add_subcommand("report", "rebuild reports from outcome records");
    c_report->add_option("outcomes", report_in, "outcomes.ndjson files")->required()->check(CLI::ExistingFile);
    c_report->add_option("--out", report_out, "directory for CSV files");
    c_report->callback([&] { rc = run_report(report_in, report_out); });

    GenSpec gen;
    fs::path gen_out;
    auto* c_gen = app.add_subcommand("gen", "generate a corpus of random games");
    c_gen->add_option("--n", gen.n)->check(CLI::PositiveNumber)->capture_default_str();
    c_gen->add_option("--max-plies", gen.max_plies)->check(CLI::PositiveNumber)->capture_default_str();
    c_gen->add_option("--seed", gen.seed)->capture_default_str();
    c_gen->add_option("--workers", gen.workers)->check(CLI::PositiveNumber)->capture_default_str();
    c_gen->add_option("--out", gen_out)->required();
    c_gen->callback([&] { print_stats(generate_random_corpus(gen, gen_out)); });

    fs::path stats_in;
    auto* c_stats = app.add_subcommand("stats", "corpus statistics");
    c_stats->add_option("corpus", stats_in)->required()->check(CLI::ExistingFile);
    c_stats->callback([&] { print_stats(corpus_stats(stats_in)); });

    fs::path filter_in, filter_out;
    int filter_cap = 150;
    auto* c_filter = app.add_subcommand("filter", "drop games longer than a ply cap");
    c_filter->add_option("corpus", filter_in)->required()->check(CLI::ExistingFile);
    c_filter->add_option("--max-plies", filter_cap)->check(CLI::NonNegativeNumber)->capture_default_str();
    c_filter->add_option("--out", filter_out)->required();
    c_filter->callback([&] {
        const FilterSummary s = filter_corpus(filter_in, filter_out, filter_cap);
        std::cout << "kept " << s.kept << "\ndropped " << s.dropped << "\nmalformed " << s.malformed << "\n";
    });

    fs::path pd_in, pd_out;
    auto* c_pd = app.add_subcommand("export-pd", "write legal-token supervision rows for a corpus");
    c_pd->add_option("corpus", pd_in)->required()->check(CLI::ExistingFile);
    c_pd->add_option("--out", pd_out)->required();
    c_pd->callback([&] {
        const PdExportSummary s = export_pd_corpus(pd_in, pd_out);
        std::cout << "games " << s.games << "\nrows " << s.rows << "\nrejected " << s.rejected.size() << "\n";
        for (const CorpusIssue& i : s.rejected)
            std::cerr << "line " << i.line_index + 1 << ": " << i.message << "\n";
    });

    std::string perft_fen;
    int perft_depth = 1;
    bool perft_divide = false;
    auto* c_perft = app.add_subcommand("perft", "count leaf nodes of the legal move tree");
    c_perft->add_option("depth", perft_depth)->required()->check(CLI::Range(0, 10));
    c_perft->add_option("--fen", perft_fen, "start position (default: initial)");
    c_perft->add_flag("--divide", perft_divide, "per-move counts");
    c_perft->callback([&] { rc = run_perft(perft_fen, perft_depth, perft_divide); });

    std::string serve_model = "perfect", serve_listen = "stdio";
    int serve_ctx = 4096;
    auto* c_serve = app.add_subcommand("serve", "serve a builtin model over the wire protocol");
    c_serve->add_option("--model", serve_model, "perfect | perfect-probe | seeded-flaw | uniform | length-flaw:<L>")
        ->capture_default_str();
    c_serve->add_option("--listen", serve_listen, "stdio | tcp:<host>:<port> | unix:<path>")->capture_default_str();
    c_serve->add_option("--max-ctx", serve_ctx)->check(CLI::PositiveNumber)->capture_default_str();
    c_serve->callback([&] { rc = run_serve(serve_model, serve_listen, serve_ctx); });

    ModelArgs conform;
    auto* c_conform = app.add_subcommand("conform", "check an external model against the wire protocol");
    c_conform->add_option("--model", conform.spec, "exec:<cmd> | tcp:<host>:<port> | unix:<path>")->required();
    c_conform->add_option("--timeout-ms", conform.timeout_ms)->check(CLI::PositiveNumber);
    c_conform->callback([&] { rc = run_conform(conform); });

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("evaluate", "world-model measures over a corpus");
    c_eval->require_subcommand(1);
    auto add_eval = [&](const char* name, const char* help, auto fn) {
        auto* c = c_eval->add_subcommand(name, help);
        add_model_options(c, eval.model);
        c->add_option("--corpus", eval.corpus)->required()->check(CLI::ExistingFile);
        c->add_option("--games", eval.games, "use the first N games (0 = all)")->capture_default_str();
        c->callback([&eval, &rc, fn] { rc = fn(eval); });
        return c;
    };
    auto* c_iou = add_eval("iou", "IoU between true, model and probe-board action sets", run_eval_iou);
    c_iou->add_option("--epsilon", eval.epsilon)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    c_iou->add_option("--out", eval.out, "per-boundary CSV");
    add_eval("probe", "probe board accuracy at every move boundary", run_eval_probe);
    add_eval("end", "game-end recognition", run_eval_end);
    auto* c_ratio = add_eval("legal-ratio", "fraction of legal decodes at move boundaries", run_eval_ratio);
    c_ratio->add_option("--policy", eval.policy)->capture_default_str();
    c_ratio->add_option("--seed", eval.seed)->capture_default_str();
    c_ratio->add_option("--side", eval.side, "both | black")->capture_default_str();
    add_eval("grad-cos", "mean gradient cosine distance reported by the model", run_eval_grad);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "soundcheck: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
