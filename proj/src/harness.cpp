#include "soundcheck/harness.hpp"

#include <chrono>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace soundcheck {

using json = nlohmann::json;

std::string_view error_type_name(ErrorType t) noexcept {
    switch (t) {
    case ErrorType::NonexistentPiece: return "nonexistent-piece";
    case ErrorType::OpponentsPiece: return "opponents-piece";
    case ErrorType::ImmovablePiece: return "immovable-piece";
    case ErrorType::InvalidDirection: return "invalid-direction";
    case ErrorType::ErroneousMove: return "erroneous-move";
    case ErrorType::StructuralError: return "structural-error";
    case ErrorType::IncorrectEndPrediction: return "incorrect-end-prediction";
    }
    return "?";
}

std::optional<ErrorType> parse_error_type(std::string_view name) noexcept {
    for (int i = 1; i <= kErrorTypes; ++i)
        if (error_type_name(static_cast<ErrorType>(i)) == name)
            return static_cast<ErrorType>(i);
    return std::nullopt;
}

std::string_view terminal_reason_name(TerminalReason r) noexcept {
    switch (r) {
    case TerminalReason::ModelError: return "model-error";
    case TerminalReason::GameOver: return "game-over";
    case TerminalReason::PlyCap: return "ply-cap";
    case TerminalReason::QueryFailure: return "query-failure";
    }
    return "?";
}

ErrorType classify_error(const BoardState& state, const ModelOutput& output) {
    if (std::holds_alternative<StructuralFault>(output))
        return ErrorType::StructuralError;
    if (std::holds_alternative<EosMark>(output)) {
        if (terminal_kind(state) != TerminalKind::NotTerminal)
            throw std::logic_error("EOS at a terminal position is not an error");
        return ErrorType::IncorrectEndPrediction;
    }
    const auto reason = diagnose_illegal(state, std::get<Move>(output));
    if (!reason)
        throw std::logic_error("move " + std::get<Move>(output).uci() + " is legal");
    switch (*reason) {
    case IllegalReason::EmptySource: return ErrorType::NonexistentPiece;
    case IllegalReason::OpponentPiece: return ErrorType::OpponentsPiece;
    case IllegalReason::ImmovablePiece: return ErrorType::ImmovablePiece;
    case IllegalReason::InvalidDirection: return ErrorType::InvalidDirection;
    case IllegalReason::Erroneous: return ErrorType::ErroneousMove;
    }
    return ErrorType::ErroneousMove;
}

// ── Warmups ─────────────────────────────────────────────────────────────────

namespace {

std::size_t parse_count(const std::string& s, const char* what) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &used);
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used == 0 || used != s.size())
        throw std::invalid_argument(std::string("bad ") + what + " '" + s + "'");
    return static_cast<std::size_t>(v);
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

}  // namespace

WarmupSpec WarmupSpec::parse(std::string_view text) {
    const auto parts = split(text, ':');
    WarmupSpec spec;
    if (parts.size() == 4 && parts[0] == "random") {
        spec.source = Source::RandomValid;
        spec.n = parse_count(parts[1], "warmup count");
        spec.plies = static_cast<int>(parse_count(parts[2], "warmup plies"));
        spec.seed = parse_count(parts[3], "seed");
        return spec;
    }
    if (parts.size() >= 4 && parts[0] == "corpus") {
        spec.source = Source::CorpusPrefix;
        std::string file = parts[1];
        for (std::size_t i = 2; i + 2 < parts.size(); ++i)
            file += ":" + parts[i];
        spec.corpus = file;
        spec.n = parse_count(parts[parts.size() - 2], "warmup count");
        spec.plies = static_cast<int>(parse_count(parts.back(), "warmup plies"));
        return spec;
    }
    throw std::invalid_argument("warmup spec must be corpus:<file>:<n>:<plies> or random:<n>:<plies>:<seed>");
}

std::vector<TokenSequence> sample_warmups(const WarmupSpec& spec) {
    if (spec.plies < 0 || spec.plies % 2 != 0)
        throw std::invalid_argument("warmup plies must be even and non-negative");
    std::vector<TokenSequence> out;
    std::set<TokenSequence> seen;
    auto accept = [&](const GameCursor& c) {
        if (c.terminal() != TerminalKind::NotTerminal)
            return;
        if (spec.unique && !seen.insert(c.tokens()).second)
            return;
        out.push_back(c.tokens());
    };

    if (spec.source == WarmupSpec::Source::CorpusPrefix) {
        const Corpus corpus = read_corpus(spec.corpus);
        for (const CorpusEntry& e : corpus.games) {
            if (out.size() == spec.n)
                break;
            if (e.game.moves.size() < static_cast<std::size_t>(spec.plies))
                continue;
            try {
                accept(GameCursor::from_moves(std::span(e.game.moves).first(spec.plies)));
            } catch (const InvalidToken&) {
            }
        }
    } else {
        std::mt19937_64 rng(spec.seed);
        const std::size_t attempts = 1000 + 200 * spec.n;
        for (std::size_t a = 0; a < attempts && out.size() < spec.n; ++a) {
            GameCursor c;
            bool alive = true;
            for (int i = 0; i < spec.plies && alive; ++i) {
                const LegalContinuations cont = continuations(c);
                if (cont.moves.empty())
                    alive = false;
                else
                    c = c.after_move(cont.moves[uniform_index(rng, cont.moves.size())]);
            }
            if (alive)
                accept(c);
        }
    }
    if (out.size() < spec.n)
        throw InsufficientPrefixes("only " + std::to_string(out.size()) + " usable " + std::to_string(spec.plies) +
                                   "-ply prefixes, " + std::to_string(spec.n) + " requested");
    return out;
}

// ── Episodes ────────────────────────────────────────────────────────────────

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<Move> moves_of(const TokenSequence& tokens) {
    std::vector<Move> out;
    for (const auto& item : decode_move_stream(tokens))
        if (const Move* m = std::get_if<Move>(&item))
            out.push_back(*m);
    return out;
}

}  // namespace

std::uint64_t episode_seed(std::uint64_t master, std::size_t warmup_id, int repetition) noexcept {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ static_cast<std::uint64_t>(warmup_id));
    return splitmix64(s ^ (static_cast<std::uint64_t>(repetition) << 32));
}

bool AttackOutcome::same_result(const AttackOutcome& o) const {
    return warmup_id == o.warmup_id && repetition == o.repetition && adversary == o.adversary &&
           policy == o.policy && success == o.success && failure_ply == o.failure_ply &&
           error_type == o.error_type && offending_tokens == o.offending_tokens && piece == o.piece &&
           probe_fen == o.probe_fen && reason == o.reason && game_over == o.game_over &&
           end_recognized == o.end_recognized && message == o.message && warmup_plies == o.warmup_plies &&
           trace == o.trace && queries == o.queries;
}

AttackOutcome run_episode(Model& model, const TokenSequence& warmup, const EpisodeConfig& cfg,
                          std::size_t warmup_id, int repetition) {
    if (cfg.max_plies <= 0)
        throw std::invalid_argument("max_plies must be positive");
    if (cfg.adversary.kind == AdversaryKind::BSO && !model.capabilities().probe)
        throw CapabilityMissing(model.name() + ": BSO needs a probe head");

    GameCursor cursor;
    try {
        cursor = GameCursor::from_tokens(warmup);
    } catch (const InvalidToken& e) {
        throw std::invalid_argument(std::string("invalid warmup: ") + e.what());
    }
    if (!cursor.at_boundary() || cursor.board().side_to_move() != Color::White)
        throw std::invalid_argument("warmup must end at a move boundary with White to move");

    const auto start = std::chrono::steady_clock::now();
    AttackOutcome out;
    out.warmup_id = warmup_id;
    out.repetition = repetition;
    out.adversary = cfg.adversary.str();
    out.policy = cfg.policy.str();
    out.warmup_plies = cursor.plies();

    CountingModel counted(model);
    std::mt19937_64 rng(episode_seed(cfg.seed, warmup_id, repetition));
    const bool self_play = cfg.adversary.kind == AdversaryKind::SelfPlay;

    try {
        for (;;) {
            const bool model_turn = self_play || cursor.board().side_to_move() == Color::Black;
            if (cursor.terminal() != TerminalKind::NotTerminal) {
                out.reason = TerminalReason::GameOver;
                out.game_over = cursor.terminal();
                if (model_turn) {
                    const DecodedMove d = decode_move(counted, cursor.tokens(), cfg.policy, rng);
                    out.end_recognized = std::holds_alternative<EosMark>(d.output);
                }
                break;
            }
            if (cursor.plies() - out.warmup_plies >= cfg.max_plies) {
                out.reason = TerminalReason::PlyCap;
                break;
            }
            if (cfg.query_budget && counted.queries() >= cfg.query_budget) {
                out.reason = TerminalReason::QueryFailure;
                out.message = "query budget exhausted";
                break;
            }
            if (!model_turn) {
                cursor = cursor.after_move(select_adversary_move(cfg.adversary, counted, cursor, rng, cfg.imo));
                continue;
            }
            const DecodedMove d = decode_move(counted, cursor.tokens(), cfg.policy, rng);
            if (const Move* m = std::get_if<Move>(&d.output); m && cursor.board_moves().contains(*m)) {
                cursor = cursor.after_move(*m);
                continue;
            }
            out.success = true;
            out.reason = TerminalReason::ModelError;
            out.failure_ply = cursor.plies() + 1;
            out.error_type = classify_error(cursor.board(), d.output);
            out.offending_tokens = d.tokens;
            if (const Move* m = std::get_if<Move>(&d.output)) {
                if (const auto p = cursor.board().piece_at(m->from))
                    out.piece = p->kind;
                if (counted.capabilities().probe)
                    out.probe_fen = counted.probe(cursor.tokens()).argmax_position(cursor.board().position()).fen();
            }
            break;
        }
    } catch (const QueryFailure& e) {
        out.reason = TerminalReason::QueryFailure;
        out.message = e.what();
    }

    out.trace = moves_of(cursor.tokens());
    out.queries = counted.queries();
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

std::vector<AttackOutcome> run_campaign(Model& model, std::span<const TokenSequence> warmups,
                                        const EpisodeConfig& cfg, int repetitions, const CampaignOptions& opt) {
    if (repetitions < 1)
        throw std::invalid_argument("repetitions must be at least 1");
    if (cfg.adversary.kind == AdversaryKind::BSO && !model.capabilities().probe)
        throw CapabilityMissing(model.name() + ": BSO needs a probe head");

    const std::size_t total = warmups.size() * static_cast<std::size_t>(repetitions);
    std::vector<AttackOutcome> results(total);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mu;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= total || failed.load())
                return;
            const std::size_t w = i % warmups.size();
            const int rep = static_cast<int>(i / warmups.size());
            try {
                results[i] = run_episode(model, warmups[w], cfg, w, rep);
                if (opt.on_outcome) {
                    std::lock_guard lock(mu);
                    opt.on_outcome(results[i]);
                }
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error)
                    error = std::current_exception();
                failed = true;
                return;
            }
        }
    };

    const unsigned n = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(std::max<std::size_t>(total, 1))));
    if (n == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n; ++t)
            pool.emplace_back(work);
    }
    if (error)
        std::rethrow_exception(error);
    return results;
}

// ── Records ─────────────────────────────────────────────────────────────────

std::string outcome_to_json(const AttackOutcome& o) {
    json j;
    j["warmup_id"] = o.warmup_id;
    j["repetition"] = o.repetition;
    j["adversary"] = o.adversary;
    j["policy"] = o.policy;
    j["success"] = o.success;
    j["failure_ply"] = o.failure_ply ? json(*o.failure_ply) : json(nullptr);
    j["error_type"] = o.error_type ? json(std::string(error_type_name(*o.error_type))) : json(nullptr);
    j["offending_tokens"] = o.offending_tokens;
    j["piece"] = o.piece ? json(std::string(1, kind_letter(*o.piece))) : json(nullptr);
    j["probe_fen"] = o.probe_fen ? json(*o.probe_fen) : json(nullptr);
    j["terminal_reason"] = std::string(terminal_reason_name(o.reason));
    j["game_over"] = o.game_over == TerminalKind::NotTerminal ? json(nullptr)
                                                               : json(std::string(terminal_name(o.game_over)));
    j["end_recognized"] = o.end_recognized ? json(*o.end_recognized) : json(nullptr);
    j["message"] = o.message;
    j["warmup_plies"] = o.warmup_plies;
    std::string trace;
    for (const Move& m : o.trace) {
        if (!trace.empty())
            trace += ' ';
        trace += m.uci();
    }
    j["trace"] = trace;
    j["queries"] = o.queries;
    j["wall_time"] = o.wall_time;
    return j.dump();
}

void write_outcome(std::ostream& out, const AttackOutcome& o) { out << outcome_to_json(o) << '\n'; }

AttackOutcome outcome_from_json(std::string_view line) {
    try {
        const json j = json::parse(line);
        AttackOutcome o;
        o.warmup_id = j.at("warmup_id").get<std::size_t>();
        o.repetition = j.at("repetition").get<int>();
        o.adversary = j.at("adversary").get<std::string>();
        o.policy = j.at("policy").get<std::string>();
        o.success = j.at("success").get<bool>();
        if (!j.at("failure_ply").is_null())
            o.failure_ply = j["failure_ply"].get<int>();
        if (!j.at("error_type").is_null()) {
            o.error_type = parse_error_type(j["error_type"].get<std::string>());
            if (!o.error_type)
                throw std::invalid_argument("unknown error type");
        }
        o.offending_tokens = j.at("offending_tokens").get<TokenSequence>();
        if (!j.at("piece").is_null()) {
            const auto s = j["piece"].get<std::string>();
            o.piece = s.size() == 1 ? kind_from_letter(s[0]) : std::nullopt;
            if (!o.piece)
                throw std::invalid_argument("unknown piece");
        }
        if (!j.at("probe_fen").is_null())
            o.probe_fen = j["probe_fen"].get<std::string>();
        const auto reason = j.at("terminal_reason").get<std::string>();
        bool found = false;
        for (auto r : {TerminalReason::ModelError, TerminalReason::GameOver, TerminalReason::PlyCap,
                       TerminalReason::QueryFailure})
            if (terminal_reason_name(r) == reason) {
                o.reason = r;
                found = true;
            }
        if (!found)
            throw std::invalid_argument("unknown terminal reason");
        if (!j.at("game_over").is_null()) {
            const auto name = j["game_over"].get<std::string>();
            for (int k = 1; k <= static_cast<int>(TerminalKind::FiftyMoveRule); ++k)
                if (terminal_name(static_cast<TerminalKind>(k)) == name)
                    o.game_over = static_cast<TerminalKind>(k);
            if (o.game_over == TerminalKind::NotTerminal)
                throw std::invalid_argument("unknown terminal kind");
        }
        if (!j.at("end_recognized").is_null())
            o.end_recognized = j["end_recognized"].get<bool>();
        o.message = j.at("message").get<std::string>();
        o.warmup_plies = j.at("warmup_plies").get<int>();
        o.trace = parse_game_line(j.at("trace").get<std::string>()).moves;
        o.queries = j.at("queries").get<std::uint64_t>();
        o.wall_time = j.at("wall_time").get<double>();
        return o;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad outcome record: ") + e.what());
    }
}

std::vector<AttackOutcome> read_outcomes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::vector<AttackOutcome> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty())
            continue;
        try {
            out.push_back(outcome_from_json(line));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace soundcheck
