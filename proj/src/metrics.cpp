#include "soundcheck/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace soundcheck {

CampaignReport build_report(std::span<const AttackOutcome> outcomes) {
    if (outcomes.empty())
        throw EmptyCampaign("no outcomes to report on");
    CampaignReport r;
    r.adversary = outcomes.front().adversary;
    r.policy = outcomes.front().policy;
    r.episodes = outcomes.size();

    std::map<int, std::size_t> failures_at;
    double len = 0, seconds = 0, queries = 0;
    std::size_t illegal = 0, end = 0;
    for (const AttackOutcome& o : outcomes) {
        if (o.adversary != r.adversary)
            r.adversary = "mixed";
        if (o.policy != r.policy)
            r.policy = "mixed";
        len += o.episode_length();
        seconds += o.wall_time;
        queries += static_cast<double>(o.queries);
        switch (o.reason) {
        case TerminalReason::GameOver: ++r.game_overs; break;
        case TerminalReason::PlyCap: ++r.ply_caps; break;
        case TerminalReason::QueryFailure: ++r.query_failures; break;
        case TerminalReason::ModelError: break;
        }
        if (!o.success || !o.error_type || !o.failure_ply)
            continue;
        ++r.successes;
        ++failures_at[*o.failure_ply - o.warmup_plies];
        const ErrorType t = *o.error_type;
        ++r.error_type_counts[error_type_number(t) - 1];
        (t == ErrorType::IncorrectEndPrediction ? end : illegal) += 1;
        if ((t == ErrorType::ImmovablePiece || t == ErrorType::InvalidDirection || t == ErrorType::ErroneousMove) &&
            o.piece)
            ++r.piece_type_counts[kind_index(*o.piece)];
    }

    const double n = static_cast<double>(r.episodes);
    r.asr = static_cast<double>(r.successes) / n;
    r.illegal_rate = static_cast<double>(illegal) / n;
    r.end_rate = static_cast<double>(end) / n;
    r.mean_seq_len = len / n;
    r.mean_seconds = seconds / n;
    r.mean_queries = queries / n;
    if (r.successes > 0)
        for (int i = 0; i < kErrorTypes; ++i)
            r.error_type_freqs[i] = static_cast<double>(r.error_type_counts[i]) / static_cast<double>(r.successes);

    std::size_t cumulative = 0;
    for (const auto& [ply, count] : failures_at) {
        cumulative += count;
        r.asr_by_ply.push_back({ply, static_cast<double>(cumulative) / n});
    }
    if (!curve_monotone(r.asr_by_ply))
        throw std::logic_error("cumulative ASR curve is not monotone");
    r.probe_agreement = probe_agreement_ratio(outcomes);
    return r;
}

bool curve_monotone(std::span<const CurvePoint> curve) noexcept {
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].ply <= curve[i - 1].ply || curve[i].cumulative_asr < curve[i - 1].cumulative_asr)
            return false;
    return true;
}

// ── Agreement sets ──────────────────────────────────────────────────────────

double iou(const ActionSet& a, const ActionSet& b) {
    std::size_t inter = (a.eos && b.eos) ? 1 : 0;
    for (const Move& m : a.moves)
        inter += b.moves.count(m);
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

ActionSet true_actions(const GameCursor& cursor) {
    const LegalContinuations c = continuations(cursor);
    ActionSet s;
    s.moves.insert(c.moves.begin(), c.moves.end());
    s.eos = c.eos_legal;
    return s;
}

ActionSet model_actions(Model& model, const GameCursor& cursor, double epsilon) {
    if (!cursor.at_boundary())
        throw MisalignedCursor("model_actions needs a cursor at a move boundary");
    const TokenSequence& base = cursor.tokens();
    const ModelDistribution d1 = model.dist(base);
    ActionSet s;
    s.eos = d1[kEos] >= epsilon;

    // An action's probability never exceeds any prefix of its factors, so
    // only branches whose running product reaches epsilon are expanded.
    std::vector<int> froms;
    std::vector<TokenSequence> seqs;
    for (int f = 0; f < 64; ++f)
        if (d1[square_token(Square(f))] >= epsilon && d1[square_token(Square(f))] > 0.0) {
            froms.push_back(f);
            TokenSequence q = base;
            q.push_back(square_token(Square(f)));
            seqs.push_back(std::move(q));
        }
    const auto d2s = model.dist_batch(seqs);

    struct Pair {
        int f, t;
        double head;
    };
    std::vector<Pair> pairs;
    seqs.clear();
    for (std::size_t i = 0; i < froms.size(); ++i) {
        const double pf = d1[square_token(Square(froms[i]))];
        for (int t = 0; t < 64; ++t) {
            if (t == froms[i])
                continue;
            const double head = pf * d2s[i][square_token(Square(t))];
            if (head >= epsilon && head > 0.0) {
                pairs.push_back({froms[i], t, head});
                TokenSequence q = base;
                q.push_back(square_token(Square(froms[i])));
                q.push_back(square_token(Square(t)));
                seqs.push_back(std::move(q));
            }
        }
    }
    const auto d3s = model.dist_batch(seqs);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Pair& p = pairs[i];
        if (p.head * std::max(0.0, 1.0 - d3s[i].promotion_mass()) >= epsilon)
            s.moves.insert(Move{Square(p.f), Square(p.t), std::nullopt});
        for (TokenId q = kPromoQueen; q <= kPromoKnight; ++q)
            if (p.head * d3s[i][q] >= epsilon)
                s.moves.insert(Move{Square(p.f), Square(p.t), token_promotion(q)});
    }
    return s;
}

ActionSet probe_actions(const ProbeBoard& probe, const GameCursor& cursor) {
    const Position pos = probe.argmax_position(cursor.board().position());
    const MoveList moves = probe_moves(pos);
    ActionSet s;
    s.moves.insert(moves.begin(), moves.end());
    s.eos = moves.empty() || insufficient_material(pos);
    return s;
}

IouResult iou_agreement(Model& model, const ProbeBoard* probe, const GameCursor& cursor, double epsilon) {
    const ActionSet w = true_actions(cursor);
    const ActionSet wm = model_actions(model, cursor, epsilon);
    IouResult r;
    r.wm = iou(w, wm);
    if (probe) {
        const ActionSet wb = probe_actions(*probe, cursor);
        r.wb = iou(w, wb);
        r.mb = iou(wm, wb);
    }
    return r;
}

IouResult iou_agreement(Model& model, const GameCursor& cursor, double epsilon) {
    if (!model.capabilities().probe)
        return iou_agreement(model, nullptr, cursor, epsilon);
    const ProbeBoard pb = model.probe(cursor.tokens());
    return iou_agreement(model, &pb, cursor, epsilon);
}

namespace {

std::string line_prefix(const CorpusEntry& e) { return "line " + std::to_string(e.line_index + 1) + ": "; }

GameCursor advance_checked(const GameCursor& c, const Move& m, const CorpusEntry& e) {
    try {
        return c.after_move(m);
    } catch (const InvalidToken& err) {
        throw std::invalid_argument(line_prefix(e) + "illegal move " + m.uci() + " (" + err.what() + ")");
    }
}

}  // namespace

std::vector<IouRecord> iou_over_games(Model& model, const Corpus& games, double epsilon) {
    std::vector<IouRecord> out;
    for (std::size_t g = 0; g < games.games.size(); ++g) {
        const CorpusEntry& e = games.games[g];
        GameCursor c;
        for (std::size_t i = 0;; ++i) {
            out.push_back({g, c.plies(), iou_agreement(model, c, epsilon)});
            if (i == e.game.moves.size())
                break;
            c = advance_checked(c, e.game.moves[i], e);
        }
    }
    return out;
}

// ── Probes ──────────────────────────────────────────────────────────────────

ProbeAccuracy probe_accuracy(const ProbeBoard& probe, const Position& truth) {
    int correct = 0, subset = 0, subset_correct = 0;
    for (int s = 0; s < 64; ++s) {
        const int predicted = probe.argmax_class(Square(s));
        const int actual = probe_class(truth.piece_at(Square(s)));
        correct += predicted == actual;
        if (predicted != 0 || actual != 0) {
            ++subset;
            subset_correct += predicted == actual;
        }
    }
    return {correct / 64.0, subset == 0 ? 1.0 : static_cast<double>(subset_correct) / subset};
}

std::optional<double> probe_agreement_ratio(std::span<const AttackOutcome> outcomes) {
    std::size_t qualifying = 0, agree = 0;
    for (const AttackOutcome& o : outcomes) {
        if (!o.success || !o.error_type || !o.probe_fen || error_type_number(*o.error_type) > 5)
            continue;
        const auto& t = o.offending_tokens;
        if (t.size() < 2 || !is_square_token(t[0]) || !is_square_token(t[1]))
            continue;
        Move m{token_square(t[0]), token_square(t[1]), std::nullopt};
        if (t.size() > 2 && is_promotion_token(t[2]))
            m.promotion = token_promotion(t[2]);
        ++qualifying;
        agree += probe_moves(Position::from_fen(*o.probe_fen)).contains(m);
    }
    if (qualifying == 0)
        return std::nullopt;
    return static_cast<double>(agree) / static_cast<double>(qualifying);
}

// ── Corpus measures ─────────────────────────────────────────────────────────

double game_end_recognition(Model& model, const Corpus& games) {
    if (games.games.empty())
        throw std::invalid_argument("game-end recognition needs at least one game");
    for (const CorpusEntry& e : games.games) {
        GameCursor c;
        for (const Move& m : e.game.moves)
            c = advance_checked(c, m, e);
        if (c.terminal() == TerminalKind::NotTerminal)
            throw std::invalid_argument(line_prefix(e) + "game does not end by rule");
    }
    std::size_t recognized = 0;
    for (const CorpusEntry& e : games.games) {
        GameCursor c;
        bool ok = true;
        for (const Move& m : e.game.moves) {
            if (model.dist(c.tokens()).argmax() == kEos) {
                ok = false;
                break;
            }
            c = c.after_move(m);
        }
        if (ok && model.dist(c.tokens()).argmax() == kEos)
            ++recognized;
    }
    return static_cast<double>(recognized) / static_cast<double>(games.games.size());
}

namespace {

// Calls fn(cursor) at every boundary that precedes a move of the chosen side.
template <typename Fn>
std::size_t for_each_boundary(const Corpus& games, RatioSide side, Fn&& fn) {
    if (games.games.empty())
        throw std::invalid_argument("legal-move ratio needs at least one game");
    std::size_t n = 0;
    for (const CorpusEntry& e : games.games) {
        GameCursor c;
        for (const Move& m : e.game.moves) {
            if (side == RatioSide::Both || c.board().side_to_move() == Color::Black) {
                fn(c);
                ++n;
            }
            c = advance_checked(c, m, e);
        }
    }
    if (n == 0)
        throw std::invalid_argument("corpus has no move boundaries to evaluate");
    return n;
}

}  // namespace

double legal_move_ratio(Model& model, const Corpus& games, const DecodingPolicy& policy, std::mt19937_64& rng,
                        RatioSide side) {
    std::size_t legal = 0;
    const std::size_t n = for_each_boundary(games, side, [&](const GameCursor& c) {
        const DecodedMove d = decode_move(model, c.tokens(), policy, rng);
        if (const Move* m = std::get_if<Move>(&d.output))
            legal += c.board_moves().contains(*m);
    });
    return static_cast<double>(legal) / static_cast<double>(n);
}

double expected_legal_move_ratio(Model& model, const Corpus& games, RatioSide side) {
    double total = 0.0;
    const std::size_t n = for_each_boundary(games, side, [&](const GameCursor& c) {
        const auto moves = continuations(c).moves;
        for (double p : move_probabilities(model, c.tokens(), moves))
            total += p;
    });
    return total / static_cast<double>(n);
}

// ── CSV ─────────────────────────────────────────────────────────────────────

namespace {

std::string opt_num(const std::optional<double>& v) {
    if (!v)
        return "";
    std::ostringstream s;
    s << std::setprecision(12) << *v;
    return s.str();
}

}  // namespace

void write_summary_csv(std::ostream& out, std::span<const CampaignReport> reports) {
    out << "# one row per campaign; rates are fractions of episodes; lengths in plies after the warmup; "
           "seconds and queries are per-episode means\n";
    out << "adversary,policy,episodes,successes,asr,illegal_rate,end_rate,mean_len_plies,mean_seconds,"
           "mean_queries,game_overs,ply_caps,query_failures,probe_agreement\n";
    out << std::setprecision(12);
    for (const CampaignReport& r : reports)
        out << r.adversary << ',' << r.policy << ',' << r.episodes << ',' << r.successes << ',' << r.asr << ','
            << r.illegal_rate << ',' << r.end_rate << ',' << r.mean_seq_len << ',' << r.mean_seconds << ','
            << r.mean_queries << ',' << r.game_overs << ',' << r.ply_caps << ',' << r.query_failures << ','
            << opt_num(r.probe_agreement) << '\n';
}

void write_asr_curve_csv(std::ostream& out, const CampaignReport& report) {
    out << "# ply: plies after the warmup at which the model failed; cumulative_asr: share of all episodes "
           "failed by then\n";
    out << "ply,cumulative_asr\n" << std::setprecision(12);
    for (const CurvePoint& p : report.asr_by_ply)
        out << p.ply << ',' << p.cumulative_asr << '\n';
}

void write_taxonomy_csv(std::ostream& out, const CampaignReport& report) {
    out << "# kind: error_type or piece; count: successes; share: of successes (error types) or of types 3-5 "
           "(pieces)\n";
    out << "kind,name,count,share\n" << std::setprecision(12);
    for (int i = 0; i < kErrorTypes; ++i)
        out << "error_type," << error_type_name(static_cast<ErrorType>(i + 1)) << ',' << report.error_type_counts[i]
            << ',' << report.error_type_freqs[i] << '\n';
    std::size_t pieces = 0;
    for (std::size_t c : report.piece_type_counts)
        pieces += c;
    for (int k = 0; k < kPieceKinds; ++k)
        out << "piece," << kind_name(static_cast<PieceKind>(k)) << ',' << report.piece_type_counts[k] << ','
            << (pieces ? static_cast<double>(report.piece_type_counts[k]) / static_cast<double>(pieces) : 0.0)
            << '\n';
}

void write_iou_csv(std::ostream& out, std::span<const IouRecord> records) {
    out << "# game: index in the corpus; ply: plies before the boundary; iou_wm: true vs model; iou_wb: true vs "
           "probe; iou_mb: model vs probe (empty without a probe)\n";
    out << "game,ply,iou_wm,iou_wb,iou_mb\n" << std::setprecision(12);
    for (const IouRecord& r : records)
        out << r.game << ',' << r.ply << ',' << r.iou.wm << ',' << opt_num(r.iou.wb) << ',' << opt_num(r.iou.mb)
            << '\n';
}

}  // namespace soundcheck
