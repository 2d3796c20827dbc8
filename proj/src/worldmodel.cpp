#include "soundcheck/worldmodel.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

namespace soundcheck {

std::string_view fault_name(TokenFault f) noexcept {
    switch (f) {
    case TokenFault::MissingBos: return "missing_bos";
    case TokenFault::Structural: return "structural";
    case TokenFault::IllegalToken: return "illegal_token";
    case TokenFault::EosNotTerminal: return "eos_not_terminal";
    case TokenFault::AfterEos: return "after_eos";
    }
    return "?";
}

InvalidToken::InvalidToken(TokenFault fault, TokenId token)
    : std::runtime_error("token " + token_name(token) + " rejected: " + std::string(fault_name(fault))),
      fault_(fault) {}

namespace {

TerminalKind classify(const BoardState& board, const MoveList& legal) noexcept {
    if (legal.empty())
        return board.in_check() ? TerminalKind::Checkmate : TerminalKind::Stalemate;
    if (insufficient_material(board.position()))
        return TerminalKind::InsufficientMaterial;
    if (board.repetition_count() >= 3)
        return TerminalKind::ThreefoldRepetition;
    if (board.halfmove_clock() >= 100)
        return TerminalKind::FiftyMoveRule;
    return TerminalKind::NotTerminal;
}

}  // namespace

GameCursor::GameCursor() : tokens_{kBos} { enter_board(BoardState{}); }

GameCursor GameCursor::at_position(BoardState board) {
    GameCursor c;
    c.enter_board(std::move(board));
    return c;
}

GameCursor GameCursor::from_tokens(TokenSpan tokens) {
    if (tokens.empty() || tokens[0] != kBos)
        throw InvalidToken(TokenFault::MissingBos, tokens.empty() ? kPad : tokens[0]);
    GameCursor c;
    for (std::size_t i = 1; i < tokens.size(); ++i)
        if (auto f = c.try_advance(tokens[i]))
            throw InvalidToken(*f, tokens[i]);
    return c;
}

GameCursor GameCursor::from_moves(std::span<const Move> moves) {
    GameCursor c;
    for (const Move& m : moves)
        c = c.after_move(m);
    return c;
}

void GameCursor::enter_board(BoardState next) {
    board_ = std::move(next);
    board_.position().generate_legal(legal_);
    terminal_ = classify(board_, legal_);
    phase_ = ExpectFrom{};
}

TokenSet GameCursor::legal_tokens() const {
    TokenSet set;
    if (finished_)
        return set;
    if (std::holds_alternative<ExpectFrom>(phase_)) {
        if (terminal_ != TerminalKind::NotTerminal) {
            set.set(kEos);
            return set;
        }
        for (const Move& m : legal_)
            set.set(square_token(m.from));
    } else if (const auto* to = std::get_if<ExpectTo>(&phase_)) {
        for (const Move& m : legal_)
            if (m.from == to->from)
                set.set(square_token(m.to));
    } else {
        const auto& promo = std::get<ExpectPromotion>(phase_);
        for (const Move& m : legal_)
            if (m.from == promo.from && m.to == promo.to && m.promotion)
                set.set(promotion_token(*m.promotion));
    }
    return set;
}

std::optional<TokenFault> GameCursor::try_advance(TokenId t) {
    if (finished_)
        return TokenFault::AfterEos;

    auto commit = [&](const Move m) {
        const bool capture = board_.position().is_capture(m);
        enter_board(apply_unchecked(board_, m));
        tokens_.push_back(t);
        ++plies_;
        last_move_ = m;
        last_capture_ = capture;
    };

    if (std::holds_alternative<ExpectFrom>(phase_)) {
        if (t == kEos) {
            if (terminal_ == TerminalKind::NotTerminal)
                return TokenFault::EosNotTerminal;
            finished_ = true;
            tokens_.push_back(t);
            return std::nullopt;
        }
        if (!is_square_token(t))
            return TokenFault::Structural;
        if (terminal_ != TerminalKind::NotTerminal)
            return TokenFault::IllegalToken;
        const Square from = token_square(t);
        if (std::none_of(legal_.begin(), legal_.end(), [&](const Move& m) { return m.from == from; }))
            return TokenFault::IllegalToken;
        phase_ = ExpectTo{from};
        tokens_.push_back(t);
        return std::nullopt;
    }

    if (const auto* pending = std::get_if<ExpectTo>(&phase_)) {
        if (!is_square_token(t))
            return TokenFault::Structural;
        const Square from = pending->from;
        const Square to = token_square(t);
        bool promotes = false;
        for (const Move& m : legal_) {
            if (m.from != from || m.to != to)
                continue;
            if (!m.promotion) {
                commit(m);
                return std::nullopt;
            }
            promotes = true;
        }
        if (!promotes)
            return TokenFault::IllegalToken;
        phase_ = ExpectPromotion{from, to};
        tokens_.push_back(t);
        return std::nullopt;
    }

    const auto pending = std::get<ExpectPromotion>(phase_);
    if (!is_promotion_token(t)) {
        // Under the promotion-tail rule the pair stands as a 2-token move,
        // which is an illegal (unpromoted) pawn move to the last rank.
        return is_square_token(t) || t == kEos ? TokenFault::IllegalToken : TokenFault::Structural;
    }
    const Move m{pending.from, pending.to, token_promotion(t)};
    if (!legal_.contains(m))
        return TokenFault::IllegalToken;
    commit(m);
    return std::nullopt;
}

GameCursor GameCursor::advanced(TokenId t) const {
    GameCursor next = *this;
    if (auto f = next.try_advance(t))
        throw InvalidToken(*f, t);
    return next;
}

GameCursor GameCursor::after_move(const Move& m) const {
    GameCursor next = *this;
    TokenSequence toks = encode_move(m);
    for (TokenId t : toks)
        if (auto f = next.try_advance(t))
            throw InvalidToken(*f, t);
    return next;
}

LegalContinuations continuations(const GameCursor& cursor) {
    if (!cursor.at_boundary() || cursor.finished())
        throw MisalignedCursor("continuations requires a cursor at a move boundary");
    LegalContinuations out;
    if (cursor.terminal() != TerminalKind::NotTerminal) {
        out.eos_legal = true;
        return out;
    }
    out.moves.assign(cursor.board_moves().begin(), cursor.board_moves().end());
    std::sort(out.moves.begin(), out.moves.end(), MoveTieRankLess{});
    return out;
}

TokenSet legal_token_set(const GameCursor& cursor) { return cursor.legal_tokens(); }

TokenTargets pd_targets(const GameCursor& cursor) {
    const TokenSet support = cursor.legal_tokens();
    if (support.none())
        throw std::logic_error("pd_targets: no legal token after a finished game");
    TokenTargets t;
    const double p = 1.0 / static_cast<double>(support.count());
    for (std::size_t i = 0; i < kVocabSize; ++i)
        if (support.test(i))
            t.probs[i] = p;
    return t;
}

SequenceValidation validate_sequence(TokenSpan tokens) {
    SequenceValidation v;
    if (tokens.empty() || tokens[0] != kBos) {
        v.valid = false;
        v.fault_index = 0;
        v.fault = TokenFault::MissingBos;
        return v;
    }
    GameCursor c;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (auto f = c.try_advance(tokens[i])) {
            v.valid = false;
            v.fault_index = i;
            v.fault = f;
            return v;
        }
    }
    return v;
}

PdExportSummary export_pd_corpus(const Corpus& corpus, std::ostream& out) {
    PdExportSummary summary;
    summary.rejected = corpus.issues;
    std::string rows;
    for (const CorpusEntry& entry : corpus.games) {
        const TokenSequence tokens = encode_game(entry.game);
        rows.clear();
        GameCursor c;
        std::optional<std::string> error;
        std::size_t emitted = 0;
        for (std::size_t i = 1; i < tokens.size(); ++i) {
            const TokenSet support = c.legal_tokens();
            rows += std::to_string(entry.line_index) + '\t' + std::to_string(i) + '\t' +
                    std::to_string(support.count()) + '\t';
            bool first = true;
            for (std::size_t id = 0; id < kVocabSize; ++id) {
                if (!support.test(id))
                    continue;
                if (!first)
                    rows += ',';
                rows += std::to_string(id);
                first = false;
            }
            rows += '\n';
            ++emitted;
            if (auto f = c.try_advance(tokens[i])) {
                error = "token " + std::to_string(i) + " (" + token_name(tokens[i]) + "): " + std::string(fault_name(*f));
                break;
            }
        }
        if (error) {
            summary.rejected.push_back({entry.line_index, *error});
            continue;
        }
        out << rows;
        summary.rows += emitted;
        ++summary.games;
    }
    std::sort(summary.rejected.begin(), summary.rejected.end(),
              [](const CorpusIssue& a, const CorpusIssue& b) { return a.line_index < b.line_index; });
    return summary;
}

PdExportSummary export_pd_corpus(const std::filesystem::path& corpus, const std::filesystem::path& out) {
    const Corpus c = read_corpus(corpus);
    std::ofstream os(out);
    if (!os)
        throw std::runtime_error("cannot write " + out.string());
    auto summary = export_pd_corpus(c, os);
    if (!os)
        throw std::runtime_error("write failed for " + out.string());
    return summary;
}

}  // namespace soundcheck
