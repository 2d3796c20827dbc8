#include "soundcheck/board.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>

namespace soundcheck {

std::string_view terminal_name(TerminalKind k) noexcept {
    switch (k) {
    case TerminalKind::NotTerminal: return "not_terminal";
    case TerminalKind::Checkmate: return "checkmate";
    case TerminalKind::Stalemate: return "stalemate";
    case TerminalKind::InsufficientMaterial: return "insufficient_material";
    case TerminalKind::ThreefoldRepetition: return "threefold_repetition";
    case TerminalKind::FiftyMoveRule: return "fifty_move_rule";
    }
    return "?";
}

std::string_view reason_name(IllegalReason r) noexcept {
    switch (r) {
    case IllegalReason::EmptySource: return "empty source square";
    case IllegalReason::OpponentPiece: return "opponent's piece";
    case IllegalReason::ImmovablePiece: return "piece has no legal moves";
    case IllegalReason::InvalidDirection: return "invalid direction for piece";
    case IllegalReason::Erroneous: return "erroneous move";
    }
    return "?";
}

IllegalMove::IllegalMove(const Move& m, IllegalReason reason)
    : std::runtime_error("illegal move " + m.uci() + ": " + std::string(reason_name(reason))),
      move_(m),
      reason_(reason) {}

BoardState::BoardState() : BoardState(Position::initial()) {}

BoardState::BoardState(Position pos) : pos_(std::move(pos)) {
    if (auto err = pos_.validate())
        throw MalformedState(*err);
    key_ = pos_.repetition_key();
}

int BoardState::repetition_count() const noexcept {
    return 1 + static_cast<int>(std::count(history_.begin(), history_.end(), key_));
}

MoveList legal_moves(const BoardState& state) noexcept { return state.position().legal_moves(); }

BoardState apply_unchecked(const BoardState& state, const Move& m) {
    BoardState next = state;
    next.pos_ = state.pos_.after(m);
    if (next.pos_.halfmove_clock() == 0)
        next.history_.clear();
    else
        next.history_.push_back(state.key_);
    next.key_ = next.pos_.repetition_key();
    return next;
}

BoardState apply_move(const BoardState& state, const Move& m) {
    if (!legal_moves(state).contains(m))
        throw IllegalMove(m, diagnose_illegal(state, m).value_or(IllegalReason::Erroneous));
    return apply_unchecked(state, m);
}

bool insufficient_material(const Position& pos) noexcept {
    for (Color c : {Color::White, Color::Black})
        if (pos.pieces(c, PieceKind::Pawn) | pos.pieces(c, PieceKind::Rook) | pos.pieces(c, PieceKind::Queen))
            return false;
    const Bitboard wb = pos.pieces(Color::White, PieceKind::Bishop);
    const Bitboard bb = pos.pieces(Color::Black, PieceKind::Bishop);
    const Bitboard wn = pos.pieces(Color::White, PieceKind::Knight);
    const Bitboard bn = pos.pieces(Color::Black, PieceKind::Knight);
    const int minors = std::popcount(wb | bb | wn | bn);
    if (minors <= 1)
        return true;
    // K+B vs K+B with both bishops on the same square color.
    if (minors == 2 && std::popcount(wb) == 1 && std::popcount(bb) == 1) {
        constexpr Bitboard kDarkSquares = 0xaa55aa55aa55aa55ULL;
        return ((wb & kDarkSquares) != 0) == ((bb & kDarkSquares) != 0);
    }
    return false;
}

TerminalKind terminal_kind(const BoardState& state) noexcept {
    const Position& pos = state.position();
    if (pos.legal_moves().empty())
        return pos.in_check() ? TerminalKind::Checkmate : TerminalKind::Stalemate;
    if (insufficient_material(pos))
        return TerminalKind::InsufficientMaterial;
    if (state.repetition_count() >= 3)
        return TerminalKind::ThreefoldRepetition;
    if (pos.halfmove_clock() >= 100)
        return TerminalKind::FiftyMoveRule;
    return TerminalKind::NotTerminal;
}

std::uint64_t perft(const BoardState& state, int depth) noexcept { return perft(state.position(), depth); }

bool geometry_possible(Piece piece, const Move& m) noexcept {
    const int df = m.to.file() - m.from.file();
    const int dr = m.to.rank() - m.from.rank();
    const int adf = std::abs(df);
    const int adr = std::abs(dr);
    if (adf == 0 && adr == 0)
        return false;
    switch (piece.kind) {
    case PieceKind::Rook: return df == 0 || dr == 0;
    case PieceKind::Bishop: return adf == adr;
    case PieceKind::Queen: return df == 0 || dr == 0 || adf == adr;
    case PieceKind::Knight: return (adf == 1 && adr == 2) || (adf == 2 && adr == 1);
    case PieceKind::King: {
        if (adf <= 1 && adr <= 1)
            return true;
        const int home_rank = piece.color == Color::White ? 0 : 7;
        return dr == 0 && adf == 2 && m.from.file() == 4 && m.from.rank() == home_rank;
    }
    case PieceKind::Pawn: {
        // Straight or diagonal, forward only; distance errors are not direction errors.
        const int forward = piece.color == Color::White ? 1 : -1;
        return dr * forward > 0 && (df == 0 || adf == adr);
    }
    }
    return false;
}

std::optional<IllegalReason> diagnose_illegal(const BoardState& state, const Move& m) noexcept {
    const MoveList legal = legal_moves(state);
    if (legal.contains(m))
        return std::nullopt;
    const auto piece = state.piece_at(m.from);
    if (!piece)
        return IllegalReason::EmptySource;
    if (piece->color != state.side_to_move())
        return IllegalReason::OpponentPiece;
    const bool movable = std::any_of(legal.begin(), legal.end(), [&](const Move& l) { return l.from == m.from; });
    if (!movable)
        return IllegalReason::ImmovablePiece;
    if (!geometry_possible(*piece, m))
        return IllegalReason::InvalidDirection;
    return IllegalReason::Erroneous;
}

}  // namespace soundcheck
