#pragma once

/// @file board.hpp
/// Full game state: a Position plus the repetition history needed to decide
/// threefold repetition. Threefold repetition and the fifty-move rule are
/// treated as forced game ends.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "soundcheck/position.hpp"

namespace soundcheck {

enum class TerminalKind : std::uint8_t {
    NotTerminal,
    Checkmate,
    Stalemate,
    InsufficientMaterial,
    ThreefoldRepetition,
    FiftyMoveRule,
};

[[nodiscard]] std::string_view terminal_name(TerminalKind k) noexcept;

/// Why a move is not legal, from the mover's point of view.
enum class IllegalReason : std::uint8_t {
    EmptySource,       ///< nothing on the from-square
    OpponentPiece,     ///< from-square holds an opposing piece
    ImmovablePiece,    ///< own piece with no legal move at all
    InvalidDirection,  ///< geometry impossible for the piece kind
    Erroneous,         ///< anything else: blocked path, king into check, bad promotion, ...
};

[[nodiscard]] std::string_view reason_name(IllegalReason r) noexcept;

class IllegalMove : public std::runtime_error {
public:
    IllegalMove(const Move& m, IllegalReason reason);
    [[nodiscard]] const Move& move() const noexcept { return move_; }
    [[nodiscard]] IllegalReason reason() const noexcept { return reason_; }

private:
    Move move_;
    IllegalReason reason_;
};

class BoardState {
public:
    /// Standard starting position.
    BoardState();
    /// Throws MalformedState if `pos` violates an invariant.
    explicit BoardState(Position pos);

    [[nodiscard]] static BoardState from_fen(std::string_view fen) { return BoardState(Position::from_fen(fen)); }
    [[nodiscard]] std::string fen() const { return pos_.fen(); }

    [[nodiscard]] const Position& position() const noexcept { return pos_; }
    [[nodiscard]] std::optional<Piece> piece_at(Square sq) const noexcept { return pos_.piece_at(sq); }
    [[nodiscard]] Color side_to_move() const noexcept { return pos_.side_to_move(); }
    [[nodiscard]] std::optional<Square> en_passant() const noexcept { return pos_.en_passant(); }
    [[nodiscard]] int halfmove_clock() const noexcept { return pos_.halfmove_clock(); }
    [[nodiscard]] bool in_check() const noexcept { return pos_.in_check(); }

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
    /// Occurrences of the current position, including this one.
    [[nodiscard]] int repetition_count() const noexcept;
    /// Keys of earlier positions since the last pawn move or capture.
    [[nodiscard]] const std::vector<std::uint64_t>& history() const noexcept { return history_; }

    bool operator==(const BoardState&) const noexcept = default;

private:
    friend BoardState apply_unchecked(const BoardState& state, const Move& m);

    Position pos_;
    std::vector<std::uint64_t> history_;
    std::uint64_t key_ = 0;
};

[[nodiscard]] MoveList legal_moves(const BoardState& state) noexcept;

/// Throws IllegalMove (with the diagnosed reason) if `m` is not legal.
[[nodiscard]] BoardState apply_move(const BoardState& state, const Move& m);

/// Skips the legality check; `m` must be a member of legal_moves(state).
[[nodiscard]] BoardState apply_unchecked(const BoardState& state, const Move& m);

[[nodiscard]] TerminalKind terminal_kind(const BoardState& state) noexcept;
[[nodiscard]] bool insufficient_material(const Position& pos) noexcept;

[[nodiscard]] std::uint64_t perft(const BoardState& state, int depth) noexcept;

/// Reason ladder for a move that is not legal in `state`: empty source,
/// opponent's piece, piece without legal moves, impossible geometry, other.
/// Returns nullopt when the move is legal.
[[nodiscard]] std::optional<IllegalReason> diagnose_illegal(const BoardState& state, const Move& m) noexcept;

/// True when the from/to displacement runs along a direction the piece kind
/// moves in (castling counts for a king on its home square). Sliding
/// distance is not checked for pawns.
[[nodiscard]] bool geometry_possible(Piece piece, const Move& m) noexcept;

}  // namespace soundcheck
