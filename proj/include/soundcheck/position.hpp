#pragma once

/// @file position.hpp
/// Bitboard position and move generator. A Position carries no repetition
/// history; see board.hpp for the full game state.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "soundcheck/types.hpp"

namespace soundcheck {

using Bitboard = std::uint64_t;

/// A position that violates a structural invariant (missing king, pawn on a
/// back rank, ...).
class MalformedState : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-capacity move buffer; no heap allocation during generation.
class MoveList {
public:
    static constexpr std::size_t kCapacity = 256;

    void push_back(const Move& m) noexcept { moves_[size_++] = m; }
    void clear() noexcept { size_ = 0; }

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] bool empty() const noexcept { return size_ == 0; }
    [[nodiscard]] const Move& operator[](std::size_t i) const noexcept { return moves_[i]; }
    [[nodiscard]] const Move* begin() const noexcept { return moves_.data(); }
    [[nodiscard]] const Move* end() const noexcept { return moves_.data() + size_; }
    [[nodiscard]] bool contains(const Move& m) const noexcept;

private:
    std::array<Move, kCapacity> moves_{};
    std::size_t size_ = 0;
};

enum CastlingBit : std::uint8_t {
    kWhiteKingside = 1,
    kWhiteQueenside = 2,
    kBlackKingside = 4,
    kBlackQueenside = 8,
};

class Position {
public:
    /// Empty board, White to move, no rights. Use set_piece to populate.
    Position() noexcept;

    [[nodiscard]] static Position initial();
    /// Standard FEN. The two clock fields may be omitted. Throws MalformedState
    /// on syntax errors or invariant violations.
    [[nodiscard]] static Position from_fen(std::string_view fen);
    [[nodiscard]] std::string fen() const;

    [[nodiscard]] std::optional<Piece> piece_at(Square sq) const noexcept;
    [[nodiscard]] Color side_to_move() const noexcept { return side_; }
    [[nodiscard]] std::uint8_t castling_rights() const noexcept { return castling_; }
    [[nodiscard]] std::optional<Square> en_passant() const noexcept;
    [[nodiscard]] int halfmove_clock() const noexcept { return halfmove_; }
    [[nodiscard]] int fullmove_number() const noexcept { return fullmove_; }

    [[nodiscard]] Bitboard pieces(Piece p) const noexcept { return bb_[p.index()]; }
    [[nodiscard]] Bitboard pieces(Color c, PieceKind k) const noexcept { return bb_[Piece{c, k}.index()]; }
    [[nodiscard]] Bitboard occupancy(Color c) const noexcept { return occ_[color_index(c)]; }
    [[nodiscard]] Bitboard occupancy() const noexcept { return occ_[0] | occ_[1]; }

    void set_piece(Square sq, std::optional<Piece> p) noexcept;
    void set_side_to_move(Color c) noexcept { side_ = c; }
    void set_castling_rights(std::uint8_t rights) noexcept { castling_ = rights & 15; }
    void set_en_passant(std::optional<Square> sq) noexcept {
        ep_ = sq ? static_cast<std::int8_t>(sq->index()) : std::int8_t{-1};
    }
    void set_clocks(int halfmove, int fullmove) noexcept {
        halfmove_ = halfmove;
        fullmove_ = fullmove;
    }

    /// Invariant check; returns a diagnostic for the first violation.
    [[nodiscard]] std::optional<std::string> validate() const;

    [[nodiscard]] bool attacked(Square sq, Color by) const noexcept;
    [[nodiscard]] bool in_check() const noexcept;
    [[nodiscard]] std::optional<Square> king_square(Color c) const noexcept;

    /// Moves obeying piece movement rules, ignoring whether the own king is
    /// left in check. Tolerates boards without kings.
    void generate_pseudo_legal(MoveList& out) const noexcept;
    /// Requires a position that passes validate().
    void generate_legal(MoveList& out) const noexcept;
    [[nodiscard]] MoveList legal_moves() const noexcept {
        MoveList l;
        generate_legal(l);
        return l;
    }

    [[nodiscard]] bool leaves_king_in_check(const Move& m) const noexcept;
    [[nodiscard]] bool is_capture(const Move& m) const noexcept;

    /// Successor position. `m` must be at least pseudo-legal.
    [[nodiscard]] Position after(const Move& m) const noexcept;

    /// Key for repetition detection: placement, side to move, castling
    /// rights, and the en-passant file only when an en-passant capture is
    /// legal.
    [[nodiscard]] std::uint64_t repetition_key() const noexcept;

    bool operator==(const Position&) const noexcept = default;

private:
    std::array<Bitboard, kPieceCount> bb_{};
    std::array<Bitboard, 2> occ_{};
    std::array<std::int8_t, 64> board_{};
    Color side_ = Color::White;
    std::uint8_t castling_ = 0;
    std::int8_t ep_ = -1;
    int halfmove_ = 0;
    int fullmove_ = 1;

    [[nodiscard]] bool ep_capture_available() const noexcept;
};

/// Leaf count of the legal move tree at exactly `depth` plies.
[[nodiscard]] std::uint64_t perft(const Position& pos, int depth) noexcept;

namespace attacks {
[[nodiscard]] Bitboard knight(Square sq) noexcept;
[[nodiscard]] Bitboard king(Square sq) noexcept;
[[nodiscard]] Bitboard pawn(Color c, Square sq) noexcept;
[[nodiscard]] Bitboard bishop(Square sq, Bitboard occupied) noexcept;
[[nodiscard]] Bitboard rook(Square sq, Bitboard occupied) noexcept;
}  // namespace attacks

}  // namespace soundcheck
