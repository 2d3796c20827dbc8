#pragma once

/// @file types.hpp
/// Squares, colors, pieces and moves shared by every module.

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace soundcheck {

// ── Square ──────────────────────────────────────────────────────────────────
// Little-endian rank-file: a1=0, b1=1, ..., h1=7, a2=8, ..., h8=63.
class Square {
public:
    constexpr Square() noexcept = default;
    constexpr explicit Square(int index) noexcept : index_(static_cast<std::uint8_t>(index)) {}
    constexpr Square(int file, int rank) noexcept
        : index_(static_cast<std::uint8_t>(rank * 8 + file)) {}

    [[nodiscard]] constexpr int index() const noexcept { return index_; }
    [[nodiscard]] constexpr int file() const noexcept { return index_ & 7; }
    [[nodiscard]] constexpr int rank() const noexcept { return index_ >> 3; }
    [[nodiscard]] constexpr std::uint64_t bit() const noexcept { return std::uint64_t{1} << index_; }

    [[nodiscard]] std::string name() const {
        return {static_cast<char>('a' + file()), static_cast<char>('1' + rank())};
    }

    /// Parses "e4"-style names; nullopt on anything else.
    [[nodiscard]] static std::optional<Square> parse(std::string_view name) noexcept;

    constexpr auto operator<=>(const Square&) const noexcept = default;

private:
    std::uint8_t index_ = 0;
};

[[nodiscard]] constexpr bool valid_coords(int file, int rank) noexcept {
    return file >= 0 && file < 8 && rank >= 0 && rank < 8;
}

// ── Color / Piece ───────────────────────────────────────────────────────────
enum class Color : std::uint8_t { White = 0, Black = 1 };

[[nodiscard]] constexpr Color opposite(Color c) noexcept {
    return c == Color::White ? Color::Black : Color::White;
}
[[nodiscard]] constexpr int color_index(Color c) noexcept { return static_cast<int>(c); }

enum class PieceKind : std::uint8_t { Pawn = 0, Knight, Bishop, Rook, Queen, King };

inline constexpr int kPieceKinds = 6;

[[nodiscard]] constexpr int kind_index(PieceKind k) noexcept { return static_cast<int>(k); }

/// Lowercase letter used by FEN/UCI ("p", "n", ...).
[[nodiscard]] char kind_letter(PieceKind k) noexcept;
[[nodiscard]] std::string_view kind_name(PieceKind k) noexcept;
[[nodiscard]] std::optional<PieceKind> kind_from_letter(char c) noexcept;

struct Piece {
    Color color = Color::White;
    PieceKind kind = PieceKind::Pawn;

    /// 0..11: white P,N,B,R,Q,K then black P,N,B,R,Q,K.
    [[nodiscard]] constexpr int index() const noexcept {
        return color_index(color) * kPieceKinds + kind_index(kind);
    }
    [[nodiscard]] static constexpr Piece from_index(int i) noexcept {
        return {static_cast<Color>(i / kPieceKinds), static_cast<PieceKind>(i % kPieceKinds)};
    }
    /// FEN letter, uppercase for white.
    [[nodiscard]] char fen_letter() const noexcept;

    constexpr bool operator==(const Piece&) const noexcept = default;
};

inline constexpr int kPieceCount = 12;

// ── Move ────────────────────────────────────────────────────────────────────
/// One action: from-square, to-square and an optional promotion piece.
/// Legality is a property of a position, not of the type.
struct Move {
    Square from;
    Square to;
    std::optional<PieceKind> promotion;

    [[nodiscard]] std::string uci() const;

    /// Parses "e2e4" / "e7e8q". Throws std::invalid_argument on malformed text.
    [[nodiscard]] static Move parse(std::string_view uci);
    [[nodiscard]] static std::optional<Move> try_parse(std::string_view uci) noexcept;

    bool operator==(const Move&) const noexcept = default;
};

/// Deterministic tiebreak: (from token, to token, promotion token); a missing
/// promotion sorts before any promotion.
[[nodiscard]] bool tie_rank_less(const Move& a, const Move& b) noexcept;

struct MoveTieRankLess {
    bool operator()(const Move& a, const Move& b) const noexcept { return tie_rank_less(a, b); }
};

}  // namespace soundcheck
