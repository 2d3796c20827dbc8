#pragma once

/// @file notation.hpp
/// The 71-token UCI vocabulary and the move <-> token encodings.
///
/// Token table (shared bit-exactly with the wire protocol and any trainer):
///   0 = PAD, 1 = BOS, 2 = EOS,
///   3..66 = squares, id = 3 + 8 * rank + file (a1 = 3, ..., h8 = 66),
///   67 = q, 68 = r, 69 = b, 70 = n.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "soundcheck/types.hpp"

namespace soundcheck {

using TokenId = std::uint8_t;
using TokenSequence = std::vector<TokenId>;
using TokenSpan = std::span<const TokenId>;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kFirstSquareToken = 3;
inline constexpr TokenId kPromoQueen = 67;
inline constexpr TokenId kPromoRook = 68;
inline constexpr TokenId kPromoBishop = 69;
inline constexpr TokenId kPromoKnight = 70;
inline constexpr std::size_t kVocabSize = 71;

[[nodiscard]] constexpr TokenId square_token(Square sq) noexcept {
    return static_cast<TokenId>(kFirstSquareToken + sq.index());
}
[[nodiscard]] constexpr bool is_square_token(TokenId t) noexcept {
    return t >= kFirstSquareToken && t < kPromoQueen;
}
[[nodiscard]] constexpr bool is_promotion_token(TokenId t) noexcept {
    return t >= kPromoQueen && t < kVocabSize;
}
[[nodiscard]] constexpr Square token_square(TokenId t) noexcept { return Square(t - kFirstSquareToken); }

/// Throws std::invalid_argument for pawn or king.
[[nodiscard]] TokenId promotion_token(PieceKind k);
[[nodiscard]] PieceKind token_promotion(TokenId t) noexcept;

/// "PAD", "BOS", "EOS", "e4", "q", ...
[[nodiscard]] std::string token_name(TokenId t);

[[nodiscard]] TokenSequence encode_move(const Move& m);
void append_move(TokenSequence& out, const Move& m);
/// BOS, the moves' tokens, then EOS iff `complete`.
[[nodiscard]] TokenSequence encode_game(std::span<const Move> moves, bool complete);

enum class ControlMark : std::uint8_t { Bos, Eos };

/// A token pattern that is not UCI: a promotion token where a square belongs,
/// a dangling from-square, an interior PAD, a null move.
struct StructuralFault {
    std::size_t index = 0;  ///< token index where parsing stopped
    std::string pattern;    ///< offending tokens rendered as text, e.g. "e8q"
    bool operator==(const StructuralFault&) const = default;
};

using DecodedItem = std::variant<Move, ControlMark, StructuralFault>;

/// Greedy parse: square, square, optional promotion token per move. A
/// StructuralFault ends the list. Trailing PAD tokens are ignored.
[[nodiscard]] std::vector<DecodedItem> decode_move_stream(TokenSpan tokens);

enum BoundaryFlag : std::uint8_t {
    kMoveStart = 1,
    kMoveEnd = 2,
    kPromotionTail = 4,
    kControl = 8,
};

/// Per-token flags. A two-token move is {MoveStart, MoveEnd}; a three-token
/// move is {MoveStart, 0, MoveEnd | PromotionTail}. Tokens at or after a
/// structural fault are 0.
using MoveBoundaryMap = std::vector<std::uint8_t>;

[[nodiscard]] MoveBoundaryMap boundary_map(TokenSpan tokens);

// ── Corpus lines ────────────────────────────────────────────────────────────
// One game per line: space-separated UCI moves, optionally followed by the
// marker "#complete" when the game ended by rule.

inline constexpr std::string_view kCompleteMarker = "#complete";

struct GameLine {
    std::vector<Move> moves;
    bool complete = false;
    bool operator==(const GameLine&) const = default;
};

/// Throws std::invalid_argument on malformed text.
[[nodiscard]] GameLine parse_game_line(std::string_view line);
[[nodiscard]] std::string format_game_line(const GameLine& game);
[[nodiscard]] TokenSequence encode_game(const GameLine& game);

struct CorpusEntry {
    std::size_t line_index = 0;  ///< 0-based physical line
    GameLine game;
};

struct CorpusIssue {
    std::size_t line_index = 0;
    std::string message;
};

struct Corpus {
    std::vector<CorpusEntry> games;
    std::vector<CorpusIssue> issues;  ///< malformed lines, skipped
};

/// Reads a corpus file; malformed lines are reported in `issues` and skipped.
/// Throws std::runtime_error if the file cannot be opened.
[[nodiscard]] Corpus read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, std::span<const GameLine> games);

}  // namespace soundcheck
