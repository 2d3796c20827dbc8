#pragma once

/// @file worldmodel.hpp
/// The true world model over token space: which token may follow a valid
/// prefix, whether a sequence is valid, and the uniform-over-legal-token
/// supervision targets derived from it.
///
/// A game ends at any terminal position (mate, stalemate, insufficient
/// material, threefold repetition, fifty-move rule). At a terminal position the
/// only legal token is EOS, and EOS is legal nowhere else.

#include <array>
#include <bitset>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "soundcheck/board.hpp"
#include "soundcheck/notation.hpp"

namespace soundcheck {

using TokenSet = std::bitset<kVocabSize>;

/// Cursor phases: at a move boundary, after a from-square, or after a
/// from/to pair that must be completed by a promotion token.
struct ExpectFrom {
    bool operator==(const ExpectFrom&) const = default;
};
struct ExpectTo {
    Square from;
    bool operator==(const ExpectTo&) const = default;
};
struct ExpectPromotion {
    Square from;
    Square to;
    bool operator==(const ExpectPromotion&) const = default;
};
using CursorPhase = std::variant<ExpectFrom, ExpectTo, ExpectPromotion>;

enum class TokenFault : std::uint8_t {
    MissingBos,      ///< sequence does not start with BOS
    Structural,      ///< token kind cannot appear in this slot (PAD, BOS, promo for a square, ...)
    IllegalToken,    ///< right kind of token, but no legal move continues with it
    EosNotTerminal,  ///< EOS while the game is still running
    AfterEos,        ///< anything following EOS
};

[[nodiscard]] std::string_view fault_name(TokenFault f) noexcept;

/// Thrown when a boundary-only operation sees a cursor in the middle of a move.
class MisalignedCursor : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class InvalidToken : public std::runtime_error {
public:
    InvalidToken(TokenFault fault, TokenId token);
    [[nodiscard]] TokenFault fault() const noexcept { return fault_; }

private:
    TokenFault fault_;
};

/// A valid token prefix together with the board it leads to. Value type;
/// the legal move list of the current board is cached at every boundary.
class GameCursor {
public:
    /// [BOS] at the standard starting position.
    GameCursor();
    /// [BOS] at an arbitrary position, for fixtures that are not reached from
    /// the starting position. Token-level queries still work; the prefix does
    /// not encode the position.
    [[nodiscard]] static GameCursor at_position(BoardState board);
    /// Walks `tokens` from the start. Throws InvalidToken on the first fault.
    [[nodiscard]] static GameCursor from_tokens(TokenSpan tokens);
    [[nodiscard]] static GameCursor from_moves(std::span<const Move> moves);

    [[nodiscard]] const TokenSequence& tokens() const noexcept { return tokens_; }
    [[nodiscard]] const BoardState& board() const noexcept { return board_; }
    [[nodiscard]] int plies() const noexcept { return plies_; }
    [[nodiscard]] const CursorPhase& phase() const noexcept { return phase_; }
    [[nodiscard]] bool at_boundary() const noexcept { return std::holds_alternative<ExpectFrom>(phase_); }
    /// True once EOS has been consumed.
    [[nodiscard]] bool finished() const noexcept { return finished_; }

    /// Terminal classification of the current board (cached).
    [[nodiscard]] TerminalKind terminal() const noexcept { return terminal_; }
    /// Legal moves of the current board, ignoring forced termination.
    [[nodiscard]] const MoveList& board_moves() const noexcept { return legal_; }
    [[nodiscard]] const std::optional<Move>& last_move() const noexcept { return last_move_; }
    [[nodiscard]] bool last_move_was_capture() const noexcept { return last_capture_; }

    [[nodiscard]] TokenSet legal_tokens() const;

    /// Consumes one token; on a fault the cursor is unchanged.
    [[nodiscard]] std::optional<TokenFault> try_advance(TokenId t);
    /// Throws InvalidToken.
    [[nodiscard]] GameCursor advanced(TokenId t) const;
    /// Consumes all tokens of `m`. Throws InvalidToken if the move is illegal.
    [[nodiscard]] GameCursor after_move(const Move& m) const;

private:
    void enter_board(BoardState next);

    TokenSequence tokens_;
    BoardState board_;
    MoveList legal_;
    TerminalKind terminal_ = TerminalKind::NotTerminal;
    CursorPhase phase_ = ExpectFrom{};
    int plies_ = 0;
    bool finished_ = false;
    bool last_capture_ = false;
    std::optional<Move> last_move_;
};

struct LegalContinuations {
    std::vector<Move> moves;  ///< sorted by tie rank; empty at terminal positions
    bool eos_legal = false;
};

/// Requires a cursor at a move boundary (throws MisalignedCursor otherwise).
[[nodiscard]] LegalContinuations continuations(const GameCursor& cursor);

[[nodiscard]] TokenSet legal_token_set(const GameCursor& cursor);

struct TokenTargets {
    std::array<double, kVocabSize> probs{};
};

/// Uniform distribution over legal_token_set(cursor).
[[nodiscard]] TokenTargets pd_targets(const GameCursor& cursor);

struct SequenceValidation {
    bool valid = true;
    std::optional<std::size_t> fault_index;
    std::optional<TokenFault> fault;
};

/// Valid iff every token is legal after its prefix. A prefix that stops in
/// the middle of a move is valid.
[[nodiscard]] SequenceValidation validate_sequence(TokenSpan tokens);

struct PdExportSummary {
    std::size_t rows = 0;
    std::size_t games = 0;
    std::vector<CorpusIssue> rejected;  ///< malformed or illegal lines, skipped
};

/// Writes one supervision row per token position (all but BOS) of every game:
/// `line_idx \t token_idx \t k \t id_1,...,id_k`, meaning uniform 1/k over the
/// listed ids, ordered by (line, token index).
PdExportSummary export_pd_corpus(const std::filesystem::path& corpus, const std::filesystem::path& out);
PdExportSummary export_pd_corpus(const Corpus& corpus, std::ostream& out);

}  // namespace soundcheck
