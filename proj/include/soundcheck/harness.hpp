#pragma once

/// @file harness.hpp
/// Warmup selection, the two-player attack loop and error taxonomy.
///
/// An episode starts from a warmup prefix with White to move. The adversary
/// plays White, the model under test plays Black, and the episode is a
/// success as soon as the model emits something outside W(s) at a
/// non-terminal position. Ply numbers are absolute (the first ply of the game
/// is 1).

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "soundcheck/adversaries.hpp"
#include "soundcheck/model.hpp"
#include "soundcheck/worldmodel.hpp"

namespace soundcheck {

enum class ErrorType : std::uint8_t {
    NonexistentPiece = 1,
    OpponentsPiece,
    ImmovablePiece,
    InvalidDirection,
    ErroneousMove,
    StructuralError,
    IncorrectEndPrediction,
};
inline constexpr int kErrorTypes = 7;

[[nodiscard]] std::string_view error_type_name(ErrorType t) noexcept;
[[nodiscard]] std::optional<ErrorType> parse_error_type(std::string_view name) noexcept;
[[nodiscard]] constexpr int error_type_number(ErrorType t) noexcept { return static_cast<int>(t); }

/// Classifies a model output that violates the rules in `state`.
/// Throws std::logic_error if the output is in fact valid there.
[[nodiscard]] ErrorType classify_error(const BoardState& state, const ModelOutput& output);

class InsufficientPrefixes : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct WarmupSpec {
    enum class Source : std::uint8_t { CorpusPrefix, RandomValid };
    Source source = Source::RandomValid;
    std::filesystem::path corpus;  ///< CorpusPrefix only
    std::size_t n = 100;
    int plies = 10;
    std::uint64_t seed = 0;  ///< RandomValid only
    bool unique = true;

    /// "corpus:<file>:<n>:<plies>" or "random:<n>:<plies>:<seed>".
    [[nodiscard]] static WarmupSpec parse(std::string_view text);
};

/// n prefixes of exactly `plies` plies, each valid and non-terminal, White to
/// move. CorpusPrefix takes them in corpus order; RandomValid plays uniform
/// random legal moves. Throws InsufficientPrefixes when fewer than n
/// (distinct, if requested) prefixes exist, std::invalid_argument for odd or
/// negative plies.
[[nodiscard]] std::vector<TokenSequence> sample_warmups(const WarmupSpec& spec);

struct EpisodeConfig {
    AdversarySpec adversary;
    DecodingPolicy policy;
    int max_plies = 600;             ///< plies after the warmup
    std::uint64_t seed = 0;          ///< master seed
    std::uint64_t query_budget = 0;  ///< 0 = unlimited
    ImoOptions imo;
};

enum class TerminalReason : std::uint8_t { ModelError, GameOver, PlyCap, QueryFailure };

[[nodiscard]] std::string_view terminal_reason_name(TerminalReason r) noexcept;

struct AttackOutcome {
    std::size_t warmup_id = 0;
    int repetition = 0;
    std::string adversary;
    std::string policy;

    bool success = false;
    std::optional<int> failure_ply;
    std::optional<ErrorType> error_type;
    TokenSequence offending_tokens;      ///< tokens of the offending prediction
    std::optional<PieceKind> piece;      ///< piece on the from-square of an offending move
    std::optional<std::string> probe_fen;  ///< argmax probe board at the failure, when the model has a probe

    TerminalReason reason = TerminalReason::PlyCap;
    TerminalKind game_over = TerminalKind::NotTerminal;
    /// At GameOver with the model to move: whether it predicted EOS.
    std::optional<bool> end_recognized;
    std::string message;  ///< QueryFailure diagnostics

    int warmup_plies = 0;
    std::vector<Move> trace;  ///< every legal move of the game, warmup included
    std::uint64_t queries = 0;
    double wall_time = 0.0;

    /// Plies after the warmup, counting the offending prediction.
    [[nodiscard]] int episode_length() const noexcept {
        return (failure_ply ? *failure_ply : static_cast<int>(trace.size())) - warmup_plies;
    }
    /// Equality of everything except wall time.
    [[nodiscard]] bool same_result(const AttackOutcome& o) const;
};

/// Per-episode RNG seed from (master seed, warmup id, repetition).
[[nodiscard]] std::uint64_t episode_seed(std::uint64_t master, std::size_t warmup_id, int repetition) noexcept;

/// Plays one episode. Query failures end the episode with reason
/// QueryFailure. Throws std::invalid_argument for a warmup that is invalid or
/// leaves Black to move, CapabilityMissing for BSO without a probe head.
[[nodiscard]] AttackOutcome run_episode(Model& model, const TokenSequence& warmup, const EpisodeConfig& cfg,
                                        std::size_t warmup_id = 0, int repetition = 0);

struct CampaignOptions {
    unsigned workers = 1;
    /// Called once per finished episode, in completion order, never
    /// concurrently.
    std::function<void(const AttackOutcome&)> on_outcome;
};

/// Runs every warmup `repetitions` times. Results are ordered by
/// (repetition, warmup id) whatever the number of workers.
[[nodiscard]] std::vector<AttackOutcome> run_campaign(Model& model, std::span<const TokenSequence> warmups,
                                                      const EpisodeConfig& cfg, int repetitions = 1,
                                                      const CampaignOptions& opt = {});

/// One JSON object per line.
void write_outcome(std::ostream& out, const AttackOutcome& o);
[[nodiscard]] std::string outcome_to_json(const AttackOutcome& o);
/// Throws std::invalid_argument on malformed records.
[[nodiscard]] AttackOutcome outcome_from_json(std::string_view line);
[[nodiscard]] std::vector<AttackOutcome> read_outcomes(const std::filesystem::path& path);

}  // namespace soundcheck
