#pragma once

/// @file metrics.hpp
/// Campaign aggregation and world-model agreement measures. Lengths and ply
/// indices are in plies; curves are indexed by plies since the end of the
/// warmup.

#include <array>
#include <iosfwd>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "soundcheck/harness.hpp"

namespace soundcheck {

class EmptyCampaign : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CurvePoint {
    int ply = 0;  ///< plies after the warmup
    double cumulative_asr = 0.0;
    bool operator==(const CurvePoint&) const = default;
};

struct CampaignReport {
    std::string adversary;  ///< "mixed" when outcomes disagree
    std::string policy;
    std::size_t episodes = 0;
    std::size_t successes = 0;
    double asr = 0.0;
    std::vector<CurvePoint> asr_by_ply;  ///< one point per distinct failure ply
    double mean_seq_len = 0.0;           ///< AttackOutcome::episode_length, all episodes
    std::array<std::size_t, kErrorTypes> error_type_counts{};
    std::array<double, kErrorTypes> error_type_freqs{};  ///< share of successes; zeros if none
    double illegal_rate = 0.0;  ///< types 1-6 over episodes
    double end_rate = 0.0;      ///< type 7 over episodes
    std::array<std::size_t, kPieceKinds> piece_type_counts{};  ///< types 3-5, by moved piece
    std::size_t game_overs = 0;
    std::size_t ply_caps = 0;
    std::size_t query_failures = 0;
    double mean_seconds = 0.0;
    double mean_queries = 0.0;
    std::optional<double> probe_agreement;
};

/// Pure fold over outcome records. Throws EmptyCampaign on empty input.
[[nodiscard]] CampaignReport build_report(std::span<const AttackOutcome> outcomes);

[[nodiscard]] bool curve_monotone(std::span<const CurvePoint> curve) noexcept;

// ── Agreement sets ──────────────────────────────────────────────────────────

/// A set of actions: well-formed moves plus, optionally, EOS.
struct ActionSet {
    std::set<Move, MoveTieRankLess> moves;
    bool eos = false;
    [[nodiscard]] std::size_t size() const noexcept { return moves.size() + (eos ? 1 : 0); }
};

/// Intersection over union; two empty sets give 1.
[[nodiscard]] double iou(const ActionSet& a, const ActionSet& b);

/// W(s): the legal continuations of a boundary cursor.
[[nodiscard]] ActionSet true_actions(const GameCursor& cursor);
/// Actions whose action probability is at least `epsilon`.
[[nodiscard]] ActionSet model_actions(Model& model, const GameCursor& cursor, double epsilon);
/// Legal actions on the argmax probe board (pseudo-legal when that board is
/// malformed). EOS is included when the probe board has no moves or
/// insufficient material.
[[nodiscard]] ActionSet probe_actions(const ProbeBoard& probe, const GameCursor& cursor);

struct IouResult {
    double wm = 0.0;
    std::optional<double> wb;
    std::optional<double> mb;
};

/// IoUs between W, W_M and W_B. Without a probe board only `wm` is set.
[[nodiscard]] IouResult iou_agreement(Model& model, const ProbeBoard* probe, const GameCursor& cursor,
                                      double epsilon = 0.01);
/// Queries the probe when the model has one.
[[nodiscard]] IouResult iou_agreement(Model& model, const GameCursor& cursor, double epsilon = 0.01);

struct IouRecord {
    std::size_t game = 0;
    int ply = 0;  ///< plies played before the boundary
    IouResult iou;
};

/// iou_agreement at every move boundary of the given games.
[[nodiscard]] std::vector<IouRecord> iou_over_games(Model& model, const Corpus& games, double epsilon = 0.01);

// ── Probes ──────────────────────────────────────────────────────────────────

struct ProbeAccuracy {
    double accuracy = 0.0;        ///< correct argmax squares / 64
    double piece_accuracy = 0.0;  ///< over squares occupied or predicted occupied; 1 if none
};

[[nodiscard]] ProbeAccuracy probe_accuracy(const ProbeBoard& probe, const Position& truth);

/// Among illegal-move successes (types 1-5) with a stored probe board, the
/// fraction whose offending move is legal on that board. Absent when there
/// are none.
[[nodiscard]] std::optional<double> probe_agreement_ratio(std::span<const AttackOutcome> outcomes);

// ── Corpus measures ─────────────────────────────────────────────────────────

/// Fraction of games whose argmax prediction is EOS at the final boundary and
/// nowhere earlier. Throws std::invalid_argument for an empty corpus or a
/// game that does not end by rule (the message names its line).
[[nodiscard]] double game_end_recognition(Model& model, const Corpus& games);

enum class RatioSide : std::uint8_t { Both, Black };

/// Decodes one move with `policy` at every move boundary that precedes a move
/// of the game (for the chosen side) and returns the fraction of legal
/// decodes. Throws std::invalid_argument for an empty corpus or an invalid
/// game.
[[nodiscard]] double legal_move_ratio(Model& model, const Corpus& games, const DecodingPolicy& policy,
                                      std::mt19937_64& rng, RatioSide side = RatioSide::Both);

/// Exact expectation of legal_move_ratio under plain ancestral sampling:
/// the mean over the same boundaries of the total action probability of W.
[[nodiscard]] double expected_legal_move_ratio(Model& model, const Corpus& games, RatioSide side = RatioSide::Both);

// ── CSV ─────────────────────────────────────────────────────────────────────

void write_summary_csv(std::ostream& out, std::span<const CampaignReport> reports);
void write_asr_curve_csv(std::ostream& out, const CampaignReport& report);
void write_taxonomy_csv(std::ostream& out, const CampaignReport& report);
void write_iou_csv(std::ostream& out, std::span<const IouRecord> records);

}  // namespace soundcheck
