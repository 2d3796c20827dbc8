#pragma once

/// @file adversaries.hpp
/// Adversary objectives. Each adversary plays White and picks
///
///     argmax over a in W(s) of f(M, s a)
///
/// with ties going to the smallest tie rank (from token, to token, promotion).
/// Every returned move is a member of W(s) by construction.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "soundcheck/model.hpp"
#include "soundcheck/worldmodel.hpp"

namespace soundcheck {

enum class AdversaryKind : std::uint8_t { RM, SMM, IMO, BSO, AD, AdaptiveIMO, SelfPlay };

struct AdversarySpec {
    AdversaryKind kind = AdversaryKind::IMO;
    int k = 4;  ///< top-k restriction for AdaptiveIMO

    /// rm | smm | imo | bso | ad | adaptive-imo[:k] | self-play.
    /// Throws std::invalid_argument.
    [[nodiscard]] static AdversarySpec parse(std::string_view text);
    [[nodiscard]] std::string str() const;
    bool operator==(const AdversarySpec&) const = default;
};

struct CandidateScore {
    Move move;
    double score = 0.0;
};

/// Index of the best candidate: highest score, first in the given order on
/// ties. `scores` must be non-empty.
[[nodiscard]] std::size_t argmax_candidate(std::span<const CandidateScore> scores) noexcept;

struct ImoOptions {
    std::size_t batch_size = 128;  ///< sequences per dist_batch call
};

/// Largest action probability of any well-formed move (all from/to pairs with
/// from != to, with and without promotion) or EOS that is not in W after
/// `candidate`. Zero when the candidate ends the game. Evaluated level by
/// level with batched queries; subtrees that cannot beat the running maximum
/// are skipped.
[[nodiscard]] double f_imo(Model& model, const GameCursor& cursor, const Move& candidate, const ImoOptions& opt = {});

/// Same value, one action at a time through move_probability (with a
/// per-call memo of distributions). Reference for f_imo.
[[nodiscard]] double f_imo_naive(Model& model, const GameCursor& cursor, const Move& candidate);

/// Sum of the action probabilities of all invalid actions after `candidate`,
/// with every token factor zeroed unless the token is among the top-k of its
/// slot. For a two-token move the closing factor is 1 minus the top-k
/// promotion mass. k = 71 gives the unrestricted sum.
[[nodiscard]] double f_adaptive_imo(Model& model, const GameCursor& cursor, const Move& candidate, int k,
                                    const ImoOptions& opt = {});

/// Probe loss after `candidate` against the true successor board.
/// Throws CapabilityMissing without a probe head.
[[nodiscard]] double f_bso(Model& model, const GameCursor& cursor, const Move& candidate);

/// -move_probability(candidate).
[[nodiscard]] double f_ad(Model& model, const GameCursor& cursor, const Move& candidate);

/// move_probability(candidate).
[[nodiscard]] double f_smm(Model& model, const GameCursor& cursor, const Move& candidate);

/// Scores every legal continuation (in tie-rank order) under the kind's
/// objective. Not defined for RM and SelfPlay (throws std::logic_error).
[[nodiscard]] std::vector<CandidateScore> score_candidates(const AdversarySpec& spec, Model& model,
                                                           const GameCursor& cursor, const ImoOptions& opt = {});

/// The adversary's move. RM draws uniformly from W(s) with `rng`. Requires a
/// non-terminal cursor at a move boundary; SelfPlay is not an adversary move
/// (use self_play_step).
[[nodiscard]] Move select_adversary_move(const AdversarySpec& spec, Model& model, const GameCursor& cursor,
                                         std::mt19937_64& rng, const ImoOptions& opt = {});

/// White's move in self-play: the model's own decoded output.
[[nodiscard]] DecodedMove self_play_step(Model& model, const GameCursor& cursor, const DecodingPolicy& policy,
                                         std::mt19937_64& rng);

/// Uniform index in [0, n) from one 64-bit draw.
[[nodiscard]] std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) noexcept;

}  // namespace soundcheck
