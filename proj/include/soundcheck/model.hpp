#pragma once

/// @file model.hpp
/// The interface every sequence model under test is reached through, plus the
/// token-level helpers built on it: action probabilities, decoding policies
/// and probe losses.

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "soundcheck/board.hpp"
#include "soundcheck/notation.hpp"

namespace soundcheck {

/// Transport failure, timeout, or a malformed/unnormalized response.
class QueryFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The model does not offer the requested operation (e.g. no probe head).
class CapabilityMissing : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kNormTolerance = 1e-5;

/// Next-token distribution over the 71-token vocabulary.
struct ModelDistribution {
    std::array<double, kVocabSize> probs{};

    /// Validates finiteness, non-negativity and total mass 1 within
    /// kNormTolerance, then renormalizes. Throws QueryFailure otherwise.
    [[nodiscard]] static ModelDistribution from_raw(std::span<const double> raw);
    /// Lowest token id among the maximal entries.
    [[nodiscard]] TokenId argmax() const noexcept;
    [[nodiscard]] double operator[](TokenId t) const noexcept { return probs[t]; }
    [[nodiscard]] double promotion_mass() const noexcept {
        return probs[kPromoQueen] + probs[kPromoRook] + probs[kPromoBishop] + probs[kPromoKnight];
    }
    bool operator==(const ModelDistribution&) const = default;
};

inline constexpr int kProbeClasses = 13;

/// Probe class: 0 empty, 1..6 white P N B R Q K, 7..12 black P N B R Q K.
[[nodiscard]] int probe_class(std::optional<Piece> p) noexcept;
[[nodiscard]] std::optional<Piece> probe_piece(int cls) noexcept;

/// Per-square class distributions, squares in a1..h8 order.
struct ProbeBoard {
    std::array<std::array<double, kProbeClasses>, 64> probs{};

    /// Throws QueryFailure if any square fails the normalization check.
    [[nodiscard]] static ProbeBoard from_raw(const std::vector<std::vector<double>>& raw);
    [[nodiscard]] static ProbeBoard one_hot(const Position& pos);
    [[nodiscard]] static ProbeBoard uniform();

    [[nodiscard]] int argmax_class(Square sq) const noexcept;
    /// Argmax class per square, as pieces.
    [[nodiscard]] std::array<std::optional<Piece>, 64> argmax_board() const noexcept;

    /// The argmax board as a position. Side to move and clocks come from
    /// `truth`; castling rights and the en-passant square are kept only where
    /// the argmax board still has the pieces they refer to.
    [[nodiscard]] Position argmax_position(const Position& truth) const;
};

/// Legal moves of `pos`, or its pseudo-legal moves when it fails validate().
[[nodiscard]] MoveList probe_moves(const Position& pos) noexcept;

/// Sum over squares of -ln p(true class), each probability floored at 1e-12.
[[nodiscard]] double probe_loss(const ProbeBoard& pb, const Position& truth) noexcept;
[[nodiscard]] inline double probe_loss(const ProbeBoard& pb, const BoardState& truth) noexcept {
    return probe_loss(pb, truth.position());
}

struct Capabilities {
    bool dist = true;
    bool dist_batch = false;
    bool probe = false;
    bool grad_cos = false;
};

/// A sequence model. Implementations must be safe to call from several
/// threads at once.
class Model {
public:
    virtual ~Model() = default;

    [[nodiscard]] virtual std::string name() const = 0;
    [[nodiscard]] virtual Capabilities capabilities() const = 0;
    [[nodiscard]] virtual ModelDistribution dist(TokenSpan tokens) = 0;
    /// Order-preserving. The default issues one dist() per sequence.
    [[nodiscard]] virtual std::vector<ModelDistribution> dist_batch(std::span<const TokenSequence> seqs);
    /// Throws CapabilityMissing unless overridden.
    [[nodiscard]] virtual ProbeBoard probe(TokenSpan tokens);
    /// Throws CapabilityMissing unless overridden.
    [[nodiscard]] virtual double grad_cos(TokenSpan tokens);
};

/// Forwards to another model and counts every query.
class CountingModel final : public Model {
public:
    explicit CountingModel(Model& inner) : inner_(inner) {}

    [[nodiscard]] std::string name() const override { return inner_.name(); }
    [[nodiscard]] Capabilities capabilities() const override { return inner_.capabilities(); }
    [[nodiscard]] ModelDistribution dist(TokenSpan tokens) override;
    [[nodiscard]] std::vector<ModelDistribution> dist_batch(std::span<const TokenSequence> seqs) override;
    [[nodiscard]] ProbeBoard probe(TokenSpan tokens) override;
    [[nodiscard]] double grad_cos(TokenSpan tokens) override;

    /// Distribution rows requested (a batch of n counts n) plus probe and
    /// grad_cos calls.
    [[nodiscard]] std::uint64_t queries() const noexcept { return queries_.load(); }

private:
    Model& inner_;
    std::atomic<std::uint64_t> queries_{0};
};

/// Probability of `m` as the next action after `prefix`:
/// p(from) * p(to | from) * p(promo | from, to) for a three-token move and
/// p(from) * p(to | from) * (1 - promotion mass after from, to) for a
/// two-token move, so that the action probabilities of all well-formed moves
/// plus EOS sum to at most 1.
[[nodiscard]] double move_probability(Model& model, TokenSpan prefix, const Move& m);

/// Batched form of move_probability for many moves sharing a prefix.
[[nodiscard]] std::vector<double> move_probabilities(Model& model, TokenSpan prefix, std::span<const Move> moves);

struct DecodingPolicy {
    enum class Kind : std::uint8_t { Greedy, TopK, TopP };
    Kind kind = Kind::Greedy;
    int k = 1;
    double p = 1.0;

    [[nodiscard]] static DecodingPolicy greedy() { return {}; }
    [[nodiscard]] static DecodingPolicy top_k(int k);
    [[nodiscard]] static DecodingPolicy top_p(double p);
    /// "greedy", "topk:4", "topp:0.9". Throws std::invalid_argument.
    [[nodiscard]] static DecodingPolicy parse(std::string_view text);
    [[nodiscard]] std::string str() const;
    [[nodiscard]] bool sampling() const noexcept { return kind != Kind::Greedy; }

    bool operator==(const DecodingPolicy&) const = default;
};

/// The truncated, renormalized distribution a policy samples from. Greedy
/// yields a point mass on the argmax.
[[nodiscard]] std::array<double, kVocabSize> policy_support(const ModelDistribution& d, const DecodingPolicy& policy);

/// Draws one token. Greedy ignores `rng`.
[[nodiscard]] TokenId draw_token(const ModelDistribution& d, const DecodingPolicy& policy, std::mt19937_64& rng);

struct EosMark {
    bool operator==(const EosMark&) const = default;
};

using ModelOutput = std::variant<Move, EosMark, StructuralFault>;

struct DecodedMove {
    ModelOutput output;
    TokenSequence tokens;  ///< tokens drawn for this move (the promotion-tail lookahead is dropped when not attached)
    int queries = 0;
};

/// Draws tokens one at a time until a move, EOS or a structural fault is
/// determined. After two square tokens the next token is drawn and attached
/// only if it is a promotion token. Fault indices are absolute positions in
/// prefix + drawn tokens.
[[nodiscard]] DecodedMove decode_move(Model& model, TokenSpan prefix, const DecodingPolicy& policy,
                                      std::mt19937_64& rng);

[[nodiscard]] std::string output_text(const ModelOutput& out);

}  // namespace soundcheck
