#pragma once

/// @file reference_models.hpp
/// In-process models with known behaviour, used as oracles for the attack
/// machinery. All of them are deterministic and thread-safe.

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "soundcheck/model.hpp"
#include "soundcheck/worldmodel.hpp"

namespace soundcheck {

/// Replays token prefixes into cursors, memoizing every prefix it has seen.
/// A prefix that is not valid yields nullopt.
class CursorCache {
public:
    explicit CursorCache(std::size_t max_entries = 1 << 15) : max_entries_(max_entries) {}
    [[nodiscard]] std::optional<GameCursor> lookup(TokenSpan tokens);

private:
    std::mutex mu_;
    std::unordered_map<std::uint64_t, GameCursor> cache_;
    std::size_t max_entries_;
};

/// Uniform over the legal next tokens; EOS with probability 1 at terminal
/// positions and after any invalid prefix.
class PerfectLegalModel : public Model {
public:
    [[nodiscard]] std::string name() const override { return "perfect"; }
    [[nodiscard]] Capabilities capabilities() const override { return {true, true, false, false}; }
    [[nodiscard]] ModelDistribution dist(TokenSpan tokens) override;

    /// The distribution for a known cursor.
    [[nodiscard]] static ModelDistribution legal_uniform(const GameCursor& cursor);

protected:
    CursorCache cache_;
};

/// PerfectLegalModel, except that when `trigger` holds at a move boundary the
/// first token of `trap` gets `mass` and the legal tokens share the rest;
/// once the trap has been started every later trap token gets probability 1.
/// The default trigger is "the previous move was a capture"; the default trap
/// a1b4 is not a legal displacement for any piece.
class SeededFlawModel final : public PerfectLegalModel {
public:
    using Trigger = std::function<bool(const GameCursor&)>;

    explicit SeededFlawModel(Move trap = Move::parse("a1b4"), double mass = 0.9, Trigger trigger = {});

    [[nodiscard]] std::string name() const override { return "seeded-flaw"; }
    [[nodiscard]] ModelDistribution dist(TokenSpan tokens) override;

    [[nodiscard]] const Move& trap() const noexcept { return trap_; }
    [[nodiscard]] bool triggered(const GameCursor& boundary) const { return trigger_(boundary); }

private:
    Move trap_;
    TokenSequence trap_tokens_;
    double mass_;
    Trigger trigger_;
};

/// PerfectLegalModel until `length` plies have been played; from then on at
/// every move boundary EOS gets 0.6 and the legal distribution is scaled to 0.4.
class LengthFlawModel final : public PerfectLegalModel {
public:
    explicit LengthFlawModel(int length) : length_(length) {}

    [[nodiscard]] std::string name() const override { return "length-flaw:" + std::to_string(length_); }
    [[nodiscard]] ModelDistribution dist(TokenSpan tokens) override;
    [[nodiscard]] int length() const noexcept { return length_; }

private:
    int length_;
};

/// A perfect model with a probe head that reports the true board one-hot.
class ReferencePerfectProbe : public PerfectLegalModel {
public:
    [[nodiscard]] std::string name() const override { return "perfect-probe"; }
    [[nodiscard]] Capabilities capabilities() const override { return {true, true, true, false}; }
    [[nodiscard]] ProbeBoard probe(TokenSpan tokens) override;
};

/// Like ReferencePerfectProbe, but when `corrupt` holds for the cursor the
/// one-hot classes of squares `a` and `b` are exchanged (identical contents
/// leave the board unchanged). By default it always corrupts.
class ReferenceNoisyProbe final : public ReferencePerfectProbe {
public:
    using Predicate = std::function<bool(const GameCursor&)>;

    ReferenceNoisyProbe(Square a, Square b, Predicate corrupt = {});

    [[nodiscard]] std::string name() const override { return "noisy-probe"; }
    [[nodiscard]] ProbeBoard probe(TokenSpan tokens) override;

private:
    Square a_, b_;
    Predicate corrupt_;
};

/// Uniform over all 71 tokens, whatever the prefix.
class UniformModel final : public Model {
public:
    [[nodiscard]] std::string name() const override { return "uniform"; }
    [[nodiscard]] Capabilities capabilities() const override { return {true, true, false, false}; }
    [[nodiscard]] ModelDistribution dist(TokenSpan tokens) override;
};

/// Builtin models by name: perfect, perfect-probe, seeded-flaw, uniform,
/// length-flaw:<L>. Throws std::invalid_argument for unknown names.
[[nodiscard]] std::unique_ptr<Model> make_builtin_model(std::string_view name);

}  // namespace soundcheck
