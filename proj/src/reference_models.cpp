#include "soundcheck/reference_models.hpp"

#include <algorithm>
#include <vector>

namespace soundcheck {

namespace {

std::uint64_t mix(std::uint64_t h, TokenId t) noexcept {
    h ^= t + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h * 0xbf58476d1ce4e5b9ULL;
}

ModelDistribution point_mass(TokenId t) {
    ModelDistribution d;
    d.probs[t] = 1.0;
    return d;
}

}  // namespace

std::optional<GameCursor> CursorCache::lookup(TokenSpan tokens) {
    if (tokens.empty() || tokens[0] != kBos)
        return std::nullopt;
    std::vector<std::uint64_t> hashes(tokens.size() + 1, 0);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        hashes[i + 1] = mix(hashes[i], tokens[i]);

    std::lock_guard lock(mu_);
    std::size_t start = 1;
    std::optional<GameCursor> cursor;
    for (std::size_t len = tokens.size(); len >= 1; --len) {
        auto it = cache_.find(hashes[len]);
        if (it != cache_.end() && std::equal(it->second.tokens().begin(), it->second.tokens().end(),
                                             tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(len)) &&
            it->second.tokens().size() == len) {
            cursor = it->second;
            start = len;
            break;
        }
    }
    if (!cursor)
        cursor.emplace();
    if (cache_.size() + tokens.size() > max_entries_)
        cache_.clear();
    for (std::size_t i = start; i < tokens.size(); ++i) {
        if (cursor->try_advance(tokens[i]))
            return std::nullopt;
        cache_.insert_or_assign(hashes[i + 1], *cursor);
    }
    return cursor;
}

ModelDistribution PerfectLegalModel::legal_uniform(const GameCursor& cursor) {
    const TokenSet legal = cursor.legal_tokens();
    if (legal.none())
        return point_mass(kEos);
    ModelDistribution d;
    const double p = 1.0 / static_cast<double>(legal.count());
    for (std::size_t t = 0; t < kVocabSize; ++t)
        if (legal.test(t))
            d.probs[t] = p;
    return d;
}

ModelDistribution PerfectLegalModel::dist(TokenSpan tokens) {
    const auto cursor = cache_.lookup(tokens);
    return cursor ? legal_uniform(*cursor) : point_mass(kEos);
}

SeededFlawModel::SeededFlawModel(Move trap, double mass, Trigger trigger)
    : trap_(trap), trap_tokens_(encode_move(trap)), mass_(mass), trigger_(std::move(trigger)) {
    if (!trigger_)
        trigger_ = [](const GameCursor& c) { return c.last_move_was_capture(); };
}

ModelDistribution SeededFlawModel::dist(TokenSpan tokens) {
    const std::size_t n = tokens.size();
    for (std::size_t k = 1; k < trap_tokens_.size(); ++k) {
        if (n <= k || !std::equal(trap_tokens_.begin(), trap_tokens_.begin() + static_cast<std::ptrdiff_t>(k),
                                  tokens.end() - static_cast<std::ptrdiff_t>(k)))
            continue;
        const auto boundary = cache_.lookup(tokens.first(n - k));
        if (boundary && boundary->at_boundary() && !boundary->finished() &&
            boundary->terminal() == TerminalKind::NotTerminal && trigger_(*boundary))
            return point_mass(trap_tokens_[k]);
    }
    const auto cursor = cache_.lookup(tokens);
    if (!cursor)
        return point_mass(kEos);
    ModelDistribution d = legal_uniform(*cursor);
    if (cursor->at_boundary() && !cursor->finished() && cursor->terminal() == TerminalKind::NotTerminal &&
        trigger_(*cursor)) {
        for (double& p : d.probs)
            p *= 1.0 - mass_;
        d.probs[trap_tokens_[0]] += mass_;
    }
    return d;
}

ModelDistribution LengthFlawModel::dist(TokenSpan tokens) {
    const auto cursor = cache_.lookup(tokens);
    if (!cursor)
        return point_mass(kEos);
    ModelDistribution d = legal_uniform(*cursor);
    if (cursor->at_boundary() && !cursor->finished() && cursor->terminal() == TerminalKind::NotTerminal &&
        cursor->plies() >= length_) {
        for (double& p : d.probs)
            p *= 0.4;
        d.probs[kEos] += 0.6;
    }
    return d;
}

ProbeBoard ReferencePerfectProbe::probe(TokenSpan tokens) {
    const auto cursor = cache_.lookup(tokens);
    if (!cursor)
        throw QueryFailure("probe on an invalid prefix");
    return ProbeBoard::one_hot(cursor->board().position());
}

ReferenceNoisyProbe::ReferenceNoisyProbe(Square a, Square b, Predicate corrupt)
    : a_(a), b_(b), corrupt_(std::move(corrupt)) {
    if (!corrupt_)
        corrupt_ = [](const GameCursor&) { return true; };
}

ProbeBoard ReferenceNoisyProbe::probe(TokenSpan tokens) {
    const auto cursor = cache_.lookup(tokens);
    if (!cursor)
        throw QueryFailure("probe on an invalid prefix");
    ProbeBoard pb = ProbeBoard::one_hot(cursor->board().position());
    if (corrupt_(*cursor))
        std::swap(pb.probs[a_.index()], pb.probs[b_.index()]);
    return pb;
}

ModelDistribution UniformModel::dist(TokenSpan) {
    ModelDistribution d;
    d.probs.fill(1.0 / static_cast<double>(kVocabSize));
    return d;
}

std::unique_ptr<Model> make_builtin_model(std::string_view name) {
    if (name == "perfect")
        return std::make_unique<PerfectLegalModel>();
    if (name == "perfect-probe")
        return std::make_unique<ReferencePerfectProbe>();
    if (name == "seeded-flaw")
        return std::make_unique<SeededFlawModel>();
    if (name == "uniform")
        return std::make_unique<UniformModel>();
    if (name.starts_with("length-flaw:")) {
        const std::string arg(name.substr(12));
        std::size_t used = 0;
        int length = -1;
        try {
            length = std::stoi(arg, &used);
        } catch (const std::logic_error&) {
        }
        if (length >= 0 && used == arg.size())
            return std::make_unique<LengthFlawModel>(length);
    }
    throw std::invalid_argument("unknown builtin model '" + std::string(name) + "'");
}

}  // namespace soundcheck
