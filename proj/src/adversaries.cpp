#include "soundcheck/adversaries.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <unordered_map>

namespace soundcheck {

AdversarySpec AdversarySpec::parse(std::string_view text) {
    if (text == "rm") return {AdversaryKind::RM};
    if (text == "smm") return {AdversaryKind::SMM};
    if (text == "imo") return {AdversaryKind::IMO};
    if (text == "bso") return {AdversaryKind::BSO};
    if (text == "ad") return {AdversaryKind::AD};
    if (text == "self-play") return {AdversaryKind::SelfPlay};
    if (text == "adaptive-imo") return {AdversaryKind::AdaptiveIMO, 4};
    if (text.starts_with("adaptive-imo:")) {
        const std::string arg(text.substr(13));
        std::size_t used = 0;
        int k = 0;
        try {
            k = std::stoi(arg, &used);
        } catch (const std::logic_error&) {
        }
        if (used == arg.size() && k >= 1)
            return {AdversaryKind::AdaptiveIMO, k};
    }
    throw std::invalid_argument("unknown adversary '" + std::string(text) + "'");
}

std::string AdversarySpec::str() const {
    switch (kind) {
    case AdversaryKind::RM: return "rm";
    case AdversaryKind::SMM: return "smm";
    case AdversaryKind::IMO: return "imo";
    case AdversaryKind::BSO: return "bso";
    case AdversaryKind::AD: return "ad";
    case AdversaryKind::AdaptiveIMO: return "adaptive-imo:" + std::to_string(k);
    case AdversaryKind::SelfPlay: return "self-play";
    }
    return "?";
}

std::size_t argmax_candidate(std::span<const CandidateScore> scores) noexcept {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i].score > scores[best].score)
            best = i;
    return best;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) noexcept {
    __extension__ using Wide = unsigned __int128;
    return static_cast<std::size_t>((static_cast<Wide>(rng()) * n) >> 64);
}

namespace {

using Mask = std::array<bool, kVocabSize>;

Mask all_tokens() {
    Mask m;
    m.fill(true);
    return m;
}

// Top-k tokens of a slot by (probability desc, id asc).
Mask top_k_mask(const ModelDistribution& d, int k) {
    if (k >= static_cast<int>(kVocabSize))
        return all_tokens();
    std::array<TokenId, kVocabSize> order;
    std::iota(order.begin(), order.end(), TokenId{0});
    std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) { return d[a] > d[b]; });
    Mask m{};
    for (int i = 0; i < k; ++i)
        m[order[i]] = true;
    return m;
}

// Legal structure of W after the candidate, indexed by token.
struct LegalIndex {
    std::array<std::array<bool, 64>, 64> plain{};  // [from][to] two-token move legal
    std::array<std::array<std::uint8_t, 64>, 64> promos{};  // bit per promotion token
    bool is_legal(int f, int t, std::optional<PieceKind> promo) const {
        if (!promo)
            return plain[f][t];
        return (promos[f][t] >> (promotion_token(*promo) - kPromoQueen)) & 1;
    }
};

LegalIndex index_moves(const GameCursor& c) {
    LegalIndex idx;
    for (const Move& m : c.board_moves()) {
        if (m.promotion)
            idx.promos[m.from.index()][m.to.index()] |= 1 << (promotion_token(*m.promotion) - kPromoQueen);
        else
            idx.plain[m.from.index()][m.to.index()] = true;
    }
    return idx;
}

// Runs dist_batch over `seqs` in chunks of `batch`.
std::vector<ModelDistribution> batched(Model& model, const std::vector<TokenSequence>& seqs, std::size_t batch) {
    std::vector<ModelDistribution> out;
    out.reserve(seqs.size());
    for (std::size_t i = 0; i < seqs.size(); i += batch) {
        const std::size_t n = std::min(batch, seqs.size() - i);
        auto part = model.dist_batch(std::span<const TokenSequence>(seqs.data() + i, n));
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

enum class Reduce { Max, Sum };

// Shared enumeration for IMO and adaptive IMO. In Max mode subtrees whose
// upper bound does not exceed the running maximum are skipped; in Sum mode
// only exact zeros are skipped.
double invalid_mass(Model& model, const GameCursor& after, Reduce reduce, int k, std::size_t batch) {
    const LegalIndex legal = index_moves(after);
    const TokenSequence& base = after.tokens();
    const std::size_t batch_size = std::max<std::size_t>(1, batch);

    const ModelDistribution d1 = model.dist(base);
    const Mask m1 = top_k_mask(d1, k);
    double acc = m1[kEos] ? d1[kEos] : 0.0;  // EOS is invalid here: the position is not terminal

    auto bound_ok = [&](double upper) { return upper > 0.0 && (reduce == Reduce::Sum || upper > acc); };

    std::vector<int> froms;
    for (int f = 0; f < 64; ++f) {
        const TokenId tf = square_token(Square(f));
        if (m1[tf] && bound_ok(d1[tf]))
            froms.push_back(f);
    }
    if (reduce == Reduce::Max)
        std::stable_sort(froms.begin(), froms.end(), [&](int a, int b) {
            return d1[square_token(Square(a))] > d1[square_token(Square(b))];
        });

    std::vector<TokenSequence> seqs;
    for (int f : froms) {
        TokenSequence s = base;
        s.push_back(square_token(Square(f)));
        seqs.push_back(std::move(s));
    }
    const auto d2s = batched(model, seqs, batch_size);

    struct Pair {
        int f, t;
        double head;
    };
    std::vector<Pair> pairs;
    std::vector<Mask> m2s;
    for (std::size_t i = 0; i < froms.size(); ++i) {
        const int f = froms[i];
        const double pf = d1[square_token(Square(f))];
        const Mask m2 = top_k_mask(d2s[i], k);
        for (int t = 0; t < 64; ++t) {
            if (t == f)
                continue;
            const TokenId tt = square_token(Square(t));
            if (!m2[tt])
                continue;
            const double head = pf * d2s[i][tt];
            if (head > 0.0)
                pairs.push_back({f, t, head});
        }
    }
    if (reduce == Reduce::Max)
        std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.head > b.head; });

    for (std::size_t i = 0; i < pairs.size();) {
        std::vector<Pair> chunk;
        for (; i < pairs.size() && chunk.size() < batch_size; ++i)
            if (bound_ok(pairs[i].head))
                chunk.push_back(pairs[i]);
        if (chunk.empty())
            continue;
        seqs.clear();
        for (const Pair& p : chunk) {
            TokenSequence s = base;
            s.push_back(square_token(Square(p.f)));
            s.push_back(square_token(Square(p.t)));
            seqs.push_back(std::move(s));
        }
        const auto d3s = model.dist_batch(seqs);
        for (std::size_t j = 0; j < chunk.size(); ++j) {
            const Pair& p = chunk[j];
            const ModelDistribution& d3 = d3s[j];
            const Mask m3 = top_k_mask(d3, k);
            auto take = [&](double v) { acc = reduce == Reduce::Max ? std::max(acc, v) : acc + v; };
            if (!legal.is_legal(p.f, p.t, std::nullopt)) {
                double promo_mass = 0.0;
                for (TokenId q = kPromoQueen; q <= kPromoKnight; ++q)
                    if (m3[q])
                        promo_mass += d3[q];
                take(p.head * std::max(0.0, 1.0 - promo_mass));
            }
            for (TokenId q = kPromoQueen; q <= kPromoKnight; ++q)
                if (m3[q] && !legal.is_legal(p.f, p.t, token_promotion(q)))
                    take(p.head * d3[q]);
        }
    }
    return acc;
}

// Memoizes distributions for one f_imo_naive call.
class MemoModel final : public Model {
public:
    explicit MemoModel(Model& inner) : inner_(inner) {}
    std::string name() const override { return inner_.name(); }
    Capabilities capabilities() const override { return inner_.capabilities(); }
    ModelDistribution dist(TokenSpan tokens) override {
        TokenSequence key(tokens.begin(), tokens.end());
        auto it = memo_.find(key);
        if (it != memo_.end())
            return it->second;
        return memo_.emplace(std::move(key), inner_.dist(tokens)).first->second;
    }

private:
    struct Hash {
        std::size_t operator()(const TokenSequence& s) const noexcept {
            std::size_t h = 1469598103934665603ULL;
            for (TokenId t : s)
                h = (h ^ t) * 1099511628211ULL;
            return h;
        }
    };
    Model& inner_;
    std::unordered_map<TokenSequence, ModelDistribution, Hash> memo_;
};

GameCursor successor(const GameCursor& cursor, const Move& candidate) {
    if (!cursor.at_boundary())
        throw MisalignedCursor("adversary objectives need a cursor at a move boundary");
    return cursor.after_move(candidate);
}

}  // namespace

double f_imo(Model& model, const GameCursor& cursor, const Move& candidate, const ImoOptions& opt) {
    const GameCursor after = successor(cursor, candidate);
    if (after.terminal() != TerminalKind::NotTerminal)
        return 0.0;
    return invalid_mass(model, after, Reduce::Max, static_cast<int>(kVocabSize), opt.batch_size);
}

double f_imo_naive(Model& model, const GameCursor& cursor, const Move& candidate) {
    const GameCursor after = successor(cursor, candidate);
    if (after.terminal() != TerminalKind::NotTerminal)
        return 0.0;
    MemoModel memo(model);
    const TokenSequence& base = after.tokens();
    double best = memo.dist(base)[kEos];
    const MoveList& legal = after.board_moves();
    for (int f = 0; f < 64; ++f)
        for (int t = 0; t < 64; ++t) {
            if (f == t)
                continue;
            for (int q = -1; q < 4; ++q) {
                Move m{Square(f), Square(t), std::nullopt};
                if (q >= 0)
                    m.promotion = token_promotion(static_cast<TokenId>(kPromoQueen + q));
                if (legal.contains(m))
                    continue;
                best = std::max(best, move_probability(memo, base, m));
            }
        }
    return best;
}

double f_adaptive_imo(Model& model, const GameCursor& cursor, const Move& candidate, int k, const ImoOptions& opt) {
    if (k < 1)
        throw std::invalid_argument("adaptive IMO needs k >= 1");
    const GameCursor after = successor(cursor, candidate);
    if (after.terminal() != TerminalKind::NotTerminal)
        return 0.0;
    return std::min(1.0, invalid_mass(model, after, Reduce::Sum, k, opt.batch_size));
}

double f_bso(Model& model, const GameCursor& cursor, const Move& candidate) {
    if (!model.capabilities().probe)
        throw CapabilityMissing(model.name() + ": BSO needs a probe head");
    const GameCursor after = successor(cursor, candidate);
    return probe_loss(model.probe(after.tokens()), after.board());
}

double f_smm(Model& model, const GameCursor& cursor, const Move& candidate) {
    if (!cursor.at_boundary())
        throw MisalignedCursor("adversary objectives need a cursor at a move boundary");
    return move_probability(model, cursor.tokens(), candidate);
}

double f_ad(Model& model, const GameCursor& cursor, const Move& candidate) {
    return -f_smm(model, cursor, candidate);
}

std::vector<CandidateScore> score_candidates(const AdversarySpec& spec, Model& model, const GameCursor& cursor,
                                             const ImoOptions& opt) {
    const LegalContinuations cont = continuations(cursor);
    std::vector<CandidateScore> out;
    out.reserve(cont.moves.size());
    switch (spec.kind) {
    case AdversaryKind::SMM:
    case AdversaryKind::AD: {
        const auto ps = move_probabilities(model, cursor.tokens(), cont.moves);
        const double sign = spec.kind == AdversaryKind::SMM ? 1.0 : -1.0;
        for (std::size_t i = 0; i < cont.moves.size(); ++i)
            out.push_back({cont.moves[i], sign * ps[i]});
        break;
    }
    case AdversaryKind::IMO:
        for (const Move& m : cont.moves)
            out.push_back({m, f_imo(model, cursor, m, opt)});
        break;
    case AdversaryKind::AdaptiveIMO:
        for (const Move& m : cont.moves)
            out.push_back({m, f_adaptive_imo(model, cursor, m, spec.k, opt)});
        break;
    case AdversaryKind::BSO:
        for (const Move& m : cont.moves)
            out.push_back({m, f_bso(model, cursor, m)});
        break;
    case AdversaryKind::RM:
    case AdversaryKind::SelfPlay:
        throw std::logic_error(spec.str() + " has no objective to score");
    }
    return out;
}

Move select_adversary_move(const AdversarySpec& spec, Model& model, const GameCursor& cursor, std::mt19937_64& rng,
                           const ImoOptions& opt) {
    if (spec.kind == AdversaryKind::SelfPlay)
        throw std::logic_error("self-play has no adversary move; use self_play_step");
    if (spec.kind == AdversaryKind::BSO && !model.capabilities().probe)
        throw CapabilityMissing(model.name() + ": BSO needs a probe head");
    if (spec.kind == AdversaryKind::RM) {
        const LegalContinuations cont = continuations(cursor);
        if (cont.moves.empty())
            throw std::logic_error("no legal move to select");
        return cont.moves[uniform_index(rng, cont.moves.size())];
    }
    const auto scores = score_candidates(spec, model, cursor, opt);
    if (scores.empty())
        throw std::logic_error("no legal move to select");
    return scores[argmax_candidate(scores)].move;
}

DecodedMove self_play_step(Model& model, const GameCursor& cursor, const DecodingPolicy& policy,
                           std::mt19937_64& rng) {
    if (!cursor.at_boundary())
        throw MisalignedCursor("self-play needs a cursor at a move boundary");
    return decode_move(model, cursor.tokens(), policy, rng);
}

}  // namespace soundcheck
