#include "soundcheck/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace soundcheck {

ModelDistribution ModelDistribution::from_raw(std::span<const double> raw) {
    if (raw.size() != kVocabSize)
        throw QueryFailure("distribution has " + std::to_string(raw.size()) + " entries, expected 71");
    double sum = 0.0;
    for (double p : raw) {
        if (!std::isfinite(p) || p < 0.0)
            throw QueryFailure("distribution entry is negative or not finite");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kNormTolerance)
        throw QueryFailure("distribution sums to " + std::to_string(sum));
    ModelDistribution d;
    for (std::size_t i = 0; i < kVocabSize; ++i)
        d.probs[i] = raw[i] / sum;
    return d;
}

TokenId ModelDistribution::argmax() const noexcept {
    return static_cast<TokenId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

int probe_class(std::optional<Piece> p) noexcept { return p ? 1 + p->index() : 0; }

std::optional<Piece> probe_piece(int cls) noexcept {
    if (cls <= 0 || cls >= kProbeClasses)
        return std::nullopt;
    return Piece::from_index(cls - 1);
}

ProbeBoard ProbeBoard::from_raw(const std::vector<std::vector<double>>& raw) {
    if (raw.size() != 64)
        throw QueryFailure("probe board has " + std::to_string(raw.size()) + " squares, expected 64");
    ProbeBoard pb;
    for (std::size_t s = 0; s < 64; ++s) {
        if (raw[s].size() != kProbeClasses)
            throw QueryFailure("probe square " + std::to_string(s) + " has " + std::to_string(raw[s].size()) +
                               " classes, expected 13");
        double sum = 0.0;
        for (double p : raw[s]) {
            if (!std::isfinite(p) || p < 0.0)
                throw QueryFailure("probe entry is negative or not finite");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kNormTolerance)
            throw QueryFailure("probe square " + std::to_string(s) + " sums to " + std::to_string(sum));
        for (int c = 0; c < kProbeClasses; ++c)
            pb.probs[s][c] = raw[s][c] / sum;
    }
    return pb;
}

ProbeBoard ProbeBoard::one_hot(const Position& pos) {
    ProbeBoard pb;
    for (int s = 0; s < 64; ++s)
        pb.probs[s][probe_class(pos.piece_at(Square(s)))] = 1.0;
    return pb;
}

ProbeBoard ProbeBoard::uniform() {
    ProbeBoard pb;
    for (auto& sq : pb.probs)
        sq.fill(1.0 / kProbeClasses);
    return pb;
}

int ProbeBoard::argmax_class(Square sq) const noexcept {
    const auto& row = probs[sq.index()];
    return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::array<std::optional<Piece>, 64> ProbeBoard::argmax_board() const noexcept {
    std::array<std::optional<Piece>, 64> out;
    for (int s = 0; s < 64; ++s)
        out[s] = probe_piece(argmax_class(Square(s)));
    return out;
}

Position ProbeBoard::argmax_position(const Position& truth) const {
    Position pos;
    const auto board = argmax_board();
    for (int s = 0; s < 64; ++s)
        pos.set_piece(Square(s), board[s]);
    pos.set_side_to_move(truth.side_to_move());
    pos.set_clocks(truth.halfmove_clock(), truth.fullmove_number());

    auto has = [&](const char* sq, Color c, PieceKind k) {
        return board[Square::parse(sq)->index()] == Piece{c, k};
    };
    std::uint8_t rights = truth.castling_rights();
    if (!has("e1", Color::White, PieceKind::King))
        rights &= ~(kWhiteKingside | kWhiteQueenside);
    if (!has("h1", Color::White, PieceKind::Rook))
        rights &= ~kWhiteKingside;
    if (!has("a1", Color::White, PieceKind::Rook))
        rights &= ~kWhiteQueenside;
    if (!has("e8", Color::Black, PieceKind::King))
        rights &= ~(kBlackKingside | kBlackQueenside);
    if (!has("h8", Color::Black, PieceKind::Rook))
        rights &= ~kBlackKingside;
    if (!has("a8", Color::Black, PieceKind::Rook))
        rights &= ~kBlackQueenside;
    pos.set_castling_rights(rights);

    if (const auto ep = truth.en_passant()) {
        // the pawn that just made the double step must still be there
        const Color mover = opposite(truth.side_to_move());
        const int dir = mover == Color::White ? 1 : -1;
        const Square pawn_sq(ep->file(), ep->rank() + dir);
        if (board[pawn_sq.index()] == Piece{mover, PieceKind::Pawn} && !board[ep->index()])
            pos.set_en_passant(ep);
    }
    return pos;
}

MoveList probe_moves(const Position& pos) noexcept {
    MoveList out;
    if (pos.validate())
        pos.generate_pseudo_legal(out);
    else
        pos.generate_legal(out);
    return out;
}

double probe_loss(const ProbeBoard& pb, const Position& truth) noexcept {
    constexpr double kFloor = 1e-12;
    double loss = 0.0;
    for (int s = 0; s < 64; ++s) {
        const double p = pb.probs[s][probe_class(truth.piece_at(Square(s)))];
        loss -= std::log(std::max(p, kFloor));
    }
    return loss;
}

std::vector<ModelDistribution> Model::dist_batch(std::span<const TokenSequence> seqs) {
    std::vector<ModelDistribution> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs)
        out.push_back(dist(s));
    return out;
}

ProbeBoard Model::probe(TokenSpan) { throw CapabilityMissing(name() + ": no probe head"); }

double Model::grad_cos(TokenSpan) { throw CapabilityMissing(name() + ": grad_cos not offered"); }

ModelDistribution CountingModel::dist(TokenSpan tokens) {
    ++queries_;
    return inner_.dist(tokens);
}

std::vector<ModelDistribution> CountingModel::dist_batch(std::span<const TokenSequence> seqs) {
    queries_ += seqs.size();
    return inner_.dist_batch(seqs);
}

ProbeBoard CountingModel::probe(TokenSpan tokens) {
    ++queries_;
    return inner_.probe(tokens);
}

double CountingModel::grad_cos(TokenSpan tokens) {
    ++queries_;
    return inner_.grad_cos(tokens);
}

std::vector<double> move_probabilities(Model& model, TokenSpan prefix, std::span<const Move> moves) {
    std::vector<double> out(moves.size(), 0.0);
    if (moves.empty())
        return out;
    TokenSequence base(prefix.begin(), prefix.end());
    const ModelDistribution d1 = model.dist(base);

    auto extend = [&](std::initializer_list<TokenId> extra) {
        TokenSequence s = base;
        s.insert(s.end(), extra);
        return s;
    };

    // Second level: one query per distinct from-square with non-zero mass.
    std::vector<TokenId> froms;
    for (const Move& m : moves)
        if (d1[square_token(m.from)] > 0.0)
            froms.push_back(square_token(m.from));
    std::sort(froms.begin(), froms.end());
    froms.erase(std::unique(froms.begin(), froms.end()), froms.end());
    std::vector<TokenSequence> seqs;
    for (TokenId f : froms)
        seqs.push_back(extend({f}));
    const auto d2s = model.dist_batch(seqs);
    std::map<TokenId, const ModelDistribution*> d2;
    for (std::size_t i = 0; i < froms.size(); ++i)
        d2[froms[i]] = &d2s[i];

    // Third level: one query per distinct (from, to) with non-zero mass.
    std::vector<std::pair<TokenId, TokenId>> pairs;
    for (const Move& m : moves) {
        const TokenId f = square_token(m.from), t = square_token(m.to);
        auto it = d2.find(f);
        if (it != d2.end() && (*it->second)[t] > 0.0)
            pairs.emplace_back(f, t);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    seqs.clear();
    for (auto [f, t] : pairs)
        seqs.push_back(extend({f, t}));
    const auto d3s = model.dist_batch(seqs);
    std::map<std::pair<TokenId, TokenId>, const ModelDistribution*> d3;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        d3[pairs[i]] = &d3s[i];

    for (std::size_t i = 0; i < moves.size(); ++i) {
        const TokenId f = square_token(moves[i].from), t = square_token(moves[i].to);
        auto it = d3.find({f, t});
        if (it == d3.end())
            continue;
        const double head = d1[f] * (*d2[f])[t];
        const ModelDistribution& tail = *it->second;
        out[i] = moves[i].promotion ? head * tail[promotion_token(*moves[i].promotion)]
                                    : head * std::max(0.0, 1.0 - tail.promotion_mass());
    }
    return out;
}

double move_probability(Model& model, TokenSpan prefix, const Move& m) {
    return move_probabilities(model, prefix, std::span<const Move>(&m, 1))[0];
}

DecodingPolicy DecodingPolicy::top_k(int k) {
    if (k < 1)
        throw std::invalid_argument("top-k needs k >= 1");
    return {Kind::TopK, k, 1.0};
}

DecodingPolicy DecodingPolicy::top_p(double p) {
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("top-p needs 0 < p <= 1");
    return {Kind::TopP, 1, p};
}

DecodingPolicy DecodingPolicy::parse(std::string_view text) {
    if (text == "greedy")
        return greedy();
    const auto colon = text.find(':');
    if (colon == std::string_view::npos)
        throw std::invalid_argument("unknown decoding policy '" + std::string(text) + "'");
    const std::string head(text.substr(0, colon));
    const std::string arg(text.substr(colon + 1));
    try {
        std::size_t used = 0;
        if (head == "topk") {
            const int k = std::stoi(arg, &used);
            if (used == arg.size())
                return top_k(k);
        } else if (head == "topp") {
            const double p = std::stod(arg, &used);
            if (used == arg.size())
                return top_p(p);
        }
    } catch (const std::logic_error&) {
    }
    throw std::invalid_argument("unknown decoding policy '" + std::string(text) + "'");
}

std::string DecodingPolicy::str() const {
    switch (kind) {
    case Kind::Greedy: return "greedy";
    case Kind::TopK: return "topk:" + std::to_string(k);
    case Kind::TopP: {
        std::ostringstream os;
        os << "topp:" << p;
        return os.str();
    }
    }
    return "?";
}

std::array<double, kVocabSize> policy_support(const ModelDistribution& d, const DecodingPolicy& policy) {
    std::array<double, kVocabSize> out{};
    if (policy.kind == DecodingPolicy::Kind::Greedy) {
        out[d.argmax()] = 1.0;
        return out;
    }
    std::array<TokenId, kVocabSize> order;
    std::iota(order.begin(), order.end(), TokenId{0});
    std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) { return d[a] > d[b]; });

    std::size_t keep = 0;
    if (policy.kind == DecodingPolicy::Kind::TopK) {
        keep = std::min<std::size_t>(static_cast<std::size_t>(policy.k), kVocabSize);
    } else {
        double mass = 0.0;
        while (keep < kVocabSize && (keep == 0 || mass < policy.p)) {
            mass += d[order[keep]];
            ++keep;
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < keep; ++i)
        total += d[order[i]];
    if (total <= 0.0) {
        out[order[0]] = 1.0;
        return out;
    }
    for (std::size_t i = 0; i < keep; ++i)
        out[order[i]] = d[order[i]] / total;
    return out;
}

TokenId draw_token(const ModelDistribution& d, const DecodingPolicy& policy, std::mt19937_64& rng) {
    if (policy.kind == DecodingPolicy::Kind::Greedy)
        return d.argmax();
    const auto support = policy_support(d, policy);
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    double cum = 0.0;
    std::optional<TokenId> last;
    for (std::size_t t = 0; t < kVocabSize; ++t) {
        if (support[t] <= 0.0)
            continue;
        cum += support[t];
        last = static_cast<TokenId>(t);
        if (u < cum)
            return *last;
    }
    return *last;
}

DecodedMove decode_move(Model& model, TokenSpan prefix, const DecodingPolicy& policy, std::mt19937_64& rng) {
    DecodedMove out;
    TokenSequence seq(prefix.begin(), prefix.end());
    const std::size_t n = seq.size();
    auto next = [&]() {
        ++out.queries;
        return draw_token(model.dist(seq), policy, rng);
    };
    auto fault = [&](std::size_t index) {
        std::string pattern;
        for (TokenId t : out.tokens)
            pattern += token_name(t);
        out.output = StructuralFault{index, pattern};
    };

    const TokenId t1 = next();
    out.tokens.push_back(t1);
    if (t1 == kEos) {
        out.output = EosMark{};
        return out;
    }
    if (!is_square_token(t1)) {
        fault(n);
        return out;
    }
    seq.push_back(t1);
    const TokenId t2 = next();
    out.tokens.push_back(t2);
    if (!is_square_token(t2) || t2 == t1) {
        fault(n + 1);
        return out;
    }
    seq.push_back(t2);
    Move m{token_square(t1), token_square(t2), std::nullopt};
    const TokenId t3 = next();
    if (is_promotion_token(t3)) {
        out.tokens.push_back(t3);
        m.promotion = token_promotion(t3);
    }
    out.output = m;
    return out;
}

std::string output_text(const ModelOutput& out) {
    if (const auto* m = std::get_if<Move>(&out))
        return m->uci();
    if (std::holds_alternative<EosMark>(out))
        return "EOS";
    return std::get<StructuralFault>(out).pattern;
}

}  // namespace soundcheck
