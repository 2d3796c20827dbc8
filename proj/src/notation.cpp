#include "soundcheck/notation.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace soundcheck {

TokenId promotion_token(PieceKind k) {
    switch (k) {
    case PieceKind::Queen: return kPromoQueen;
    case PieceKind::Rook: return kPromoRook;
    case PieceKind::Bishop: return kPromoBishop;
    case PieceKind::Knight: return kPromoKnight;
    default: throw std::invalid_argument("no promotion token for " + std::string(kind_name(k)));
    }
}

PieceKind token_promotion(TokenId t) noexcept {
    switch (t) {
    case kPromoQueen: return PieceKind::Queen;
    case kPromoRook: return PieceKind::Rook;
    case kPromoBishop: return PieceKind::Bishop;
    default: return PieceKind::Knight;
    }
}

std::string token_name(TokenId t) {
    if (t == kPad) return "PAD";
    if (t == kBos) return "BOS";
    if (t == kEos) return "EOS";
    if (is_square_token(t)) return token_square(t).name();
    if (is_promotion_token(t)) return std::string(1, kind_letter(token_promotion(t)));
    return "<" + std::to_string(t) + ">";
}

void append_move(TokenSequence& out, const Move& m) {
    out.push_back(square_token(m.from));
    out.push_back(square_token(m.to));
    if (m.promotion)
        out.push_back(promotion_token(*m.promotion));
}

TokenSequence encode_move(const Move& m) {
    TokenSequence out;
    append_move(out, m);
    return out;
}

TokenSequence encode_game(std::span<const Move> moves, bool complete) {
    TokenSequence out;
    out.reserve(moves.size() * 2 + 2);
    out.push_back(kBos);
    for (const Move& m : moves)
        append_move(out, m);
    if (complete)
        out.push_back(kEos);
    return out;
}

TokenSequence encode_game(const GameLine& game) { return encode_game(game.moves, game.complete); }

std::vector<DecodedItem> decode_move_stream(TokenSpan tokens) {
    std::vector<DecodedItem> out;
    const std::size_t n = tokens.size();
    std::size_t i = 0;
    auto fault = [&](std::size_t at, std::size_t begin, std::size_t end) {
        std::string pattern;
        for (std::size_t k = begin; k < end && k < n; ++k)
            pattern += token_name(tokens[k]);
        out.emplace_back(StructuralFault{at, pattern});
    };
    while (i < n) {
        const TokenId t = tokens[i];
        if (t == kBos || t == kEos) {
            out.emplace_back(t == kBos ? ControlMark::Bos : ControlMark::Eos);
            ++i;
            continue;
        }
        if (t == kPad) {
            std::size_t j = i;
            while (j < n && tokens[j] == kPad)
                ++j;
            if (j == n)
                break;
            fault(i, i, i + 1);
            return out;
        }
        if (!is_square_token(t)) {
            fault(i, i, i + 1);
            return out;
        }
        if (i + 1 >= n) {
            fault(i, i, i + 1);
            return out;
        }
        const TokenId u = tokens[i + 1];
        if (!is_square_token(u) || u == t) {
            fault(i + 1, i, i + 2);
            return out;
        }
        Move m{token_square(t), token_square(u), std::nullopt};
        i += 2;
        if (i < n && is_promotion_token(tokens[i])) {
            m.promotion = token_promotion(tokens[i]);
            ++i;
        }
        out.emplace_back(m);
    }
    return out;
}

MoveBoundaryMap boundary_map(TokenSpan tokens) {
    MoveBoundaryMap map(tokens.size(), 0);
    std::size_t i = 0;
    for (const DecodedItem& item : decode_move_stream(tokens)) {
        if (std::holds_alternative<StructuralFault>(item))
            break;
        if (std::holds_alternative<ControlMark>(item)) {
            map[i++] = kControl;
            continue;
        }
        const Move& m = std::get<Move>(item);
        map[i] = kMoveStart;
        if (m.promotion) {
            map[i + 2] = kMoveEnd | kPromotionTail;
            i += 3;
        } else {
            map[i + 1] = kMoveEnd;
            i += 2;
        }
    }
    return map;
}

GameLine parse_game_line(std::string_view line) {
    GameLine game;
    std::istringstream in{std::string(line)};
    std::string word;
    bool marker_seen = false;
    while (in >> word) {
        if (marker_seen)
            throw std::invalid_argument("text after " + std::string(kCompleteMarker) + ": '" + word + "'");
        if (word == kCompleteMarker) {
            marker_seen = true;
            continue;
        }
        auto m = Move::try_parse(word);
        if (!m)
            throw std::invalid_argument("malformed move '" + word + "'");
        game.moves.push_back(*m);
    }
    if (game.moves.empty() && !marker_seen)
        throw std::invalid_argument("empty line");
    game.complete = marker_seen;
    return game;
}

std::string format_game_line(const GameLine& game) {
    std::string out;
    for (const Move& m : game.moves) {
        if (!out.empty())
            out += ' ';
        out += m.uci();
    }
    if (game.complete) {
        if (!out.empty())
            out += ' ';
        out += kCompleteMarker;
    }
    return out;
}

Corpus read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open corpus " + path.string());
    Corpus corpus;
    std::string line;
    for (std::size_t idx = 0; std::getline(in, line); ++idx) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        try {
            corpus.games.push_back({idx, parse_game_line(line)});
        } catch (const std::invalid_argument& e) {
            corpus.issues.push_back({idx, e.what()});
        }
    }
    return corpus;
}

void write_corpus(const std::filesystem::path& path, std::span<const GameLine> games) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write corpus " + path.string());
    for (const GameLine& g : games)
        out << format_game_line(g) << '\n';
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

}  // namespace soundcheck
