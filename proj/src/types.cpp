#include "soundcheck/types.hpp"

#include <array>
#include <tuple>

namespace soundcheck {

std::optional<Square> Square::parse(std::string_view name) noexcept {
    if (name.size() != 2)
        return std::nullopt;
    const int f = name[0] - 'a';
    const int r = name[1] - '1';
    if (!valid_coords(f, r))
        return std::nullopt;
    return Square(f, r);
}

char kind_letter(PieceKind k) noexcept {
    static constexpr std::array<char, kPieceKinds> letters{'p', 'n', 'b', 'r', 'q', 'k'};
    return letters[kind_index(k)];
}

std::string_view kind_name(PieceKind k) noexcept {
    static constexpr std::array<std::string_view, kPieceKinds> names{"pawn", "knight", "bishop",
                                                                     "rook", "queen",  "king"};
    return names[kind_index(k)];
}

std::optional<PieceKind> kind_from_letter(char c) noexcept {
    switch (c) {
    case 'p': return PieceKind::Pawn;
    case 'n': return PieceKind::Knight;
    case 'b': return PieceKind::Bishop;
    case 'r': return PieceKind::Rook;
    case 'q': return PieceKind::Queen;
    case 'k': return PieceKind::King;
    default: return std::nullopt;
    }
}

char Piece::fen_letter() const noexcept {
    const char c = kind_letter(kind);
    return color == Color::White ? static_cast<char>(c - 'a' + 'A') : c;
}

std::string Move::uci() const {
    std::string s = from.name() + to.name();
    if (promotion)
        s += kind_letter(*promotion);
    return s;
}

std::optional<Move> Move::try_parse(std::string_view uci) noexcept {
    if (uci.size() != 4 && uci.size() != 5)
        return std::nullopt;
    auto from = Square::parse(uci.substr(0, 2));
    auto to = Square::parse(uci.substr(2, 2));
    if (!from || !to || *from == *to)
        return std::nullopt;
    Move m{*from, *to, std::nullopt};
    if (uci.size() == 5) {
        auto k = kind_from_letter(uci[4]);
        if (!k || *k == PieceKind::Pawn || *k == PieceKind::King)
            return std::nullopt;
        m.promotion = k;
    }
    return m;
}

Move Move::parse(std::string_view uci) {
    auto m = try_parse(uci);
    if (!m)
        throw std::invalid_argument("malformed UCI move '" + std::string(uci) + "'");
    return *m;
}

namespace {
// Promotion token order is q, r, b, n.
int promo_rank(const std::optional<PieceKind>& p) noexcept {
    if (!p)
        return 0;
    switch (*p) {
    case PieceKind::Queen: return 1;
    case PieceKind::Rook: return 2;
    case PieceKind::Bishop: return 3;
    case PieceKind::Knight: return 4;
    default: return 5;
    }
}
}  // namespace

bool tie_rank_less(const Move& a, const Move& b) noexcept {
    return std::tuple(a.from.index(), a.to.index(), promo_rank(a.promotion)) <
           std::tuple(b.from.index(), b.to.index(), promo_rank(b.promotion));
}

}  // namespace soundcheck
