#include "soundcheck/position.hpp"

#include <algorithm>
#include <bit>
#include <sstream>
#include <vector>

namespace soundcheck {

namespace {

// Ray directions: N, S, E, W, NE, NW, SE, SW.
constexpr std::array<int, 8> kDirFile{0, 0, 1, -1, 1, -1, 1, -1};
constexpr std::array<int, 8> kDirRank{1, -1, 0, 0, 1, 1, -1, -1};
// Directions along which the square index increases; the nearest blocker is
// then the least significant bit.
constexpr std::array<bool, 8> kDirIncreasing{true, false, true, false, true, true, false, false};

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct Tables {
    std::array<std::array<Bitboard, 64>, 8> rays{};
    std::array<Bitboard, 64> knight{};
    std::array<Bitboard, 64> king{};
    std::array<std::array<Bitboard, 64>, 2> pawn{};
    std::array<std::array<std::uint64_t, 64>, kPieceCount> zobrist_piece{};
    std::array<std::uint64_t, 16> zobrist_castling{};
    std::array<std::uint64_t, 8> zobrist_ep_file{};
    std::uint64_t zobrist_black = 0;
    std::array<std::uint8_t, 64> castling_mask{};
};

constexpr Bitboard bit_at(int file, int rank) {
    return valid_coords(file, rank) ? (Bitboard{1} << (rank * 8 + file)) : 0;
}

constexpr Tables make_tables() {
    Tables t{};
    for (int sq = 0; sq < 64; ++sq) {
        const int f = sq & 7;
        const int r = sq >> 3;
        for (int d = 0; d < 8; ++d) {
            Bitboard ray = 0;
            for (int ff = f + kDirFile[d], rr = r + kDirRank[d]; valid_coords(ff, rr);
                 ff += kDirFile[d], rr += kDirRank[d])
                ray |= bit_at(ff, rr);
            t.rays[d][sq] = ray;
        }
        constexpr std::array<std::array<int, 2>, 8> jumps{
            {{1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}}};
        for (const auto& j : jumps)
            t.knight[sq] |= bit_at(f + j[0], r + j[1]);
        for (int df = -1; df <= 1; ++df)
            for (int dr = -1; dr <= 1; ++dr)
                if (df != 0 || dr != 0)
                    t.king[sq] |= bit_at(f + df, r + dr);
        t.pawn[0][sq] = bit_at(f - 1, r + 1) | bit_at(f + 1, r + 1);
        t.pawn[1][sq] = bit_at(f - 1, r - 1) | bit_at(f + 1, r - 1);
        t.castling_mask[sq] = 15;
    }
    t.castling_mask[0] = static_cast<std::uint8_t>(15 & ~kWhiteQueenside);
    t.castling_mask[7] = static_cast<std::uint8_t>(15 & ~kWhiteKingside);
    t.castling_mask[4] = static_cast<std::uint8_t>(15 & ~(kWhiteKingside | kWhiteQueenside));
    t.castling_mask[56] = static_cast<std::uint8_t>(15 & ~kBlackQueenside);
    t.castling_mask[63] = static_cast<std::uint8_t>(15 & ~kBlackKingside);
    t.castling_mask[60] = static_cast<std::uint8_t>(15 & ~(kBlackKingside | kBlackQueenside));

    std::uint64_t seed = 0x536f756e64636865ULL;
    for (auto& per_piece : t.zobrist_piece)
        for (auto& z : per_piece)
            z = splitmix64(seed);
    for (auto& z : t.zobrist_castling)
        z = splitmix64(seed);
    for (auto& z : t.zobrist_ep_file)
        z = splitmix64(seed);
    t.zobrist_black = splitmix64(seed);
    return t;
}

constexpr Tables kTables = make_tables();

inline Bitboard slide(int dir, int sq, Bitboard occupied) noexcept {
    Bitboard ray = kTables.rays[dir][sq];
    const Bitboard blockers = ray & occupied;
    if (blockers) {
        const int b = kDirIncreasing[dir] ? std::countr_zero(blockers) : 63 - std::countl_zero(blockers);
        ray ^= kTables.rays[dir][b];
    }
    return ray;
}

inline Bitboard bishop_attacks(int sq, Bitboard occ) noexcept {
    return slide(4, sq, occ) | slide(5, sq, occ) | slide(6, sq, occ) | slide(7, sq, occ);
}
inline Bitboard rook_attacks(int sq, Bitboard occ) noexcept {
    return slide(0, sq, occ) | slide(1, sq, occ) | slide(2, sq, occ) | slide(3, sq, occ);
}

inline int pop_lsb(Bitboard& b) noexcept {
    const int s = std::countr_zero(b);
    b &= b - 1;
    return s;
}

constexpr std::array<PieceKind, 4> kPromotionOrder{PieceKind::Queen, PieceKind::Rook, PieceKind::Bishop,
                                                   PieceKind::Knight};

}  // namespace

namespace attacks {
Bitboard knight(Square sq) noexcept { return kTables.knight[sq.index()]; }
Bitboard king(Square sq) noexcept { return kTables.king[sq.index()]; }
Bitboard pawn(Color c, Square sq) noexcept { return kTables.pawn[color_index(c)][sq.index()]; }
Bitboard bishop(Square sq, Bitboard occupied) noexcept { return bishop_attacks(sq.index(), occupied); }
Bitboard rook(Square sq, Bitboard occupied) noexcept { return rook_attacks(sq.index(), occupied); }
}  // namespace attacks

bool MoveList::contains(const Move& m) const noexcept {
    return std::find(begin(), end(), m) != end();
}

Position::Position() noexcept { board_.fill(-1); }

Position Position::initial() {
    return from_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1");
}

void Position::set_piece(Square sq, std::optional<Piece> p) noexcept {
    const int s = sq.index();
    if (board_[s] >= 0) {
        const Piece old = Piece::from_index(board_[s]);
        bb_[old.index()] &= ~sq.bit();
        occ_[color_index(old.color)] &= ~sq.bit();
    }
    if (p) {
        bb_[p->index()] |= sq.bit();
        occ_[color_index(p->color)] |= sq.bit();
        board_[s] = static_cast<std::int8_t>(p->index());
    } else {
        board_[s] = -1;
    }
}

std::optional<Piece> Position::piece_at(Square sq) const noexcept {
    const int v = board_[sq.index()];
    if (v < 0)
        return std::nullopt;
    return Piece::from_index(v);
}

std::optional<Square> Position::en_passant() const noexcept {
    if (ep_ < 0)
        return std::nullopt;
    return Square(static_cast<int>(ep_));
}

std::optional<Square> Position::king_square(Color c) const noexcept {
    const Bitboard k = pieces(c, PieceKind::King);
    if (!k)
        return std::nullopt;
    return Square(std::countr_zero(k));
}

Position Position::from_fen(std::string_view fen) {
    std::istringstream in{std::string(fen)};
    std::string placement, side, castling = "-", ep = "-";
    int halfmove = 0, fullmove = 1;
    if (!(in >> placement >> side))
        throw MalformedState("FEN: missing placement or side-to-move field");
    in >> castling >> ep;
    if (in >> halfmove)
        in >> fullmove;

    Position p;
    int rank = 7, file = 0;
    for (char c : placement) {
        if (c == '/') {
            if (file != 8)
                throw MalformedState("FEN: rank " + std::to_string(rank + 1) + " does not have 8 files");
            --rank;
            file = 0;
            if (rank < 0)
                throw MalformedState("FEN: too many ranks");
        } else if (c >= '1' && c <= '8') {
            file += c - '0';
            if (file > 8)
                throw MalformedState("FEN: rank overflow");
        } else {
            const bool white = c >= 'A' && c <= 'Z';
            auto kind = kind_from_letter(white ? static_cast<char>(c - 'A' + 'a') : c);
            if (!kind || file > 7)
                throw MalformedState(std::string("FEN: unexpected placement character '") + c + "'");
            p.set_piece(Square(file, rank), Piece{white ? Color::White : Color::Black, *kind});
            ++file;
        }
    }
    if (rank != 0 || file != 8)
        throw MalformedState("FEN: placement does not describe 64 squares");

    if (side == "w")
        p.side_ = Color::White;
    else if (side == "b")
        p.side_ = Color::Black;
    else
        throw MalformedState("FEN: side to move must be 'w' or 'b'");

    if (castling != "-") {
        for (char c : castling) {
            switch (c) {
            case 'K': p.castling_ |= kWhiteKingside; break;
            case 'Q': p.castling_ |= kWhiteQueenside; break;
            case 'k': p.castling_ |= kBlackKingside; break;
            case 'q': p.castling_ |= kBlackQueenside; break;
            default: throw MalformedState(std::string("FEN: bad castling character '") + c + "'");
            }
        }
    }
    if (ep != "-") {
        auto sq = Square::parse(ep);
        if (!sq)
            throw MalformedState("FEN: bad en-passant square '" + ep + "'");
        p.set_en_passant(sq);
    }
    p.halfmove_ = halfmove;
    p.fullmove_ = fullmove;

    if (auto err = p.validate())
        throw MalformedState("FEN '" + std::string(fen) + "': " + *err);
    return p;
}

std::string Position::fen() const {
    std::string out;
    for (int rank = 7; rank >= 0; --rank) {
        int empty = 0;
        for (int file = 0; file < 8; ++file) {
            auto p = piece_at(Square(file, rank));
            if (!p) {
                ++empty;
                continue;
            }
            if (empty)
                out += static_cast<char>('0' + empty);
            empty = 0;
            out += p->fen_letter();
        }
        if (empty)
            out += static_cast<char>('0' + empty);
        if (rank)
            out += '/';
    }
    out += side_ == Color::White ? " w " : " b ";
    if (castling_ == 0) {
        out += '-';
    } else {
        if (castling_ & kWhiteKingside) out += 'K';
        if (castling_ & kWhiteQueenside) out += 'Q';
        if (castling_ & kBlackKingside) out += 'k';
        if (castling_ & kBlackQueenside) out += 'q';
    }
    out += ' ';
    out += ep_ >= 0 ? Square(static_cast<int>(ep_)).name() : "-";
    out += ' ' + std::to_string(halfmove_) + ' ' + std::to_string(fullmove_);
    return out;
}

std::optional<std::string> Position::validate() const {
    for (Color c : {Color::White, Color::Black}) {
        const int kings = std::popcount(pieces(c, PieceKind::King));
        if (kings != 1)
            return std::string(c == Color::White ? "white" : "black") + " has " + std::to_string(kings) +
                   " kings";
    }
    constexpr Bitboard kBackRanks = 0xff000000000000ffULL;
    if ((pieces(Color::White, PieceKind::Pawn) | pieces(Color::Black, PieceKind::Pawn)) & kBackRanks)
        return std::string("pawn on the first or eighth rank");
    if (ep_ >= 0) {
        const Square ep(static_cast<int>(ep_));
        const int expected_rank = side_ == Color::White ? 5 : 2;
        if (ep.rank() != expected_rank)
            return "en-passant square " + ep.name() + " is on the wrong rank";
        if (piece_at(ep))
            return "en-passant square " + ep.name() + " is occupied";
        const Square pushed(ep.file(), side_ == Color::White ? 4 : 3);
        if (piece_at(pushed) != Piece{opposite(side_), PieceKind::Pawn})
            return "en-passant square " + ep.name() + " has no pushed pawn in front of it";
    }
    struct Right {
        std::uint8_t bit;
        int king_sq;
        int rook_sq;
        Color color;
    };
    constexpr std::array<Right, 4> rights{{{kWhiteKingside, 4, 7, Color::White},
                                           {kWhiteQueenside, 4, 0, Color::White},
                                           {kBlackKingside, 60, 63, Color::Black},
                                           {kBlackQueenside, 60, 56, Color::Black}}};
    for (const auto& r : rights) {
        if (!(castling_ & r.bit))
            continue;
        if (piece_at(Square(r.king_sq)) != Piece{r.color, PieceKind::King} ||
            piece_at(Square(r.rook_sq)) != Piece{r.color, PieceKind::Rook})
            return std::string("castling right without king and rook on their home squares");
    }
    if (attacked(*king_square(opposite(side_)), side_))
        return std::string("side not to move is in check");
    if (halfmove_ < 0)
        return std::string("negative halfmove clock");
    if (fullmove_ < 1)
        return std::string("fullmove number below 1");
    return std::nullopt;
}

bool Position::attacked(Square sq, Color by) const noexcept {
    const int s = sq.index();
    const Bitboard occ = occupancy();
    if (kTables.pawn[color_index(opposite(by))][s] & pieces(by, PieceKind::Pawn))
        return true;
    if (kTables.knight[s] & pieces(by, PieceKind::Knight))
        return true;
    if (kTables.king[s] & pieces(by, PieceKind::King))
        return true;
    const Bitboard queens = pieces(by, PieceKind::Queen);
    if (bishop_attacks(s, occ) & (pieces(by, PieceKind::Bishop) | queens))
        return true;
    return (rook_attacks(s, occ) & (pieces(by, PieceKind::Rook) | queens)) != 0;
}

bool Position::in_check() const noexcept {
    auto k = king_square(side_);
    return k && attacked(*k, opposite(side_));
}

bool Position::is_capture(const Move& m) const noexcept {
    const int to = m.to.index();
    if (board_[to] >= 0)
        return Piece::from_index(board_[to]).color != side_;
    const int mover = board_[m.from.index()];
    return mover >= 0 && Piece::from_index(mover).kind == PieceKind::Pawn && to == ep_ &&
           m.from.file() != m.to.file();
}

bool Position::leaves_king_in_check(const Move& m) const noexcept {
    const Color us = side_;
    const Color them = opposite(us);
    const int from = m.from.index();
    const int to = m.to.index();
    const int mover = board_[from];
    if (mover < 0)
        return false;
    const PieceKind kind = Piece::from_index(mover).kind;

    Bitboard captured = 0;
    if (board_[to] >= 0)
        captured = Bitboard{1} << to;
    else if (kind == PieceKind::Pawn && to == ep_ && m.from.file() != m.to.file())
        captured = Bitboard{1} << (us == Color::White ? to - 8 : to + 8);

    Bitboard occ = occupancy();
    occ = (occ & ~(Bitboard{1} << from) & ~captured) | (Bitboard{1} << to);

    int king;
    if (kind == PieceKind::King) {
        king = to;
    } else {
        auto k = king_square(us);
        if (!k)
            return false;
        king = k->index();
    }
    const Bitboard keep = ~captured;
    if (kTables.pawn[color_index(us)][king] & pieces(them, PieceKind::Pawn) & keep)
        return true;
    if (kTables.knight[king] & pieces(them, PieceKind::Knight) & keep)
        return true;
    if (kTables.king[king] & pieces(them, PieceKind::King))
        return true;
    const Bitboard queens = pieces(them, PieceKind::Queen) & keep;
    if (bishop_attacks(king, occ) & ((pieces(them, PieceKind::Bishop) & keep) | queens))
        return true;
    return (rook_attacks(king, occ) & ((pieces(them, PieceKind::Rook) & keep) | queens)) != 0;
}

void Position::generate_pseudo_legal(MoveList& out) const noexcept {
    out.clear();
    const Color us = side_;
    const int ui = color_index(us);
    const Bitboard own = occ_[ui];
    const Bitboard enemy = occ_[ui ^ 1];
    const Bitboard occ = own | enemy;

    auto add_pawn_move = [&](int from, int to) {
        const int to_rank = to >> 3;
        if (to_rank == 7 || to_rank == 0) {
            for (PieceKind k : kPromotionOrder)
                out.push_back(Move{Square(from), Square(to), k});
        } else {
            out.push_back(Move{Square(from), Square(to), std::nullopt});
        }
    };

    const int forward = us == Color::White ? 8 : -8;
    const int start_rank = us == Color::White ? 1 : 6;
    for (Bitboard pawns = pieces(us, PieceKind::Pawn); pawns;) {
        const int from = pop_lsb(pawns);
        const int one = from + forward;
        if (one >= 0 && one < 64 && !(occ & (Bitboard{1} << one))) {
            add_pawn_move(from, one);
            const int two = one + forward;
            if ((from >> 3) == start_rank && !(occ & (Bitboard{1} << two)))
                out.push_back(Move{Square(from), Square(two), std::nullopt});
        }
        const Bitboard atk = kTables.pawn[ui][from];
        for (Bitboard caps = atk & enemy; caps;)
            add_pawn_move(from, pop_lsb(caps));
        if (ep_ >= 0 && (atk & (Bitboard{1} << ep_)))
            out.push_back(Move{Square(from), Square(static_cast<int>(ep_)), std::nullopt});
    }

    auto add_targets = [&](int from, Bitboard targets) {
        for (targets &= ~own; targets;)
            out.push_back(Move{Square(from), Square(pop_lsb(targets)), std::nullopt});
    };
    for (Bitboard b = pieces(us, PieceKind::Knight); b;) {
        const int from = pop_lsb(b);
        add_targets(from, kTables.knight[from]);
    }
    for (Bitboard b = pieces(us, PieceKind::Bishop); b;) {
        const int from = pop_lsb(b);
        add_targets(from, bishop_attacks(from, occ));
    }
    for (Bitboard b = pieces(us, PieceKind::Rook); b;) {
        const int from = pop_lsb(b);
        add_targets(from, rook_attacks(from, occ));
    }
    for (Bitboard b = pieces(us, PieceKind::Queen); b;) {
        const int from = pop_lsb(b);
        add_targets(from, bishop_attacks(from, occ) | rook_attacks(from, occ));
    }
    for (Bitboard b = pieces(us, PieceKind::King); b;) {
        const int from = pop_lsb(b);
        add_targets(from, kTables.king[from]);
    }

    // Castling: king and rook on home squares, empty path, king neither in
    // check nor passing through an attacked square. The destination square is
    // covered by the legality filter.
    const int home = us == Color::White ? 4 : 60;
    const Color them = opposite(us);
    if (board_[home] == Piece{us, PieceKind::King}.index()) {
        const std::uint8_t ks = us == Color::White ? kWhiteKingside : kBlackKingside;
        const std::uint8_t qs = us == Color::White ? kWhiteQueenside : kBlackQueenside;
        const std::int8_t rook = static_cast<std::int8_t>(Piece{us, PieceKind::Rook}.index());
        if ((castling_ & ks) && board_[home + 3] == rook &&
            !(occ & ((Bitboard{1} << (home + 1)) | (Bitboard{1} << (home + 2)))) &&
            !attacked(Square(home), them) && !attacked(Square(home + 1), them))
            out.push_back(Move{Square(home), Square(home + 2), std::nullopt});
        if ((castling_ & qs) && board_[home - 4] == rook &&
            !(occ & ((Bitboard{1} << (home - 1)) | (Bitboard{1} << (home - 2)) | (Bitboard{1} << (home - 3)))) &&
            !attacked(Square(home), them) && !attacked(Square(home - 1), them))
            out.push_back(Move{Square(home), Square(home - 2), std::nullopt});
    }
}

void Position::generate_legal(MoveList& out) const noexcept {
    MoveList pseudo;
    generate_pseudo_legal(pseudo);
    out.clear();
    for (const Move& m : pseudo)
        if (!leaves_king_in_check(m))
            out.push_back(m);
}

Position Position::after(const Move& m) const noexcept {
    Position p = *this;
    const int from = m.from.index();
    const int to = m.to.index();
    const Piece piece = Piece::from_index(board_[from]);
    const Color us = side_;

    bool capture = board_[to] >= 0;
    if (piece.kind == PieceKind::Pawn && to == ep_ && m.from.file() != m.to.file()) {
        p.set_piece(Square(us == Color::White ? to - 8 : to + 8), std::nullopt);
        capture = true;
    }
    p.set_piece(m.from, std::nullopt);
    p.set_piece(m.to, m.promotion ? Piece{us, *m.promotion} : piece);

    if (piece.kind == PieceKind::King && (to - from == 2 || from - to == 2)) {
        const bool kingside = to > from;
        const int rook_from = kingside ? from + 3 : from - 4;
        const int rook_to = kingside ? from + 1 : from - 1;
        p.set_piece(Square(rook_from), std::nullopt);
        p.set_piece(Square(rook_to), Piece{us, PieceKind::Rook});
    }

    p.castling_ &= kTables.castling_mask[from] & kTables.castling_mask[to];
    p.ep_ = -1;
    if (piece.kind == PieceKind::Pawn && (to - from == 16 || from - to == 16))
        p.ep_ = static_cast<std::int8_t>((from + to) / 2);
    p.halfmove_ = (piece.kind == PieceKind::Pawn || capture) ? 0 : halfmove_ + 1;
    if (us == Color::Black)
        ++p.fullmove_;
    p.side_ = opposite(us);
    return p;
}

bool Position::ep_capture_available() const noexcept {
    if (ep_ < 0)
        return false;
    const Color us = side_;
    Bitboard pawns = kTables.pawn[color_index(opposite(us))][ep_] & pieces(us, PieceKind::Pawn);
    while (pawns) {
        const int from = pop_lsb(pawns);
        if (!leaves_king_in_check(Move{Square(from), Square(static_cast<int>(ep_)), std::nullopt}))
            return true;
    }
    return false;
}

std::uint64_t Position::repetition_key() const noexcept {
    std::uint64_t key = 0;
    for (int p = 0; p < kPieceCount; ++p)
        for (Bitboard b = bb_[p]; b;)
            key ^= kTables.zobrist_piece[p][pop_lsb(b)];
    if (side_ == Color::Black)
        key ^= kTables.zobrist_black;
    key ^= kTables.zobrist_castling[castling_];
    if (ep_capture_available())
        key ^= kTables.zobrist_ep_file[ep_ & 7];
    return key;
}

std::uint64_t perft(const Position& pos, int depth) noexcept {
    if (depth <= 0)
        return 1;
    MoveList moves;
    pos.generate_legal(moves);
    if (depth == 1)
        return moves.size();
    std::uint64_t nodes = 0;
    for (const Move& m : moves)
        nodes += perft(pos.after(m), depth - 1);
    return nodes;
}

}  // namespace soundcheck
