#include "oracle/mailbox.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace oracle {

namespace {
bool on_board(int f, int r) { return f >= 0 && f < 8 && r >= 0 && r < 8; }
bool is_white(char c) { return c != '.' && std::isupper(static_cast<unsigned char>(c)); }
bool is_black(char c) { return c != '.' && std::islower(static_cast<unsigned char>(c)); }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
std::string name(int s) { return {static_cast<char>('a' + s % 8), static_cast<char>('1' + s / 8)}; }
int parse_sq(const std::string& s, std::size_t at) { return (s[at + 1] - '1') * 8 + (s[at] - 'a'); }

const int kKnight[8][2] = {{1, 2}, {2, 1}, {2, -1}, {1, -2}, {-1, -2}, {-2, -1}, {-2, 1}, {-1, 2}};
const int kKing[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
const int kDiag[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
const int kStraight[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
}  // namespace

MailboxBoard MailboxBoard::from_fen(const std::string& fen) {
    MailboxBoard b;
    b.sq.fill('.');
    std::istringstream in(fen);
    std::string placement, side, castle = "-", ep = "-";
    in >> placement >> side >> castle >> ep;
    int r = 7, f = 0;
    for (char c : placement) {
        if (c == '/') {
            --r;
            f = 0;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            f += c - '0';
        } else {
            b.sq[r * 8 + f] = c;
            ++f;
        }
    }
    b.white_to_move = side == "w";
    for (char c : castle) {
        if (c == 'K') b.castle_wk = true;
        if (c == 'Q') b.castle_wq = true;
        if (c == 'k') b.castle_bk = true;
        if (c == 'q') b.castle_bq = true;
    }
    if (ep != "-")
        b.ep = parse_sq(ep, 0);
    return b;
}

bool MailboxBoard::attacked(int square, bool by_white) const {
    const int f = square % 8, r = square / 8;
    auto owned = [&](char c) { return by_white ? is_white(c) : is_black(c); };
    // Pawns attack diagonally forward, so look one rank "behind" the square.
    const int pr = by_white ? r - 1 : r + 1;
    for (int df : {-1, 1})
        if (on_board(f + df, pr)) {
            char c = sq[pr * 8 + f + df];
            if (owned(c) && lower(c) == 'p')
                return true;
        }
    for (auto& d : kKnight)
        if (on_board(f + d[0], r + d[1])) {
            char c = sq[(r + d[1]) * 8 + f + d[0]];
            if (owned(c) && lower(c) == 'n')
                return true;
        }
    for (auto& d : kKing)
        if (on_board(f + d[0], r + d[1])) {
            char c = sq[(r + d[1]) * 8 + f + d[0]];
            if (owned(c) && lower(c) == 'k')
                return true;
        }
    auto ray = [&](const int (*dirs)[2], const char* kinds) {
        for (int i = 0; i < 4; ++i) {
            int ff = f + dirs[i][0], rr = r + dirs[i][1];
            while (on_board(ff, rr)) {
                char c = sq[rr * 8 + ff];
                if (c != '.') {
                    if (owned(c) && (lower(c) == kinds[0] || lower(c) == kinds[1]))
                        return true;
                    break;
                }
                ff += dirs[i][0];
                rr += dirs[i][1];
            }
        }
        return false;
    };
    return ray(kDiag, "bq") || ray(kStraight, "rq");
}

bool MailboxBoard::in_check(bool white) const {
    const char k = white ? 'K' : 'k';
    for (int s = 0; s < 64; ++s)
        if (sq[s] == k)
            return attacked(s, !white);
    return false;
}

MailboxBoard MailboxBoard::play(const std::string& uci) const {
    MailboxBoard b = *this;
    const int from = parse_sq(uci, 0), to = parse_sq(uci, 2);
    const char piece = sq[from];
    const char kind = lower(piece);
    if (kind == 'p' && to == ep && from % 8 != to % 8)
        b.sq[white_to_move ? to - 8 : to + 8] = '.';
    b.sq[to] = piece;
    b.sq[from] = '.';
    if (uci.size() == 5)
        b.sq[to] = white_to_move ? static_cast<char>(std::toupper(static_cast<unsigned char>(uci[4]))) : uci[4];
    if (kind == 'k' && std::abs(to - from) == 2) {
        if (to > from) {
            b.sq[from + 1] = b.sq[from + 3];
            b.sq[from + 3] = '.';
        } else {
            b.sq[from - 1] = b.sq[from - 4];
            b.sq[from - 4] = '.';
        }
    }
    auto touch = [&](int s) {
        if (s == 4) b.castle_wk = b.castle_wq = false;
        if (s == 60) b.castle_bk = b.castle_bq = false;
        if (s == 0) b.castle_wq = false;
        if (s == 7) b.castle_wk = false;
        if (s == 56) b.castle_bq = false;
        if (s == 63) b.castle_bk = false;
    };
    touch(from);
    touch(to);
    b.ep = (kind == 'p' && std::abs(to - from) == 16) ? (from + to) / 2 : -1;
    b.white_to_move = !white_to_move;
    return b;
}

std::vector<std::string> MailboxBoard::legal_moves() const {
    std::vector<std::string> pseudo;
    const bool w = white_to_move;
    auto own = [&](char c) { return w ? is_white(c) : is_black(c); };
    auto enemy = [&](char c) { return w ? is_black(c) : is_white(c); };
    for (int s = 0; s < 64; ++s) {
        const char c = sq[s];
        if (!own(c))
            continue;
        const int f = s % 8, r = s / 8;
        const char k = lower(c);
        auto add = [&](int t) { pseudo.push_back(name(s) + name(t)); };
        if (k == 'p') {
            const int dir = w ? 1 : -1;
            const int last = w ? 7 : 0;
            auto add_pawn = [&](int t) {
                if (t / 8 == last) {
                    for (const char* p : {"q", "r", "b", "n"})
                        pseudo.push_back(name(s) + name(t) + p);
                } else {
                    add(t);
                }
            };
            if (on_board(f, r + dir) && sq[(r + dir) * 8 + f] == '.') {
                add_pawn((r + dir) * 8 + f);
                const int start = w ? 1 : 6;
                if (r == start && sq[(r + 2 * dir) * 8 + f] == '.')
                    add((r + 2 * dir) * 8 + f);
            }
            for (int df : {-1, 1}) {
                if (!on_board(f + df, r + dir))
                    continue;
                const int t = (r + dir) * 8 + f + df;
                if (enemy(sq[t]))
                    add_pawn(t);
                else if (t == ep)
                    add(t);
            }
        } else if (k == 'n' || k == 'k') {
            for (auto& d : (k == 'n' ? kKnight : kKing))
                if (on_board(f + d[0], r + d[1])) {
                    const int t = (r + d[1]) * 8 + f + d[0];
                    if (!own(sq[t]))
                        add(t);
                }
            if (k == 'k') {
                const int home = w ? 4 : 60;
                const bool ks = w ? castle_wk : castle_bk;
                const bool qs = w ? castle_wq : castle_bq;
                if (s == home && ks && sq[home + 1] == '.' && sq[home + 2] == '.' && !attacked(home, !w) &&
                    !attacked(home + 1, !w) && !attacked(home + 2, !w))
                    add(home + 2);
                if (s == home && qs && sq[home - 1] == '.' && sq[home - 2] == '.' && sq[home - 3] == '.' &&
                    !attacked(home, !w) && !attacked(home - 1, !w) && !attacked(home - 2, !w))
                    add(home - 2);
            }
        } else {
            std::vector<const int*> dirs;
            if (k == 'b' || k == 'q')
                for (auto& d : kDiag) dirs.push_back(d);
            if (k == 'r' || k == 'q')
                for (auto& d : kStraight) dirs.push_back(d);
            for (const int* d : dirs) {
                int ff = f + d[0], rr = r + d[1];
                while (on_board(ff, rr)) {
                    const int t = rr * 8 + ff;
                    if (own(sq[t]))
                        break;
                    add(t);
                    if (enemy(sq[t]))
                        break;
                    ff += d[0];
                    rr += d[1];
                }
            }
        }
    }
    std::vector<std::string> legal;
    for (const auto& m : pseudo)
        if (!play(m).in_check(w))
            legal.push_back(m);
    return legal;
}

std::uint64_t MailboxBoard::perft(int depth) const {
    if (depth == 0)
        return 1;
    auto moves = legal_moves();
    if (depth == 1)
        return moves.size();
    std::uint64_t n = 0;
    for (const auto& m : moves)
        n += play(m).perft(depth - 1);
    return n;
}

std::string MailboxBoard::placement() const { return std::string(sq.begin(), sq.end()); }

}  // namespace oracle
