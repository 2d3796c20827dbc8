#pragma once

// Error-type oracle over the mailbox board. Outputs are given as token names
// ("e2 e4", "e8 q", "EOS", "PAD").

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracle/mailbox.hpp"

namespace oracle {

inline bool is_square_name(const std::string& s) {
    return s.size() == 2 && s[0] >= 'a' && s[0] <= 'h' && s[1] >= '1' && s[1] <= '8';
}

inline int sq_index(const std::string& s) { return (s[1] - '1') * 8 + (s[0] - 'a'); }

// 1..7, or 0 when the output is a legal move.
inline int expected_error_type(const std::string& fen, const std::string& output) {
    std::istringstream in(output);
    std::vector<std::string> toks;
    for (std::string t; in >> t;)
        toks.push_back(t);
    if (toks.empty())
        throw std::invalid_argument("empty output");
    if (toks[0] == "EOS")
        return 7;
    if (!is_square_name(toks[0]) || toks.size() < 2 || !is_square_name(toks[1]) || toks[0] == toks[1])
        return 6;

    const MailboxBoard b = MailboxBoard::from_fen(fen);
    std::string uci = toks[0] + toks[1];
    if (toks.size() > 2 && toks[2].size() == 1 && std::string("qrbn").find(toks[2][0]) != std::string::npos)
        uci += toks[2];
    const auto legal = b.legal_moves();
    if (std::find(legal.begin(), legal.end(), uci) != legal.end())
        return 0;

    const int from = sq_index(toks[0]), to = sq_index(toks[1]);
    const char piece = b.sq[from];
    if (piece == '.')
        return 1;
    const bool white_piece = piece >= 'A' && piece <= 'Z';
    if (white_piece != b.white_to_move)
        return 2;
    if (std::none_of(legal.begin(), legal.end(), [&](const std::string& m) { return m.substr(0, 2) == toks[0]; }))
        return 3;

    const int df = std::abs(to % 8 - from % 8), dr = to / 8 - from / 8, adr = std::abs(dr);
    bool shape = false;
    switch (piece | 0x20) {
    case 'n': shape = (df == 1 && adr == 2) || (df == 2 && adr == 1); break;
    case 'b': shape = df == adr; break;
    case 'r': shape = df == 0 || adr == 0; break;
    case 'q': shape = df == adr || df == 0 || adr == 0; break;
    case 'k': {
        const int home = white_piece ? 0 : 7;
        const bool castle = from == home * 8 + 4 && to / 8 == home && (to % 8 == 2 || to % 8 == 6);
        shape = (df <= 1 && adr <= 1) || castle;
        break;
    }
    case 'p': {
        const int forward = white_piece ? dr : -dr;
        shape = forward > 0 && (df == 0 || df == forward);
        break;
    }
    default: break;
    }
    return shape ? 5 : 4;
}

}  // namespace oracle
