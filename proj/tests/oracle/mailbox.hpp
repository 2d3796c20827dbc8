#pragma once

// Naive 8x8 mailbox move generator used only as a test oracle. It shares no
// code with the library (own FEN parser, own attack scan, own make-move).

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

struct MailboxBoard {
    // '.' for empty, FEN letters otherwise; index = rank * 8 + file.
    std::array<char, 64> sq{};
    bool white_to_move = true;
    bool castle_wk = false, castle_wq = false, castle_bk = false, castle_bq = false;
    int ep = -1;

    static MailboxBoard from_fen(const std::string& fen);

    [[nodiscard]] bool attacked(int square, bool by_white) const;
    [[nodiscard]] bool in_check(bool white) const;
    [[nodiscard]] std::vector<std::string> legal_moves() const;
    [[nodiscard]] MailboxBoard play(const std::string& uci) const;
    [[nodiscard]] std::uint64_t perft(int depth) const;
    /// Placement-only comparison key, rank 8 first like FEN.
    [[nodiscard]] std::string placement() const;
};

}  // namespace oracle
