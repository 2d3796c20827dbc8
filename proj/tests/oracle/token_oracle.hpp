#pragma once

// Game-level oracle over the mailbox board: forced game ends and the legal
// next-token set, computed from UCI strings without touching the library.

#include <set>
#include <string>
#include <vector>

#include "oracle/mailbox.hpp"

namespace oracle {

class OracleGame {
public:
    OracleGame();
    explicit OracleGame(const std::string& fen);

    [[nodiscard]] const MailboxBoard& board() const { return board_; }
    [[nodiscard]] std::vector<std::string> legal_moves() const { return board_.legal_moves(); }
    [[nodiscard]] bool terminal() const;
    [[nodiscard]] bool checkmate() const;
    [[nodiscard]] int plies() const { return plies_; }

    void play(const std::string& uci);

    // Legal ids for the next token, given the tokens of the move begun so far
    // ("" at a move boundary, "e2" after a from-square, "e7e8" before a
    // promotion letter).
    [[nodiscard]] std::set<int> legal_tokens(const std::string& partial) const;

    static int square_id(const std::string& name);  // "a1" -> 3
    static int promo_id(char letter);               // 'q' -> 67

private:
    [[nodiscard]] std::string key() const;

    MailboxBoard board_;
    std::vector<std::string> keys_;
    int halfmove_ = 0;
    int plies_ = 0;
};

}  // namespace oracle
