#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracle/token_oracle.hpp"
#include "soundcheck/worldmodel.hpp"

using namespace soundcheck;

namespace {

std::set<int> ids(const TokenSet& s) {
    std::set<int> out;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.test(i))
            out.insert(static_cast<int>(i));
    return out;
}

GameCursor play(std::initializer_list<const char*> moves) {
    GameCursor c;
    for (const char* m : moves)
        c = c.after_move(Move::parse(m));
    return c;
}

int sq(const char* name) { return oracle::OracleGame::square_id(name); }

}  // namespace

TEST_CASE("initial cursor: 20 continuations, 10 from-tokens") {
    const GameCursor c;
    CHECK(c.tokens() == TokenSequence{kBos});
    const auto cont = continuations(c);
    CHECK(cont.moves.size() == 20);
    CHECK_FALSE(cont.eos_legal);
    CHECK(cont.moves.front() == Move::parse("b1a3"));
    for (std::size_t i = 1; i < cont.moves.size(); ++i)
        CHECK(tie_rank_less(cont.moves[i - 1], cont.moves[i]));

    const std::set<int> expected{sq("a2"), sq("b2"), sq("c2"), sq("d2"), sq("e2"),
                                 sq("f2"), sq("g2"), sq("h2"), sq("b1"), sq("g1")};
    CHECK(ids(legal_token_set(c)) == expected);

    const auto after_e2 = c.advanced(static_cast<TokenId>(sq("e2")));
    CHECK(std::holds_alternative<ExpectTo>(after_e2.phase()));
    CHECK(ids(legal_token_set(after_e2)) == std::set<int>{sq("e3"), sq("e4")});
    CHECK_THROWS_AS((void)continuations(after_e2), MisalignedCursor);
}

TEST_CASE("terminal cursors allow only EOS") {
    SUBCASE("fool's mate") {
        const GameCursor c = play({"f2f3", "e7e5", "g2g4", "d8h4"});
        CHECK(c.terminal() == TerminalKind::Checkmate);
        const auto cont = continuations(c);
        CHECK(cont.moves.empty());
        CHECK(cont.eos_legal);
        CHECK(ids(legal_token_set(c)) == std::set<int>{kEos});
        const auto done = c.advanced(kEos);
        CHECK(done.finished());
        CHECK(done.legal_tokens().none());
        CHECK(*GameCursor(done).try_advance(15) == TokenFault::AfterEos);
    }
    SUBCASE("stalemate fixture") {
        const auto c = GameCursor::at_position(BoardState::from_fen("k7/2Q5/1K6/8/8/8/8/8 b - - 0 1"));
        const auto cont = continuations(c);
        CHECK(cont.moves.empty());
        CHECK(cont.eos_legal);
    }
    SUBCASE("threefold repetition is a forced end") {
        GameCursor c = play({"g1f3", "g8f6", "f3g1", "f6g8", "g1f3", "g8f6", "f3g1"});
        CHECK(c.terminal() == TerminalKind::NotTerminal);
        c = c.after_move(Move::parse("f6g8"));
        CHECK(c.terminal() == TerminalKind::ThreefoldRepetition);
        CHECK(ids(c.legal_tokens()) == std::set<int>{kEos});
        CHECK(c.board_moves().size() == 20);
        CHECK(continuations(c).moves.empty());
        CHECK(*GameCursor(c).try_advance(static_cast<TokenId>(sq("e2"))) == TokenFault::IllegalToken);
    }
    SUBCASE("fifty-move rule is a forced end") {
        const auto c = GameCursor::at_position(BoardState::from_fen("4k3/8/8/8/8/8/8/R3K3 w - - 100 80"));
        CHECK(c.terminal() == TerminalKind::FiftyMoveRule);
        CHECK(ids(c.legal_tokens()) == std::set<int>{kEos});
    }
}

TEST_CASE("pd_targets are uniform over the legal token set") {
    const GameCursor c;
    const auto t = pd_targets(c);
    double sum = 0;
    for (double p : t.probs)
        sum += p;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(t.probs[static_cast<std::size_t>(sq("e2"))] == doctest::Approx(0.1));
    CHECK(t.probs[static_cast<std::size_t>(sq("e4"))] == 0.0);

    const auto e2 = pd_targets(c.advanced(static_cast<TokenId>(sq("e2"))));
    CHECK(e2.probs[static_cast<std::size_t>(sq("e3"))] == doctest::Approx(0.5));
    CHECK(e2.probs[static_cast<std::size_t>(sq("e4"))] == doctest::Approx(0.5));

    auto promo = GameCursor::at_position(BoardState::from_fen("8/P6k/8/8/8/8/8/K7 w - - 0 1"));
    promo = promo.advanced(static_cast<TokenId>(sq("a7"))).advanced(static_cast<TokenId>(sq("a8")));
    CHECK(std::holds_alternative<ExpectPromotion>(promo.phase()));
    const auto pt = pd_targets(promo);
    for (TokenId id : {kPromoQueen, kPromoRook, kPromoBishop, kPromoKnight})
        CHECK(pt.probs[id] == doctest::Approx(0.25));
    CHECK(*GameCursor(promo).try_advance(kEos) == TokenFault::IllegalToken);
    CHECK(*GameCursor(promo).try_advance(kPad) == TokenFault::Structural);
    const auto queened = promo.advanced(kPromoKnight);
    CHECK(queened.board().piece_at(*Square::parse("a8")) == Piece{Color::White, PieceKind::Knight});
    CHECK(queened.plies() == 1);
}

TEST_CASE("validate_sequence") {
    const std::vector<Move> ok{Move::parse("e2e4"), Move::parse("e7e5")};
    CHECK(validate_sequence(encode_game(ok, false)).valid);

    const std::vector<Move> bad{Move::parse("e2e5")};
    const auto v = validate_sequence(encode_game(bad, false));
    CHECK_FALSE(v.valid);
    CHECK(*v.fault_index == 2);
    CHECK(*v.fault == TokenFault::IllegalToken);

    const auto eos = validate_sequence(TokenSequence{1, 2});
    CHECK_FALSE(eos.valid);
    CHECK(*eos.fault_index == 1);
    CHECK(*eos.fault == TokenFault::EosNotTerminal);

    CHECK(*validate_sequence(TokenSequence{}).fault == TokenFault::MissingBos);
    CHECK(*validate_sequence(TokenSequence{15, 31}).fault == TokenFault::MissingBos);
    CHECK(*validate_sequence(TokenSequence{1, 1}).fault == TokenFault::Structural);
    CHECK(*validate_sequence(TokenSequence{1, 15, 67}).fault == TokenFault::Structural);
    // Stopping mid-move is still a valid prefix.
    CHECK(validate_sequence(TokenSequence{1, 15}).valid);
    CHECK_THROWS_AS((void)GameCursor::from_tokens(TokenSequence{1, 15, 32}), InvalidToken);
}

TEST_CASE("cursor faults leave the cursor unchanged") {
    GameCursor c;
    const GameCursor before = c;
    CHECK(*c.try_advance(static_cast<TokenId>(sq("e4"))) == TokenFault::IllegalToken);
    CHECK(*c.try_advance(kPromoQueen) == TokenFault::Structural);
    CHECK(*c.try_advance(kEos) == TokenFault::EosNotTerminal);
    CHECK(c.tokens() == before.tokens());
    CHECK(c.at_boundary());
}

TEST_CASE("cursor tracks captures and last move") {
    const GameCursor c = play({"e2e4", "d7d5", "e4d5"});
    CHECK(c.plies() == 3);
    CHECK(c.last_move_was_capture());
    CHECK(*c.last_move() == Move::parse("e4d5"));
    const GameCursor quiet = c.after_move(Move::parse("g8f6"));
    CHECK_FALSE(quiet.last_move_was_capture());
    CHECK(GameCursor::from_tokens(quiet.tokens()).board() == quiet.board());
}

TEST_CASE("legal token sets agree with the token oracle along random games") {
    std::mt19937_64 rng(20261017);
    int checked = 0;
    for (int game = 0; game < 60; ++game) {
        GameCursor c;
        oracle::OracleGame o;
        for (int ply = 0; ply < 400; ++ply) {
            REQUIRE(ids(c.legal_tokens()) == o.legal_tokens(""));
            ++checked;
            if (o.terminal()) {
                CHECK(c.terminal() != TerminalKind::NotTerminal);
                c = c.advanced(kEos);
                CHECK(c.finished());
                break;
            }
            const auto moves = o.legal_moves();
            const std::string m = moves[rng() % moves.size()];
            GameCursor mid = c.advanced(static_cast<TokenId>(oracle::OracleGame::square_id(m.substr(0, 2))));
            REQUIRE(ids(mid.legal_tokens()) == o.legal_tokens(m.substr(0, 2)));
            mid = mid.advanced(static_cast<TokenId>(oracle::OracleGame::square_id(m.substr(2, 2))));
            if (m.size() == 5) {
                REQUIRE(ids(mid.legal_tokens()) == o.legal_tokens(m.substr(0, 4)));
                mid = mid.advanced(static_cast<TokenId>(oracle::OracleGame::promo_id(m[4])));
            }
            CHECK(mid.at_boundary());
            c = mid;
            o.play(m);
            checked += 2;
        }
    }
    CHECK(checked > 10000);
}

TEST_CASE("export_pd_corpus writes one row per non-BOS token") {
    std::stringstream corpus_text;
    corpus_text << "e2e4\n"
                << "e2e4 e7e5 e1e3\n"
                << "f2f3 e7e5 g2g4 d8h4 #complete\n"
                << "not a game\n";
    const auto path = std::filesystem::temp_directory_path() / "sc_pd_corpus.txt";
    std::ofstream(path) << corpus_text.str();
    const Corpus corpus = read_corpus(path);

    std::ostringstream out;
    const auto summary = export_pd_corpus(corpus, out);
    CHECK(summary.games == 2);
    CHECK(summary.rows == 2 + 9);
    REQUIRE(summary.rejected.size() == 2);
    CHECK(summary.rejected[0].line_index == 1);
    CHECK(summary.rejected[1].line_index == 3);

    std::istringstream rows(out.str());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(rows, line))
        lines.push_back(line);
    REQUIRE(lines.size() == 11);
    CHECK(lines[0] == "0\t1\t10\t4,9,11,12,13,14,15,16,17,18");
    CHECK(lines[1] == "0\t2\t2\t23,31");
    CHECK(lines.back() == "2\t9\t1\t2");

    const auto out_path = std::filesystem::temp_directory_path() / "sc_pd_rows.tsv";
    const auto file_summary = export_pd_corpus(path, out_path);
    CHECK(file_summary.rows == 11);
    std::filesystem::remove(path);
    std::filesystem::remove(out_path);
}
