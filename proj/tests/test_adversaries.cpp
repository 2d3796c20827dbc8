#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "oracle/token_oracle.hpp"
#include "soundcheck/adversaries.hpp"
#include "soundcheck/reference_models.hpp"
#include "support/test_models.hpp"

using namespace soundcheck;
using testing_models::PerturbedModel;

namespace {

GameCursor cursor_of(std::initializer_list<const char*> moves) {
    std::vector<Move> ms;
    for (const char* m : moves)
        ms.push_back(Move::parse(m));
    return GameCursor::from_moves(ms);
}

// Random game prefix with White to move, never terminal.
GameCursor random_white_prefix(std::mt19937_64& rng, int max_plies) {
    for (;;) {
        GameCursor c;
        const int target = 2 * static_cast<int>(rng() % (max_plies / 2 + 1));
        bool ok = true;
        for (int i = 0; i < target; ++i) {
            const auto cont = continuations(c);
            if (cont.moves.empty()) {
                ok = false;
                break;
            }
            c = c.after_move(cont.moves[rng() % cont.moves.size()]);
        }
        if (ok && c.terminal() == TerminalKind::NotTerminal)
            return c;
    }
}

// Test-side distribution cache keyed on the full sequence.
struct DistCache {
    Model& model;
    std::map<TokenSequence, ModelDistribution> memo;
    const ModelDistribution& at(const TokenSequence& s) {
        auto it = memo.find(s);
        if (it == memo.end())
            it = memo.emplace(s, model.dist(s)).first;
        return it->second;
    }
};

std::set<int> top_k_ids(const ModelDistribution& d, int k) {
    std::vector<int> ids(kVocabSize);
    for (int i = 0; i < static_cast<int>(kVocabSize); ++i)
        ids[i] = i;
    std::sort(ids.begin(), ids.end(), [&](int a, int b) { return d.probs[a] != d.probs[b] ? d.probs[a] > d.probs[b] : a < b; });
    return {ids.begin(), ids.begin() + std::min<int>(k, kVocabSize)};
}

// Brute-force invalid-action scores after `uci` is played from `prefix`,
// with legality taken from the mailbox oracle. Returns {max, top-k sum}.
std::pair<double, double> brute_invalid(Model& model, const std::vector<std::string>& prefix, const std::string& uci,
                                        int k) {
    oracle::OracleGame g;
    for (const auto& m : prefix)
        g.play(m);
    g.play(uci);
    if (g.terminal())
        return {0.0, 0.0};
    std::set<std::string> legal;
    for (const auto& m : g.legal_moves())
        legal.insert(m);

    TokenSequence base{kBos};
    for (const auto& m : prefix) {
        base.push_back(static_cast<TokenId>(oracle::OracleGame::square_id(m.substr(0, 2))));
        base.push_back(static_cast<TokenId>(oracle::OracleGame::square_id(m.substr(2, 2))));
        if (m.size() == 5)
            base.push_back(static_cast<TokenId>(oracle::OracleGame::promo_id(m[4])));
    }
    base.push_back(static_cast<TokenId>(oracle::OracleGame::square_id(uci.substr(0, 2))));
    base.push_back(static_cast<TokenId>(oracle::OracleGame::square_id(uci.substr(2, 2))));
    if (uci.size() == 5)
        base.push_back(static_cast<TokenId>(oracle::OracleGame::promo_id(uci[4])));

    DistCache cache{model, {}};
    const auto& d1 = cache.at(base);
    const auto k1 = top_k_ids(d1, k);
    double best = d1.probs[kEos];
    double sum = k1.count(kEos) ? d1.probs[kEos] : 0.0;
    const char* files = "abcdefgh";
    const std::string promos = "qrbn";
    for (int f = 0; f < 64; ++f) {
        const std::string fs = std::string(1, files[f % 8]) + std::to_string(f / 8 + 1);
        const int ft = 3 + f;
        if (d1.probs[ft] == 0.0)
            continue;
        TokenSequence s2 = base;
        s2.push_back(static_cast<TokenId>(ft));
        const auto& d2 = cache.at(s2);
        const auto k2 = top_k_ids(d2, k);
        for (int t = 0; t < 64; ++t) {
            if (t == f)
                continue;
            const std::string ts = std::string(1, files[t % 8]) + std::to_string(t / 8 + 1);
            const int tt = 3 + t;
            if (d2.probs[tt] == 0.0)
                continue;
            TokenSequence s3 = s2;
            s3.push_back(static_cast<TokenId>(tt));
            const auto& d3 = cache.at(s3);
            const auto k3 = top_k_ids(d3, k);
            const double head = d1.probs[ft] * d2.probs[tt];
            const bool in_k = k1.count(ft) && k2.count(tt);
            if (!legal.count(fs + ts)) {
                double pm = 0, pm_k = 0;
                for (int q = 67; q <= 70; ++q) {
                    pm += d3.probs[q];
                    if (k3.count(q))
                        pm_k += d3.probs[q];
                }
                best = std::max(best, head * std::max(0.0, 1.0 - pm));
                if (in_k)
                    sum += head * std::max(0.0, 1.0 - pm_k);
            }
            for (int q = 0; q < 4; ++q) {
                if (legal.count(fs + ts + promos[q]))
                    continue;
                best = std::max(best, head * d3.probs[67 + q]);
                if (in_k && k3.count(67 + q))
                    sum += head * d3.probs[67 + q];
            }
        }
    }
    return {best, sum};
}

std::vector<std::string> uci_moves(const GameCursor& c) {
    std::vector<std::string> out;
    for (const auto& item : decode_move_stream(c.tokens()))
        if (const Move* m = std::get_if<Move>(&item))
            out.push_back(m->uci());
    return out;
}

}  // namespace

TEST_CASE("adversary names") {
    for (const char* name : {"rm", "smm", "imo", "bso", "ad", "adaptive-imo:3", "self-play"})
        CHECK(AdversarySpec::parse(name).str() == name);
    CHECK(AdversarySpec::parse("adaptive-imo") == AdversarySpec{AdversaryKind::AdaptiveIMO, 4});
    CHECK_THROWS_AS((void)AdversarySpec::parse("adaptive-imo:0"), std::invalid_argument);
    CHECK_THROWS_AS((void)AdversarySpec::parse("adaptive-imo:x"), std::invalid_argument);
    CHECK_THROWS_AS((void)AdversarySpec::parse("greedy"), std::invalid_argument);
}

TEST_CASE("random mover is legal and uniform") {
    PerfectLegalModel model;
    std::mt19937_64 rng(5);
    const AdversarySpec rm{AdversaryKind::RM};

    std::map<std::string, int> counts;
    const GameCursor start;
    for (int i = 0; i < 20000; ++i)
        ++counts[select_adversary_move(rm, model, start, rng).uci()];
    CHECK(counts.size() == 20);
    for (const auto& [uci, n] : counts)
        CHECK(std::abs(n - 1000) < 150);

    std::mt19937_64 games(9);
    for (int i = 0; i < 50; ++i) {
        const GameCursor c = random_white_prefix(games, 60);
        oracle::OracleGame g;
        for (const auto& m : uci_moves(c))
            g.play(m);
        const auto legal = g.legal_moves();
        const Move m = select_adversary_move(rm, model, c, rng);
        CHECK(std::find(legal.begin(), legal.end(), m.uci()) != legal.end());
    }
}

TEST_CASE("uniform index covers the range without bias") {
    std::mt19937_64 rng(1);
    std::array<int, 7> hits{};
    for (int i = 0; i < 70000; ++i)
        ++hits[uniform_index(rng, 7)];
    for (int h : hits)
        CHECK(std::abs(h - 10000) < 500);
}

TEST_CASE("argmax keeps the first of equal scores and ignores positive scaling") {
    std::vector<CandidateScore> s{{Move::parse("a2a3"), 0.2}, {Move::parse("b2b3"), 0.5}, {Move::parse("c2c3"), 0.5}};
    CHECK(argmax_candidate(s) == 1);
    for (auto& c : s)
        c.score *= 7.5;
    CHECK(argmax_candidate(s) == 1);
}

TEST_CASE("SMM and AD against the perfect model tie everywhere") {
    PerfectLegalModel model;
    std::mt19937_64 rng(0);
    const GameCursor start;
    const auto scores = score_candidates({AdversaryKind::SMM}, model, start);
    REQUIRE(scores.size() == 20);
    for (const auto& s : scores)
        CHECK(s.score == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(select_adversary_move({AdversaryKind::SMM}, model, start, rng).uci() == "b1a3");
    CHECK(select_adversary_move({AdversaryKind::AD}, model, start, rng).uci() == "b1a3");
}

TEST_CASE("SMM and AD match a brute-force argmax") {
    PerturbedModel model(0.5, 3);
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
        const GameCursor c = random_white_prefix(rng, 30);
        const TokenSequence& base = c.tokens();
        oracle::OracleGame g;
        for (const auto& m : uci_moves(c))
            g.play(m);
        auto legal = g.legal_moves();
        // tie order: from id, to id, then no promotion before q r b n
        auto key = [](const std::string& u) {
            const int pr = u.size() == 5 ? oracle::OracleGame::promo_id(u[4]) : 0;
            return std::tuple(oracle::OracleGame::square_id(u.substr(0, 2)), oracle::OracleGame::square_id(u.substr(2, 2)), pr);
        };
        std::sort(legal.begin(), legal.end(), [&](auto& a, auto& b) { return key(a) < key(b); });

        DistCache cache{model, {}};
        std::string smm, ad;
        double best_smm = -1, best_ad = -2;
        for (const auto& u : legal) {
            auto [f, t, pr] = key(u);
            TokenSequence s2 = base;
            s2.push_back(static_cast<TokenId>(f));
            TokenSequence s3 = s2;
            s3.push_back(static_cast<TokenId>(t));
            const auto& d3 = cache.at(s3);
            const double tail = pr ? d3.probs[pr] : std::max(0.0, 1.0 - (d3.probs[67] + d3.probs[68] + d3.probs[69] + d3.probs[70]));
            const double p = cache.at(base).probs[f] * cache.at(s2).probs[t] * tail;
            if (p > best_smm) {
                best_smm = p;
                smm = u;
            }
            if (-p > best_ad) {
                best_ad = -p;
                ad = u;
            }
        }
        CHECK(select_adversary_move({AdversaryKind::SMM}, model, c, rng).uci() == smm);
        CHECK(select_adversary_move({AdversaryKind::AD}, model, c, rng).uci() == ad);
        CHECK(f_smm(model, c, Move::parse(smm)) == doctest::Approx(best_smm).epsilon(1e-12));
        CHECK(f_ad(model, c, Move::parse(ad)) == doctest::Approx(best_ad).epsilon(1e-12));
    }
}

TEST_CASE("IMO against the perfect model scores zero") {
    PerfectLegalModel model;
    const GameCursor c = cursor_of({"e2e4", "e7e5", "g1f3", "b8c6"});
    for (const auto& s : score_candidates({AdversaryKind::IMO}, model, c))
        CHECK(s.score == 0.0);
    std::mt19937_64 rng(0);
    CHECK(select_adversary_move({AdversaryKind::IMO}, model, c, rng) == continuations(c).moves.front());
}

TEST_CASE("IMO finds the seeded flaw through a capture") {
    SeededFlawModel model;
    std::mt19937_64 rng(0);
    const GameCursor c = cursor_of({"e2e4", "d7d5"});
    const Move m = select_adversary_move({AdversaryKind::IMO}, model, c, rng);
    CHECK(m.uci() == "e4d5");
    CHECK(f_imo(model, c, m) == doctest::Approx(0.9));
    CHECK(f_imo(model, c, Move::parse("g1f3")) == 0.0);
    CHECK(brute_invalid(model, {"e2e4", "d7d5"}, "e4d5", 71).first == doctest::Approx(0.9));
}

TEST_CASE("IMO and adaptive IMO agree with brute force") {
    PerturbedModel model(0.3, 11);
    std::mt19937_64 rng(23);
    for (int i = 0; i < 3; ++i) {
        const GameCursor c = random_white_prefix(rng, 24);
        const auto prefix = uci_moves(c);
        const auto& moves = continuations(c).moves;
        for (int j = 0; j < 3; ++j) {
            const Move m = moves[rng() % moves.size()];
            const auto [best, sum_all] = brute_invalid(model, prefix, m.uci(), 71);
            CHECK(f_imo(model, c, m) == doctest::Approx(best).epsilon(1e-12));
            CHECK(f_imo_naive(model, c, m) == doctest::Approx(best).epsilon(1e-12));
            const double ad71 = f_adaptive_imo(model, c, m, 71);
            CHECK(ad71 == doctest::Approx(sum_all).epsilon(1e-10));
            CHECK(ad71 >= f_imo(model, c, m));
            const double sum3 = brute_invalid(model, prefix, m.uci(), 3).second;
            CHECK(f_adaptive_imo(model, c, m, 3) == doctest::Approx(sum3).epsilon(1e-10));
        }
    }
}

TEST_CASE("batched IMO equals the one-at-a-time loop") {
    PerturbedModel model(0.4, 2);
    std::mt19937_64 rng(41);
    for (int i = 0; i < 4; ++i) {
        const GameCursor c = random_white_prefix(rng, 40);
        std::vector<CandidateScore> naive;
        for (const Move& m : continuations(c).moves)
            naive.push_back({m, f_imo_naive(model, c, m)});
        const auto batched = score_candidates({AdversaryKind::IMO}, model, c);
        const auto tiny = score_candidates({AdversaryKind::IMO}, model, c, ImoOptions{1});
        REQUIRE(batched.size() == naive.size());
        for (std::size_t j = 0; j < naive.size(); ++j) {
            CHECK(batched[j].score == naive[j].score);
            CHECK(tiny[j].score == naive[j].score);
        }
        CHECK(argmax_candidate(batched) == argmax_candidate(naive));
    }
}

TEST_CASE("IMO scores zero when the candidate ends the game") {
    PerturbedModel model;
    const GameCursor c = cursor_of({"f2f3", "e7e5", "g2g4"});
    // Black to move; the objective only looks at the successor.
    const GameCursor mated = cursor_of({"e2e4", "f7f6", "d2d4", "g7g5"});
    CHECK(f_imo(model, mated, Move::parse("d1h5")) == 0.0);
    CHECK(f_adaptive_imo(model, mated, Move::parse("d1h5"), 5) == 0.0);
    CHECK(f_imo(model, c, Move::parse("d8h4")) == 0.0);
}

TEST_CASE("BSO follows probe errors") {
    ReferencePerfectProbe perfect;
    std::mt19937_64 rng(0);
    const GameCursor start;
    for (const auto& s : score_candidates({AdversaryKind::BSO}, perfect, start))
        CHECK(s.score == 0.0);
    CHECK(select_adversary_move({AdversaryKind::BSO}, perfect, start, rng).uci() == "b1a3");

    const Square e4 = *Square::parse("e4");
    ReferenceNoisyProbe noisy(*Square::parse("a1"), *Square::parse("a2"),
                              [e4](const GameCursor& c) { return c.last_move() && c.last_move()->to == e4; });
    CHECK(select_adversary_move({AdversaryKind::BSO}, noisy, start, rng).uci() == "e2e4");
    CHECK(f_bso(noisy, start, Move::parse("e2e4")) == doctest::Approx(-2 * std::log(1e-12)));

    PerfectLegalModel no_probe;
    CHECK_THROWS_AS((void)select_adversary_move({AdversaryKind::BSO}, no_probe, start, rng), CapabilityMissing);
}

TEST_CASE("self-play steps decode the model's own move") {
    PerfectLegalModel perfect;
    std::mt19937_64 rng(0);
    const DecodedMove d = self_play_step(perfect, GameCursor(), DecodingPolicy::greedy(), rng);
    REQUIRE(std::holds_alternative<Move>(d.output));
    CHECK(std::get<Move>(d.output).uci() == "b1a3");
    CHECK_THROWS_AS((void)select_adversary_move({AdversaryKind::SelfPlay}, perfect, GameCursor(), rng), std::logic_error);

    LengthFlawModel flaw(6);
    GameCursor c;
    int predictions = 0;
    for (;;) {
        const DecodedMove step = self_play_step(flaw, c, DecodingPolicy::greedy(), rng);
        ++predictions;
        if (!std::holds_alternative<Move>(step.output)) {
            CHECK(std::holds_alternative<EosMark>(step.output));
            break;
        }
        c = c.after_move(std::get<Move>(step.output));
    }
    CHECK(c.plies() == 6);
    CHECK(predictions == 7);
}

TEST_CASE("objectives need a boundary cursor") {
    PerfectLegalModel model;
    const GameCursor mid = GameCursor().advanced(static_cast<TokenId>(oracle::OracleGame::square_id("e2")));
    CHECK_THROWS_AS((void)f_imo(model, mid, Move::parse("e2e4")), MisalignedCursor);
    CHECK_THROWS_AS((void)f_smm(model, mid, Move::parse("e2e4")), MisalignedCursor);
}
