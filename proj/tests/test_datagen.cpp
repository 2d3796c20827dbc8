#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "oracle/token_oracle.hpp"
#include "soundcheck/datagen.hpp"
#include "soundcheck/worldmodel.hpp"

using namespace soundcheck;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("soundcheck_datagen_" + name);
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto path = temp_path(name);
    std::ofstream(path) << content;
    return path;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("generated corpora are closed under the rules") {
    GenSpec spec;
    spec.n = 1000;
    spec.seed = 12;
    spec.workers = 4;
    const auto path = temp_path("gen.txt");
    const CorpusStats stats = generate_random_corpus(spec, path);
    CHECK(stats.games == 1000);
    CHECK(stats.premature_ends == 0);
    CHECK(stats.max_length <= 150);
    CHECK(stats.issues.empty());

    const Corpus corpus = read_corpus(path);
    REQUIRE(corpus.games.size() == 1000);
    CHECK(corpus.issues.empty());
    std::size_t tokens = 0;
    for (const CorpusEntry& e : corpus.games) {
        CHECK(e.game.complete);
        CHECK(e.game.moves.size() <= 150);
        const TokenSequence t = encode_game(e.game);
        tokens += t.size();
        CHECK(validate_sequence(t).valid);
        // independent replay: every move legal, final position terminal
        oracle::OracleGame g;
        bool legal = true;
        for (const Move& m : e.game.moves) {
            const auto moves = g.legal_moves();
            legal = legal && !g.terminal() && std::find(moves.begin(), moves.end(), m.uci()) != moves.end();
            g.play(m.uci());
        }
        CHECK(legal);
        CHECK(g.terminal());
    }
    CHECK(stats.tokens == tokens);
    CHECK(corpus_stats(path).tokens == tokens);

    std::ostringstream rows;
    const PdExportSummary pd = export_pd_corpus(corpus, rows);
    CHECK(pd.rows == tokens - corpus.games.size());
    CHECK(pd.rejected.empty());
    std::filesystem::remove(path);
}

TEST_CASE("generation is deterministic and seed dependent") {
    GenSpec spec;
    spec.n = 300;
    spec.seed = 3;
    const auto a = generate_random_games(spec);
    spec.workers = 3;
    const auto b = generate_random_games(spec);
    CHECK(a == b);
    spec.workers = 4;

    const auto p1 = temp_path("det1.txt"), p2 = temp_path("det2.txt");
    GenSpec small;
    small.n = 100;
    small.seed = 9;
    (void)generate_random_corpus(small, p1);
    (void)generate_random_corpus(small, p2);
    CHECK(slurp(p1) == slurp(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);

    GenSpec other = spec;
    other.seed = 4;
    other.workers = 4;
    std::set<std::string> seen;
    for (const auto& g : generate_random_games(spec))
        seen.insert(format_game_line(g));
    std::size_t dup = 0;
    for (const auto& g : generate_random_games(other))
        dup += seen.count(format_game_line(g));
    CHECK(dup == 0);

    GenSpec shorter;
    shorter.n = 50;
    shorter.max_plies = 60;
    for (const auto& g : generate_random_games(shorter))
        CHECK(g.moves.size() <= 60);
    shorter.n = 0;
    CHECK_THROWS_AS((void)generate_random_games(shorter), std::invalid_argument);
}

TEST_CASE("corpus statistics") {
    auto path = temp_file("one.txt", "e2e4 e7e5\n");
    CorpusStats s = corpus_stats(path);
    CHECK(s.games == 1);
    CHECK(s.moves == 2);
    CHECK(s.tokens == 5);
    CHECK(s.premature_ends == 1);
    CHECK(s.mean_length == 2.0);
    CHECK(s.stddev_length == 0.0);
    std::filesystem::remove(path);

    path = temp_file("two.txt", "f2f3 e7e5 g2g4 d8h4 #complete\nthis is not a game\n");
    s = corpus_stats(path);
    CHECK(s.games == 1);
    REQUIRE(s.issues.size() == 1);
    CHECK(s.issues[0].line_index == 1);
    CHECK(s.tokens == 10);
    CHECK(s.premature_ends == 0);
    std::filesystem::remove(path);

    path = temp_file("mixed.txt", "e2e4\ne2e4 e7e5 e1e3\nd2d4 d7d5 c2c4 e7e6 b1c3 g8f6 c1g5 f8e7 e2e3 e8g8 g1f3 b8d7\n");
    s = corpus_stats(path);
    CHECK(s.games == 2);
    REQUIRE(s.issues.size() == 1);
    CHECK(s.issues[0].line_index == 1);
    CHECK(s.min_length == 1);
    CHECK(s.max_length == 12);
    CHECK(s.mean_length == 6.5);
    CHECK(s.stddev_length == 5.5);
    CHECK(s.length_histogram == std::map<std::size_t, std::size_t>{{0, 1}, {10, 1}});
    std::filesystem::remove(path);
}

TEST_CASE("length filter") {
    std::string long_game;
    for (int i = 0; i < 50; ++i)
        long_game += "g1f3 g8f6 f3g1 f6g8 ";
    const auto in = temp_file("filter_in.txt", "e2e4 e7e5\n" + long_game + "\nd2d4\nnot a game\ne2e4 #complete\n");
    const auto out = temp_path("filter_out.txt"), again = temp_path("filter_again.txt");
    FilterSummary f = filter_corpus(in, out, 150);
    CHECK(f.kept == 3);
    CHECK(f.dropped == 1);
    CHECK(f.malformed == 1);
    CHECK(slurp(out) == "e2e4 e7e5\nd2d4\ne2e4 #complete\n");

    f = filter_corpus(out, again, 150);
    CHECK(f.kept == 3);
    CHECK(slurp(again) == slurp(out));

    f = filter_corpus(out, again, 1);
    CHECK(f.kept == 2);
    CHECK_THROWS_AS((void)filter_corpus(temp_path("missing.txt"), again, 1), std::runtime_error);
    for (const auto& p : {in, out, again})
        std::filesystem::remove(p);
}
