#include "soundcheck/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include "soundcheck/adversaries.hpp"
#include "soundcheck/board.hpp"
#include "soundcheck/worldmodel.hpp"

namespace soundcheck {

namespace {

constexpr std::size_t kShardSize = 256;

std::uint64_t shard_seed(std::uint64_t seed, std::size_t shard) noexcept {
    std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (shard + 1));
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<GameLine> generate_shard(std::size_t count, int max_plies, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<GameLine> out;
    out.reserve(count);
    while (out.size() < count) {
        BoardState b;
        GameLine g;
        g.complete = true;
        int plies = 0;
        while (plies <= max_plies) {
            const MoveList moves = legal_moves(b);
            // terminal_kind without generating the moves a second time
            if (moves.empty() || insufficient_material(b.position()) || b.repetition_count() >= 3 ||
                b.halfmove_clock() >= 100)
                break;
            g.moves.push_back(moves[uniform_index(rng, moves.size())]);
            b = apply_unchecked(b, g.moves.back());
            ++plies;
        }
        if (plies <= max_plies)
            out.push_back(std::move(g));
    }
    return out;
}

}  // namespace

std::vector<GameLine> generate_random_games(const GenSpec& spec) {
    if (spec.n == 0)
        throw std::invalid_argument("corpus size must be at least 1");
    if (spec.max_plies < 1)
        throw std::invalid_argument("max plies must be at least 1");
    const std::size_t shards = (spec.n + kShardSize - 1) / kShardSize;
    std::vector<std::vector<GameLine>> parts(shards);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t s; (s = next.fetch_add(1)) < shards;) {
            const std::size_t count = std::min(kShardSize, spec.n - s * kShardSize);
            parts[s] = generate_shard(count, spec.max_plies, shard_seed(spec.seed, s));
        }
    };
    const unsigned workers = std::clamp<unsigned>(spec.workers, 1, static_cast<unsigned>(shards));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < workers; ++i)
            pool.emplace_back(work);
    }
    std::vector<GameLine> out;
    out.reserve(spec.n);
    for (auto& p : parts)
        std::move(p.begin(), p.end(), std::back_inserter(out));
    return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats s;
    s.issues = corpus.issues;
    std::vector<std::size_t> lengths;
    for (const CorpusEntry& e : corpus.games) {
        GameCursor c;
        try {
            for (const Move& m : e.game.moves)
                c = c.after_move(m);
        } catch (const InvalidToken& err) {
            s.issues.push_back({e.line_index, std::string("illegal game: ") + err.what()});
            continue;
        }
        const std::size_t len = e.game.moves.size();
        lengths.push_back(len);
        s.moves += len;
        s.tokens += encode_game(e.game).size();
        s.premature_ends += c.terminal() == TerminalKind::NotTerminal;
        ++s.length_histogram[len / 10 * 10];
    }
    std::sort(s.issues.begin(), s.issues.end(),
              [](const CorpusIssue& a, const CorpusIssue& b) { return a.line_index < b.line_index; });
    s.games = lengths.size();
    if (s.games == 0)
        return s;
    s.min_length = *std::min_element(lengths.begin(), lengths.end());
    s.max_length = *std::max_element(lengths.begin(), lengths.end());
    s.mean_length = static_cast<double>(s.moves) / static_cast<double>(s.games);
    double var = 0.0;
    for (std::size_t l : lengths)
        var += (static_cast<double>(l) - s.mean_length) * (static_cast<double>(l) - s.mean_length);
    s.stddev_length = std::sqrt(var / static_cast<double>(s.games));
    return s;
}

CorpusStats corpus_stats(const std::filesystem::path& path) { return corpus_stats(read_corpus(path)); }

CorpusStats generate_random_corpus(const GenSpec& spec, const std::filesystem::path& out) {
    const auto games = generate_random_games(spec);
    write_corpus(out, games);
    Corpus corpus;
    for (std::size_t i = 0; i < games.size(); ++i)
        corpus.games.push_back({i, games[i]});
    return corpus_stats(corpus);
}

FilterSummary filter_corpus(const std::filesystem::path& in, const std::filesystem::path& out, int max_plies) {
    std::ifstream src(in);
    if (!src)
        throw std::runtime_error("cannot open " + in.string());
    std::ofstream dst(out);
    if (!dst)
        throw std::runtime_error("cannot write " + out.string());
    FilterSummary summary;
    for (std::string line; std::getline(src, line);) {
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try {
            const GameLine g = parse_game_line(line);
            if (static_cast<int>(g.moves.size()) > max_plies) {
                ++summary.dropped;
                continue;
            }
        } catch (const std::invalid_argument&) {
            ++summary.malformed;
            continue;
        }
        dst << line << '\n';
        ++summary.kept;
    }
    if (!dst)
        throw std::runtime_error("write failed: " + out.string());
    return summary;
}

}  // namespace soundcheck
