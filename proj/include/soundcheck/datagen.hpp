#pragma once

/// @file datagen.hpp
/// Random game corpora and corpus tooling.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "soundcheck/notation.hpp"

namespace soundcheck {

struct GenSpec {
    std::size_t n = 1000;
    int max_plies = 150;
    std::uint64_t seed = 0;
    unsigned workers = 1;  ///< does not affect the output
};

/// Games of uniformly random legal moves (promotions count as separate
/// moves), each played until it ends by rule. Games longer than max_plies are
/// thrown away and replayed. Work is split into fixed shards of 256 games
/// with their own seeds, so the result depends only on (n, max_plies, seed).
[[nodiscard]] std::vector<GameLine> generate_random_games(const GenSpec& spec);

struct CorpusStats {
    std::size_t games = 0;
    std::size_t tokens = 0;  ///< BOS, move tokens, and EOS for complete games
    std::size_t moves = 0;
    double mean_length = 0.0;  ///< plies
    double stddev_length = 0.0;
    std::size_t min_length = 0;
    std::size_t max_length = 0;
    std::map<std::size_t, std::size_t> length_histogram;  ///< bucket start (width 10) -> games
    std::size_t premature_ends = 0;  ///< games whose final position is not terminal
    std::vector<CorpusIssue> issues;  ///< malformed or illegal lines, skipped
};

[[nodiscard]] CorpusStats corpus_stats(const Corpus& corpus);
[[nodiscard]] CorpusStats corpus_stats(const std::filesystem::path& path);

/// Generates and writes a corpus; returns its statistics.
CorpusStats generate_random_corpus(const GenSpec& spec, const std::filesystem::path& out);

struct FilterSummary {
    std::size_t kept = 0;
    std::size_t dropped = 0;    ///< longer than the cap
    std::size_t malformed = 0;  ///< unparseable lines, dropped
};

/// Copies the lines of games with at most max_plies moves, in order.
FilterSummary filter_corpus(const std::filesystem::path& in, const std::filesystem::path& out, int max_plies);

}  // namespace soundcheck
