#pragma once

// Loads tests/fixtures/taxonomy.tsv and replays each output through the
// library's decoder.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "oracle/token_oracle.hpp"
#include "soundcheck/harness.hpp"
#include "support/test_models.hpp"

namespace taxonomy_fixtures {

using namespace soundcheck;

struct Fixture {
    std::string fen;
    std::string output;
    int expected = 0;
};

inline std::vector<Fixture> load(const std::string& path) {
    std::ifstream in(path);
    std::vector<Fixture> out;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream row(line);
        Fixture f;
        std::string type;
        std::getline(row, f.fen, '\t');
        std::getline(row, f.output, '\t');
        std::getline(row, type, '\t');
        f.expected = std::stoi(type);
        out.push_back(f);
    }
    return out;
}

inline TokenId token_named(const std::string& name) {
    if (name == "PAD")
        return kPad;
    if (name == "BOS")
        return kBos;
    if (name == "EOS")
        return kEos;
    if (name.size() == 1)
        return static_cast<TokenId>(oracle::OracleGame::promo_id(name[0]));
    return static_cast<TokenId>(oracle::OracleGame::square_id(name));
}

// Decodes the fixture's output with a scripted model at the fixture position
// and classifies it with the library.
inline int library_type(const Fixture& f) {
    const GameCursor cursor = GameCursor::at_position(BoardState::from_fen(f.fen));
    std::vector<TokenId> script;
    std::istringstream in(f.output);
    for (std::string t; in >> t;)
        script.push_back(token_named(t));
    testing_models::ScriptedModel model(cursor.tokens().size(), script);
    std::mt19937_64 rng(0);
    const DecodedMove d = decode_move(model, cursor.tokens(), DecodingPolicy::greedy(), rng);
    if (const Move* m = std::get_if<Move>(&d.output); m && cursor.board_moves().contains(*m))
        return 0;
    return error_type_number(classify_error(cursor.board(), d.output));
}

}  // namespace taxonomy_fixtures
