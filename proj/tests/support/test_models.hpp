#pragma once

// Test doubles built on the public Model interface.

#include <map>
#include <mutex>

#include "soundcheck/reference_models.hpp"

namespace testing_models {

using namespace soundcheck;

// Mixes the perfect legal distribution with deterministic pseudo-random mass
// on every token, so argmaxes and promotion tails vary from prefix to prefix.
class PerturbedModel final : public Model {
public:
    explicit PerturbedModel(double noise = 0.3, std::uint64_t salt = 1) : noise_(noise), salt_(salt) {}

    std::string name() const override { return "perturbed"; }
    Capabilities capabilities() const override { return {true, true, false, false}; }

    ModelDistribution dist(TokenSpan tokens) override {
        const ModelDistribution base = perfect_.dist(tokens);
        std::uint64_t h = salt_ * 0x9e3779b97f4a7c15ULL;
        for (TokenId t : tokens)
            h = (h ^ t) * 0x100000001b3ULL;
        std::array<double, kVocabSize> w{};
        double total = 0;
        for (std::size_t i = 0; i < kVocabSize; ++i) {
            h ^= h >> 29;
            h *= 0xbf58476d1ce4e5b9ULL;
            h ^= h >> 32;
            // sparse: roughly one token in four gets weight
            w[i] = (h & 3) == 0 ? static_cast<double>((h >> 8) % 1000 + 1) : 0.0;
            total += w[i];
        }
        ModelDistribution d;
        for (std::size_t i = 0; i < kVocabSize; ++i)
            d.probs[i] = (1 - noise_) * base.probs[i] + (total > 0 ? noise_ * w[i] / total : noise_ / kVocabSize);
        return d;
    }

private:
    PerfectLegalModel perfect_;
    double noise_;
    std::uint64_t salt_;
};

// Returns point masses keyed by the number of tokens beyond a base prefix;
// anything unscripted gets a point mass on PAD.
class ScriptedModel final : public Model {
public:
    ScriptedModel(std::size_t base, std::vector<TokenId> script) : base_(base), script_(std::move(script)) {}

    std::string name() const override { return "scripted"; }
    Capabilities capabilities() const override { return {true, false, false, false}; }

    ModelDistribution dist(TokenSpan tokens) override {
        ModelDistribution d;
        const std::size_t k = tokens.size() - base_;
        d.probs[k < script_.size() ? script_[k] : kPad] = 1.0;
        return d;
    }

private:
    std::size_t base_;
    std::vector<TokenId> script_;
};

// Fixed distribution regardless of prefix.
class ConstantModel final : public Model {
public:
    explicit ConstantModel(ModelDistribution d) : d_(d) {}
    std::string name() const override { return "constant"; }
    Capabilities capabilities() const override { return {true, false, false, false}; }
    ModelDistribution dist(TokenSpan) override { return d_; }

private:
    ModelDistribution d_;
};

}  // namespace testing_models
