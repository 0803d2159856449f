#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sift/normalize.hpp"

namespace sift {

/// Paragraph-vector training knobs. epochs/vector_size/sample_count are the
/// tuned parameters; sample_count 0 means the whole corpus.
struct TrainingConfig {
    std::uint32_t epochs = 10;
    std::uint32_t vector_size = 10;
    std::uint64_t sample_count = 0; // 0 = all documents
    std::uint32_t window = 5;
    std::uint32_t negative_samples = 5;
    std::uint32_t min_count = 2;
    double initial_lr = 0.025;
    double final_lr = 1e-4;
    std::uint64_t seed = 1;
    std::uint32_t infer_epochs = 50;

    void validate() const;
};

struct Vocabulary {
    std::vector<std::string> tokens;      // index -> token, descending frequency
    std::vector<std::uint64_t> frequencies;
    std::unordered_map<std::string, std::uint32_t> lookup;
    std::uint64_t total_token_count = 0;

    std::uint32_t size() const { return static_cast<std::uint32_t>(tokens.size()); }
};

struct DocVector {
    std::string doc_id;
    std::vector<float> values;
    double norm = 0;

    std::uint32_t dimension() const { return static_cast<std::uint32_t>(values.size()); }
};

/// Distributed-memory paragraph-vector model with negative sampling and a
/// tied word matrix: the same V x gamma table serves as context input and as
/// the negative-sampling output weights, so one matrix fully determines
/// inference. Trained document vectors are kept in memory only; persistence
/// covers vocabulary, config, and the word matrix.
struct Lib2VecModel {
    Channel channel = Channel::Bytecode;
    Language language = Language::Java;
    Vocabulary vocab;
    std::vector<float> word_matrix; // V x gamma, row-major
    TrainingConfig config;
    std::uint64_t training_doc_count = 0;

    // Training-run artifacts (not persisted).
    std::vector<float> doc_matrix; // N x gamma
    std::vector<std::string> training_doc_ids;
    std::vector<double> epoch_losses;

    // Cumulative unigram^0.75 table for negative sampling; rebuilt on load.
    std::vector<double> negative_cdf;

    std::uint32_t gamma() const { return config.vector_size; }
    const float* word_row(std::uint32_t w) const { return word_matrix.data() + std::size_t(w) * gamma(); }
    float* word_row(std::uint32_t w) { return word_matrix.data() + std::size_t(w) * gamma(); }

    DocVector training_vector(std::size_t doc_index) const;
    void rebuild_negative_cdf();
};

Vocabulary build_vocabulary(std::span<const NormalizedDocument> docs, std::uint32_t min_count);

/// Trains a model for exactly config.epochs passes with linearly decayed
/// learning rate. Deterministic for a fixed seed when workers == 1; with more
/// workers updates race (hogwild) and reproducibility is statistical only.
Lib2VecModel train(std::span<const NormalizedDocument> docs, const TrainingConfig& config,
                   unsigned workers = 1);

/// Infers a vector for one document against a frozen word matrix, starting
/// from a seeded initialization. Pure function of (model, doc, epochs, seed).
DocVector infer_vector(const Lib2VecModel& model, const NormalizedDocument& doc,
                       std::uint32_t infer_epochs, std::uint64_t seed);
DocVector infer_vector(const Lib2VecModel& model, const NormalizedDocument& doc);

double cosine(const DocVector& u, const DocVector& v);

void save_model(const Lib2VecModel& model, const std::string& path);
Lib2VecModel load_model(const std::string& path);

/// One training position with its negatives pinned, for loss/gradient checks
/// on a frozen batch.
struct NsSample {
    std::vector<std::uint32_t> context_words;
    std::uint32_t target = 0;
    std::vector<std::uint32_t> negatives;
};

/// Negative-sampling loss of a doc vector over a frozen batch (word matrix
/// fixed). Exposed so the analytic gradient can be checked against finite
/// differences.
double ns_loss(const Lib2VecModel& model, std::span<const double> doc_vec,
               std::span<const NsSample> batch);
std::vector<double> ns_loss_grad_doc(const Lib2VecModel& model, std::span<const double> doc_vec,
                                     std::span<const NsSample> batch);

} // namespace sift
