#include "sift/embed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <zlib.h>

#include "sift/rng.hpp"

namespace sift {

namespace {

constexpr std::uint32_t kModelFormatVersion = 1;
constexpr double kNegativeExponent = 0.75;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double safe_log(double x) { return std::log(std::max(x, 1e-12)); }

void seeded_init(float* row, std::uint32_t gamma, std::uint64_t seed) {
    Rng rng(seed);
    double scale = 0.5 / gamma;
    for (std::uint32_t i = 0; i < gamma; ++i)
        row[i] = static_cast<float>(rng.next_range(-scale, scale));
}

std::uint32_t sample_negative(const std::vector<double>& cdf, Rng& rng) {
    double u = rng.next_unit() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return static_cast<std::uint32_t>(it - cdf.begin());
}

std::vector<std::uint32_t> encode(const Vocabulary& vocab, const std::vector<std::string>& tokens) {
    std::vector<std::uint32_t> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        auto it = vocab.lookup.find(t);
        if (it != vocab.lookup.end()) out.push_back(it->second);
    }
    return out;
}

// Shared by training and inference: one SGD step on the doc vector at
// position t, negatives drawn from rng. Word rows are updated only when
// update_words is set. Returns the position loss.
double position_step(const Lib2VecModel& model_const, float* word_matrix, float* doc_vec,
                     const std::vector<std::uint32_t>& words, std::size_t t, double lr, Rng& rng,
                     bool update_words) {
    const std::uint32_t gamma = model_const.gamma();
    const std::uint32_t window = model_const.config.window;
    const std::uint32_t target = words[t];

    std::size_t lo = t > window ? t - window : 0;
    std::size_t hi = std::min(words.size(), t + window + 1);

    // h = mean of doc vector and context word vectors
    std::vector<double> h(gamma, 0.0);
    std::size_t context_count = 0;
    for (std::size_t j = lo; j < hi; ++j) {
        if (j == t) continue;
        const float* row = word_matrix + std::size_t(words[j]) * gamma;
        for (std::uint32_t i = 0; i < gamma; ++i) h[i] += row[i];
        ++context_count;
    }
    for (std::uint32_t i = 0; i < gamma; ++i) h[i] = (h[i] + doc_vec[i]) / double(context_count + 1);

    std::vector<double> grad_h(gamma, 0.0);
    double loss = 0.0;
    auto apply_sample = [&](std::uint32_t w, double label) {
        float* row = word_matrix + std::size_t(w) * gamma;
        double dot = 0.0;
        for (std::uint32_t i = 0; i < gamma; ++i) dot += h[i] * row[i];
        double f = sigmoid(dot);
        double g = label - f;
        loss -= label > 0.5 ? safe_log(f) : safe_log(1.0 - f);
        for (std::uint32_t i = 0; i < gamma; ++i) {
            grad_h[i] += g * row[i];
            if (update_words) row[i] += static_cast<float>(lr * g * h[i]);
        }
    };

    apply_sample(target, 1.0);
    for (std::uint32_t n = 0; n < model_const.config.negative_samples; ++n) {
        std::uint32_t neg = sample_negative(model_const.negative_cdf, rng);
        if (neg == target) continue;
        apply_sample(neg, 0.0);
    }

    // exact gradient of the mean context: 1/(count+1) reaches doc and inputs
    double share = lr / double(context_count + 1);
    for (std::uint32_t i = 0; i < gamma; ++i) doc_vec[i] += static_cast<float>(share * grad_h[i]);
    if (update_words) {
        for (std::size_t j = lo; j < hi; ++j) {
            if (j == t) continue;
            float* row = word_matrix + std::size_t(words[j]) * gamma;
            for (std::uint32_t i = 0; i < gamma; ++i) row[i] += static_cast<float>(share * grad_h[i]);
        }
    }
    return loss;
}

} // namespace

void TrainingConfig::validate() const {
    if (epochs == 0 || vector_size == 0 || min_count == 0 || infer_epochs == 0)
        throw Error(ErrorCode::EmptyCorpus, "epochs, vector_size, min_count, infer_epochs must be positive");
    if (initial_lr <= 0 || final_lr <= 0 || final_lr > initial_lr)
        throw Error(ErrorCode::EmptyCorpus, "require 0 < final_lr <= initial_lr");
}

DocVector Lib2VecModel::training_vector(std::size_t doc_index) const {
    DocVector v;
    v.doc_id = training_doc_ids.at(doc_index);
    const float* row = doc_matrix.data() + doc_index * gamma();
    v.values.assign(row, row + gamma());
    double sq = 0;
    for (float x : v.values) sq += double(x) * x;
    v.norm = std::sqrt(sq);
    return v;
}

void Lib2VecModel::rebuild_negative_cdf() {
    negative_cdf.clear();
    negative_cdf.reserve(vocab.size());
    double acc = 0;
    for (std::uint32_t w = 0; w < vocab.size(); ++w) {
        acc += std::pow(double(vocab.frequencies[w]), kNegativeExponent);
        negative_cdf.push_back(acc);
    }
}

namespace {

Vocabulary build_vocabulary_from(std::span<const NormalizedDocument* const> docs,
                                 std::uint32_t min_count) {
    if (docs.empty()) throw Error(ErrorCode::EmptyCorpus, "no documents");
    std::unordered_map<std::string, std::uint64_t> counts;
    std::uint64_t total = 0;
    for (const auto* doc : docs) {
        for (const auto& t : doc->tokens) {
            ++counts[t];
            ++total;
        }
    }
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    kept.reserve(counts.size());
    for (auto& [token, freq] : counts)
        if (freq >= min_count) kept.emplace_back(token, freq);
    // descending frequency, ties by token text, so indices are reproducible
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.total_token_count = total;
    vocab.tokens.reserve(kept.size());
    vocab.frequencies.reserve(kept.size());
    for (std::uint32_t i = 0; i < kept.size(); ++i) {
        vocab.lookup.emplace(kept[i].first, i);
        vocab.tokens.push_back(std::move(kept[i].first));
        vocab.frequencies.push_back(kept[i].second);
    }
    return vocab;
}

} // namespace

Vocabulary build_vocabulary(std::span<const NormalizedDocument> docs, std::uint32_t min_count) {
    std::vector<const NormalizedDocument*> ptrs;
    ptrs.reserve(docs.size());
    for (const auto& d : docs) ptrs.push_back(&d);
    return build_vocabulary_from(ptrs, min_count);
}

Lib2VecModel train(std::span<const NormalizedDocument> docs, const TrainingConfig& config,
                   unsigned workers) {
    config.validate();
    if (docs.empty()) throw Error(ErrorCode::EmptyCorpus, "no documents to train on");

    // Seeded uniform subsample when sample_count is set and smaller.
    std::vector<const NormalizedDocument*> selected;
    selected.reserve(docs.size());
    for (const auto& d : docs) selected.push_back(&d);
    if (config.sample_count != 0 && config.sample_count < selected.size()) {
        Rng rng(mix_seed(config.seed, fnv1a("sample")));
        seeded_shuffle(selected, rng);
        selected.resize(config.sample_count);
    }

    Lib2VecModel model;
    model.channel = selected.front()->channel;
    model.language = selected.front()->language;
    model.config = config;
    model.vocab = build_vocabulary_from(selected, config.min_count);
    if (model.vocab.size() == 0)
        throw Error(ErrorCode::DegenerateVocabulary, "vocabulary empty after min_count filter");
    model.rebuild_negative_cdf();

    const std::uint32_t gamma = config.vector_size;
    std::vector<std::vector<std::uint32_t>> encoded;
    encoded.reserve(selected.size());
    std::uint64_t total_positions = 0;
    for (const auto* doc : selected) {
        encoded.push_back(encode(model.vocab, doc->tokens));
        total_positions += encoded.back().size();
    }
    if (total_positions == 0)
        throw Error(ErrorCode::EmptyCorpus, "no in-vocabulary tokens in corpus");

    model.training_doc_count = selected.size();
    model.training_doc_ids.reserve(selected.size());
    for (const auto* doc : selected) model.training_doc_ids.push_back(doc->doc_id);

    model.word_matrix.resize(std::size_t(model.vocab.size()) * gamma);
    for (std::uint32_t w = 0; w < model.vocab.size(); ++w)
        seeded_init(model.word_row(w), gamma, mix_seed(config.seed, fnv1a("word") ^ w));
    model.doc_matrix.resize(selected.size() * std::size_t(gamma));
    for (std::size_t d = 0; d < selected.size(); ++d)
        seeded_init(model.doc_matrix.data() + d * gamma, gamma, mix_seed(config.seed, fnv1a("doc") ^ d));

    const std::uint64_t total_updates = std::uint64_t(config.epochs) * total_positions;
    std::atomic<std::uint64_t> progress{0};
    model.epoch_losses.assign(config.epochs, 0.0);

    auto run_shard = [&](unsigned worker_id, unsigned worker_count, std::uint32_t epoch,
                         double* loss_out, std::uint64_t* count_out) {
        Rng rng(mix_seed(config.seed, (std::uint64_t(epoch) << 16) | worker_id));
        double loss = 0;
        std::uint64_t count = 0;
        for (std::size_t d = worker_id; d < encoded.size(); d += worker_count) {
            const auto& words = encoded[d];
            float* doc_vec = model.doc_matrix.data() + d * gamma;
            for (std::size_t t = 0; t < words.size(); ++t) {
                std::uint64_t done = progress.fetch_add(1, std::memory_order_relaxed);
                double lr = config.initial_lr * (1.0 - double(done) / double(total_updates));
                lr = std::max(lr, config.final_lr);
                loss += position_step(model, model.word_matrix.data(), doc_vec, words, t, lr, rng, true);
                ++count;
            }
        }
        *loss_out = loss;
        *count_out = count;
    };

    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (workers <= 1) {
            double loss = 0;
            std::uint64_t count = 0;
            run_shard(0, 1, epoch, &loss, &count);
            model.epoch_losses[epoch] = loss / double(std::max<std::uint64_t>(count, 1));
        } else {
            std::vector<std::thread> pool;
            std::vector<double> losses(workers, 0.0);
            std::vector<std::uint64_t> counts(workers, 0);
            for (unsigned w = 0; w < workers; ++w)
                pool.emplace_back(run_shard, w, workers, epoch, &losses[w], &counts[w]);
            for (auto& th : pool) th.join();
            double loss = 0;
            std::uint64_t count = 0;
            for (unsigned w = 0; w < workers; ++w) {
                loss += losses[w];
                count += counts[w];
            }
            model.epoch_losses[epoch] = loss / double(std::max<std::uint64_t>(count, 1));
        }
    }
    return model;
}

DocVector infer_vector(const Lib2VecModel& model, const NormalizedDocument& doc,
                       std::uint32_t infer_epochs, std::uint64_t seed) {
    const std::uint32_t gamma = model.gamma();
    std::vector<std::uint32_t> words = encode(model.vocab, doc.tokens);
    if (words.empty())
        throw Error(ErrorCode::NoKnownTokens, "document shares no vocabulary with model: " + doc.doc_id);

    std::vector<float> vec(gamma);
    seeded_init(vec.data(), gamma, mix_seed(seed, fnv1a("infer-init")));
    Rng rng(mix_seed(seed, fnv1a("infer-neg")));

    // Word matrix is frozen during inference; copy-free const_cast is avoided
    // by passing the matrix pointer with updates disabled.
    auto* matrix = const_cast<float*>(model.word_matrix.data());
    const std::uint64_t total = std::uint64_t(infer_epochs) * words.size();
    std::uint64_t done = 0;
    for (std::uint32_t epoch = 0; epoch < infer_epochs; ++epoch) {
        for (std::size_t t = 0; t < words.size(); ++t) {
            double lr = model.config.initial_lr * (1.0 - double(done) / double(total));
            lr = std::max(lr, model.config.final_lr);
            position_step(model, matrix, vec.data(), words, t, lr, rng, false);
            ++done;
        }
    }

    DocVector out;
    out.doc_id = doc.doc_id;
    out.values = std::move(vec);
    double sq = 0;
    for (float x : out.values) sq += double(x) * x;
    out.norm = std::sqrt(sq);
    return out;
}

DocVector infer_vector(const Lib2VecModel& model, const NormalizedDocument& doc) {
    return infer_vector(model, doc, model.config.infer_epochs, model.config.seed);
}

double cosine(const DocVector& u, const DocVector& v) {
    if (u.dimension() != v.dimension())
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(u.dimension()) + " vs " + std::to_string(v.dimension()));
    if (u.norm <= 0 || v.norm <= 0) throw Error(ErrorCode::ZeroVector, "cosine of zero vector");
    double dot = 0;
    for (std::uint32_t i = 0; i < u.dimension(); ++i) dot += double(u.values[i]) * v.values[i];
    return std::clamp(dot / (u.norm * v.norm), -1.0, 1.0);
}

double ns_loss(const Lib2VecModel& model, std::span<const double> doc_vec,
               std::span<const NsSample> batch) {
    const std::uint32_t gamma = model.gamma();
    double loss = 0;
    for (const auto& sample : batch) {
        std::vector<double> h(gamma, 0.0);
        for (auto w : sample.context_words) {
            const float* row = model.word_row(w);
            for (std::uint32_t i = 0; i < gamma; ++i) h[i] += row[i];
        }
        double denom = double(sample.context_words.size() + 1);
        for (std::uint32_t i = 0; i < gamma; ++i) h[i] = (h[i] + doc_vec[i]) / denom;

        auto dot_with = [&](std::uint32_t w) {
            const float* row = model.word_row(w);
            double dot = 0;
            for (std::uint32_t i = 0; i < gamma; ++i) dot += h[i] * row[i];
            return dot;
        };
        loss -= safe_log(sigmoid(dot_with(sample.target)));
        for (auto neg : sample.negatives) loss -= safe_log(sigmoid(-dot_with(neg)));
    }
    return loss;
}

std::vector<double> ns_loss_grad_doc(const Lib2VecModel& model, std::span<const double> doc_vec,
                                     std::span<const NsSample> batch) {
    const std::uint32_t gamma = model.gamma();
    std::vector<double> grad(gamma, 0.0);
    for (const auto& sample : batch) {
        std::vector<double> h(gamma, 0.0);
        for (auto w : sample.context_words) {
            const float* row = model.word_row(w);
            for (std::uint32_t i = 0; i < gamma; ++i) h[i] += row[i];
        }
        double denom = double(sample.context_words.size() + 1);
        for (std::uint32_t i = 0; i < gamma; ++i) h[i] = (h[i] + doc_vec[i]) / denom;

        auto accumulate = [&](std::uint32_t w, double label) {
            const float* row = model.word_row(w);
            double dot = 0;
            for (std::uint32_t i = 0; i < gamma; ++i) dot += h[i] * row[i];
            double g = label - sigmoid(dot);
            // dL/dh = -(label - f) * row; dh/ddoc = 1/denom
            for (std::uint32_t i = 0; i < gamma; ++i) grad[i] -= g * row[i] / denom;
        };
        accumulate(sample.target, 1.0);
        for (auto neg : sample.negatives) accumulate(neg, 0.0);
    }
    return grad;
}

namespace {

void append_crc_trailer(ByteWriter& out) {
    uLong crc = crc32(0L, out.bytes().data(), static_cast<uInt>(out.bytes().size()));
    out.u32le(static_cast<std::uint32_t>(crc));
}

} // namespace

void save_model(const Lib2VecModel& model, const std::string& path) {
    ByteWriter out;
    out.str("L2VM");
    out.u32le(kModelFormatVersion);
    out.u8(static_cast<std::uint8_t>(model.channel));
    out.u8(static_cast<std::uint8_t>(model.language));
    out.u32le(model.config.epochs);
    out.u32le(model.config.vector_size);
    out.u64le(model.config.sample_count);
    out.u32le(model.config.window);
    out.u32le(model.config.negative_samples);
    out.u32le(model.config.min_count);
    out.f64le(model.config.initial_lr);
    out.f64le(model.config.final_lr);
    out.u64le(model.config.seed);
    out.u32le(model.config.infer_epochs);
    out.u64le(model.training_doc_count);
    out.u64le(model.vocab.size());
    for (std::uint32_t w = 0; w < model.vocab.size(); ++w) {
        out.u32le(static_cast<std::uint32_t>(model.vocab.tokens[w].size()));
        out.str(model.vocab.tokens[w]);
        out.u64le(model.vocab.frequencies[w]);
    }
    for (float x : model.word_matrix) out.f32le(x);
    append_crc_trailer(out);
    write_file(path, out.bytes());
}

Lib2VecModel load_model(const std::string& path) {
    Bytes raw = read_file(path);
    if (raw.size() < 8 + 4)
        throw Error(ErrorCode::CorruptModel, "model file too short: " + path);

    uLong expect = crc32(0L, raw.data(), static_cast<uInt>(raw.size() - 4));
    ByteReader tail(std::span(raw).subspan(raw.size() - 4));
    if (tail.u32le() != static_cast<std::uint32_t>(expect))
        throw Error(ErrorCode::CorruptModel, "checksum mismatch: " + path);

    ByteReader in(std::span(raw).first(raw.size() - 4));
    if (in.str(4) != "L2VM") throw Error(ErrorCode::CorruptModel, "bad magic: " + path);
    std::uint32_t version = in.u32le();
    if (version != kModelFormatVersion)
        throw Error(ErrorCode::VersionMismatch, "model format version " + std::to_string(version));

    Lib2VecModel model;
    model.channel = static_cast<Channel>(in.u8());
    model.language = static_cast<Language>(in.u8());
    model.config.epochs = in.u32le();
    model.config.vector_size = in.u32le();
    model.config.sample_count = in.u64le();
    model.config.window = in.u32le();
    model.config.negative_samples = in.u32le();
    model.config.min_count = in.u32le();
    model.config.initial_lr = in.f64le();
    model.config.final_lr = in.f64le();
    model.config.seed = in.u64le();
    model.config.infer_epochs = in.u32le();
    model.training_doc_count = in.u64le();
    std::uint64_t vocab_size = in.u64le();
    model.vocab.tokens.reserve(vocab_size);
    model.vocab.frequencies.reserve(vocab_size);
    for (std::uint64_t w = 0; w < vocab_size; ++w) {
        std::uint32_t len = in.u32le();
        std::string token = in.str(len);
        std::uint64_t freq = in.u64le();
        model.vocab.lookup.emplace(token, static_cast<std::uint32_t>(w));
        model.vocab.tokens.push_back(std::move(token));
        model.vocab.frequencies.push_back(freq);
        model.vocab.total_token_count += freq;
    }
    std::size_t matrix_len = std::size_t(vocab_size) * model.config.vector_size;
    model.word_matrix.reserve(matrix_len);
    for (std::size_t i = 0; i < matrix_len; ++i) model.word_matrix.push_back(in.f32le());
    if (!in.at_end()) throw Error(ErrorCode::CorruptModel, "trailing bytes in " + path);
    model.rebuild_negative_cdf();
    return model;
}

} // namespace sift
