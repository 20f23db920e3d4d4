#include "hpcde/data/batching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace hpcde::data {

namespace {

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq sseq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(stream),
                       static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
    return std::mt19937_64(sseq);
}

}  // namespace

Split split_dataset(const std::vector<EventSequence>& sequences, double train_fraction,
                    std::uint64_t seed) {
    if (sequences.empty()) {
        throw DataError("cannot split an empty dataset");
    }
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
        throw DataError("train_fraction must lie in [0, 1]");
    }
    std::vector<std::size_t> order(sequences.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = derived_rng(seed, 0xffffffffULL);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(sequences.size()) + 0.5));
    Split split;
    split.train.reserve(n_train);
    split.test.reserve(sequences.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? split.train : split.test).push_back(sequences[order[i]]);
    }
    return split;
}

EventSequence Batch::sequence(std::size_t r) const {
    EventSequence seq;
    seq.events.reserve(lengths[r]);
    for (std::size_t j = 0; j < padded_length; ++j) {
        const std::size_t at = r * padded_length + j;
        if (mask[at]) {
            seq.events.push_back({types[at], times[at]});
        }
    }
    return seq;
}

Batch make_batch(std::span<const EventSequence> sequences, std::span<const std::size_t> indices,
                 std::size_t pad_to) {
    Batch b;
    std::size_t longest = 0;
    for (auto i : indices) {
        longest = std::max(longest, sequences[i].size());
    }
    if (pad_to != 0 && pad_to < longest) {
        throw DataError("pad length " + std::to_string(pad_to) + " shorter than longest sequence " +
                        std::to_string(longest));
    }
    b.padded_length = pad_to ? pad_to : longest;
    const std::size_t cells = indices.size() * b.padded_length;
    b.types.assign(cells, 0);
    b.times.assign(cells, 0.0);
    b.mask.assign(cells, 0);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto& seq = sequences[indices[r]];
        b.source_index.push_back(indices[r]);
        b.lengths.push_back(seq.size());
        for (std::size_t j = 0; j < seq.size(); ++j) {
            const std::size_t at = r * b.padded_length + j;
            b.types[at] = seq.events[j].type;
            b.times[at] = seq.events[j].time;
            b.mask[at] = 1;
        }
    }
    return b;
}

BatchStream::BatchStream(std::span<const EventSequence> sequences, std::size_t batch_size,
                         std::uint64_t seed)
    : sequences_(sequences), batch_size_(batch_size), seed_(seed) {
    if (batch_size == 0) {
        throw DataError("batch size must be at least 1");
    }
    if (sequences.empty()) {
        throw DataError("cannot batch an empty training set");
    }
}

std::vector<std::vector<std::size_t>> BatchStream::epoch_order(std::size_t epoch) const {
    std::vector<std::size_t> order(sequences_.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = derived_rng(seed_, epoch);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < order.size(); i += batch_size_) {
        const std::size_t end = std::min(order.size(), i + batch_size_);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

std::vector<Batch> BatchStream::epoch(std::size_t epoch) const {
    std::vector<Batch> out;
    for (const auto& idx : epoch_order(epoch)) {
        out.push_back(make_batch(sequences_, idx));
    }
    return out;
}

}  // namespace hpcde::data
