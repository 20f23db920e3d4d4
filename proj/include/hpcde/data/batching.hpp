#pragma once

#include "hpcde/data/event_sequence.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hpcde::data {

struct Split {
    std::vector<EventSequence> train;
    std::vector<EventSequence> test;
};

/// Seeded shuffle, then the first round(train_fraction * n) sequences train.
[[nodiscard]] Split split_dataset(const std::vector<EventSequence>& sequences,
                                  double train_fraction, std::uint64_t seed);

/// Padded mini-batch. Row r holds lengths[r] real events followed by padding;
/// mask is 1 exactly on real events.
struct Batch {
    std::size_t padded_length = 0;
    std::vector<std::size_t> source_index;
    std::vector<std::size_t> lengths;
    std::vector<std::size_t> types;
    std::vector<double> times;
    std::vector<std::uint8_t> mask;

    [[nodiscard]] std::size_t size() const noexcept { return lengths.size(); }
    /// The real events of row r (padding stripped via the mask).
    [[nodiscard]] EventSequence sequence(std::size_t r) const;
};

/// pad_to = 0 pads to the longest member.
[[nodiscard]] Batch make_batch(std::span<const EventSequence> sequences,
                               std::span<const std::size_t> indices, std::size_t pad_to = 0);

/// Fixed-size mini-batches over a training set, reshuffled every epoch from a
/// seed derived from (seed, epoch).
class BatchStream {
public:
    BatchStream(std::span<const EventSequence> sequences, std::size_t batch_size,
                std::uint64_t seed);

    [[nodiscard]] std::vector<std::vector<std::size_t>> epoch_order(std::size_t epoch) const;
    [[nodiscard]] std::vector<Batch> epoch(std::size_t epoch) const;
    [[nodiscard]] std::size_t batch_size() const noexcept { return batch_size_; }

private:
    std::span<const EventSequence> sequences_;
    std::size_t batch_size_;
    std::uint64_t seed_;
};

}  // namespace hpcde::data
