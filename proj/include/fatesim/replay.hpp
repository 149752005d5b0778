// fatesim/replay.hpp - FIFO experience replay
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace fatesim {

struct TransitionRecord {
    std::vector<double> state;
    std::array<double, 3> action{0.0, 0.0, 0.0};
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;  // true only for a real final state (crash)
};

// Fixed-capacity ring with strictly FIFO eviction and uniform sampling.
// Sampling is without replacement once the buffer holds a full batch.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 50000) : capacity_(capacity) {
        if (capacity_ == 0) throw std::invalid_argument("capacity must be positive");
        storage_.reserve(capacity_);
    }

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }

    void push(TransitionRecord record) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(record));
        } else {
            storage_[write_] = std::move(record);
            write_ = (write_ + 1) % capacity_;
        }
    }

    // i-th record in FIFO order, 0 = oldest.
    const TransitionRecord& at_fifo(std::size_t i) const {
        if (i >= storage_.size()) throw std::out_of_range("replay index out of range");
        if (storage_.size() < capacity_) return storage_[i];
        return storage_[(write_ + i) % capacity_];
    }

    std::vector<const TransitionRecord*> sample(std::size_t batch, std::mt19937_64& rng) const {
        if (storage_.empty()) throw std::logic_error("sampling from an empty replay buffer");
        std::vector<const TransitionRecord*> out;
        out.reserve(batch);
        std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
        if (storage_.size() < batch) {
            for (std::size_t i = 0; i < batch; ++i) out.push_back(&storage_[pick(rng)]);
            return out;
        }
        std::unordered_set<std::size_t> chosen;
        while (out.size() < batch) {
            std::size_t idx = pick(rng);
            if (chosen.insert(idx).second) out.push_back(&storage_[idx]);
        }
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t write_ = 0;
    std::vector<TransitionRecord> storage_;
};

}  // namespace fatesim
