#pragma once

// Finite sample spaces and their Boolean event ring.
//
// A history over (n configurations, N times) is an N-tuple of configuration
// indices in 1..n. The sample space enumerates all n^N histories in
// lexicographic order (first time slot most significant); events are subsets
// of that enumeration held as bitsets. Symmetric difference is ring addition,
// intersection is ring multiplication.

#include "util.hpp"

#include <boost/dynamic_bitset.hpp>

#include <cstddef>
#include <numeric>
#include <vector>

namespace qm {

struct History {
    std::vector<int> configs; // each in 1..n, length N

    std::size_t length() const { return configs.size(); }
    bool operator==(const History&) const = default;
};

class FiniteSampleSpace {
  public:
    FiniteSampleSpace(int n, int num_times) : n_(n), num_times_(num_times) {
        if (n < 1) throw UsageError("sample space needs n >= 1 configurations");
        if (num_times < 2) throw UsageError("sample space needs N >= 2 times");
        std::size_t s = 1;
        for (int k = 0; k < num_times; ++k) {
            if (s > (std::size_t{1} << 40) / static_cast<std::size_t>(n))
                throw UsageError("sample space n^N too large to enumerate");
            s *= static_cast<std::size_t>(n);
        }
        size_ = s;
    }

    int configs() const { return n_; }
    int times() const { return num_times_; }
    std::size_t size() const { return size_; }

    // lexicographic rank of a history; inverse of history_at
    std::size_t index_of(const History& h) const {
        if (static_cast<int>(h.length()) != num_times_)
            throw UsageError("history length does not match sample space");
        std::size_t idx = 0;
        for (int c : h.configs) {
            if (c < 1 || c > n_) throw UsageError("history configuration out of range");
            idx = idx * static_cast<std::size_t>(n_) + static_cast<std::size_t>(c - 1);
        }
        return idx;
    }

    History history_at(std::size_t idx) const {
        if (idx >= size_) throw UsageError("history index out of range");
        History h;
        h.configs.assign(static_cast<std::size_t>(num_times_), 1);
        for (int k = num_times_ - 1; k >= 0; --k) {
            h.configs[static_cast<std::size_t>(k)] = static_cast<int>(idx % static_cast<std::size_t>(n_)) + 1;
            idx /= static_cast<std::size_t>(n_);
        }
        return h;
    }

    bool operator==(const FiniteSampleSpace& o) const {
        return n_ == o.n_ && num_times_ == o.num_times_;
    }

  private:
    int n_;
    int num_times_;
    std::size_t size_;
};

class FiniteEvent {
  public:
    FiniteEvent() = default;
    explicit FiniteEvent(const FiniteSampleSpace& space)
        : n_(space.configs()), num_times_(space.times()), bits_(space.size()) {}

    static FiniteEvent empty(const FiniteSampleSpace& space) { return FiniteEvent(space); }

    static FiniteEvent full(const FiniteSampleSpace& space) {
        FiniteEvent e(space);
        e.bits_.set();
        return e;
    }

    static FiniteEvent singleton(const FiniteSampleSpace& space, const History& h) {
        FiniteEvent e(space);
        e.bits_.set(space.index_of(h));
        return e;
    }

    static FiniteEvent of_histories(const FiniteSampleSpace& space,
                                    const std::vector<History>& hs) {
        FiniteEvent e(space);
        for (const auto& h : hs) e.bits_.set(space.index_of(h));
        return e;
    }

    std::size_t space_size() const { return bits_.size(); }
    int space_configs() const { return n_; }
    int space_times() const { return num_times_; }

    bool contains(std::size_t idx) const { return bits_.test(idx); }
    std::size_t count() const { return bits_.count(); }
    bool is_empty() const { return bits_.none(); }
    bool is_full() const { return bits_.all(); }

    void insert(std::size_t idx) { bits_.set(idx); }

    // iterate set members
    template <typename Fn>
    void for_each_member(Fn&& fn) const {
        for (std::size_t i = bits_.find_first(); i != boost::dynamic_bitset<>::npos;
             i = bits_.find_next(i))
            fn(i);
    }

    std::vector<std::size_t> members() const {
        std::vector<std::size_t> out;
        out.reserve(count());
        for_each_member([&](std::size_t i) { out.push_back(i); });
        return out;
    }

    FiniteEvent complement() const {
        FiniteEvent e(*this);
        e.bits_.flip();
        return e;
    }

    bool disjoint_with(const FiniteEvent& o) const {
        check_same_space(o);
        return !bits_.intersects(o.bits_);
    }

    bool operator==(const FiniteEvent& o) const {
        return n_ == o.n_ && num_times_ == o.num_times_ && bits_ == o.bits_;
    }

    bool operator<(const FiniteEvent& o) const {
        if (n_ != o.n_) return n_ < o.n_;
        if (num_times_ != o.num_times_) return num_times_ < o.num_times_;
        return bits_ < o.bits_;
    }

    friend FiniteEvent ring_add(const FiniteEvent& a, const FiniteEvent& b) {
        a.check_same_space(b);
        FiniteEvent e(a);
        e.bits_ ^= b.bits_;
        return e;
    }

    friend FiniteEvent ring_mul(const FiniteEvent& a, const FiniteEvent& b) {
        a.check_same_space(b);
        FiniteEvent e(a);
        e.bits_ &= b.bits_;
        return e;
    }

    friend FiniteEvent set_union(const FiniteEvent& a, const FiniteEvent& b) {
        a.check_same_space(b);
        FiniteEvent e(a);
        e.bits_ |= b.bits_;
        return e;
    }

    friend FiniteEvent set_difference(const FiniteEvent& a, const FiniteEvent& b) {
        a.check_same_space(b);
        FiniteEvent e(a);
        e.bits_ -= b.bits_;
        return e;
    }

  private:
    void check_same_space(const FiniteEvent& o) const {
        if (n_ != o.n_ || num_times_ != o.num_times_ || bits_.size() != o.bits_.size())
            throw UsageError("events live on different sample spaces");
    }

    int n_ = 0;
    int num_times_ = 0;
    boost::dynamic_bitset<> bits_;
};

// Uniformly random event (each history in/out with probability 1/2).
inline FiniteEvent random_event(const FiniteSampleSpace& space, Rng& rng) {
    FiniteEvent e(space);
    for (std::size_t i = 0; i < space.size(); ++i)
        if (rng.next_u64() & 1u) e.insert(i);
    return e;
}

// Random history (uniform over the sample space).
inline History random_history(const FiniteSampleSpace& space, Rng& rng) {
    return space.history_at(rng.below(space.size()));
}

} // namespace qm
