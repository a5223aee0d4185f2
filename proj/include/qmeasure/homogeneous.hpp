#pragma once

// Cylinder events over trajectories: a homogeneous event fixes the particle's
// position set at finitely many times; the continuum event algebra is the set
// of finite unions of those, kept in canonical mutually-disjoint form.

#include "region.hpp"
#include "util.hpp"

#include <algorithm>
#include <set>
#include <vector>

namespace qm {

class HomogeneousEvent {
  public:
    HomogeneousEvent(std::vector<double> times, std::vector<Region> regions)
        : times_(std::move(times)), regions_(std::move(regions)) {
        if (times_.size() != regions_.size())
            throw UsageError("homogeneous event times/regions length mismatch");
        if (times_.size() < 2) throw UsageError("homogeneous event needs at least two times");
        if (times_.front() != 0.0) throw UsageError("homogeneous event must start at t = 0");
        for (std::size_t k = 1; k < times_.size(); ++k)
            if (!(times_[k - 1] < times_[k]))
                throw UsageError("homogeneous event times must strictly increase");
        std::size_t d = regions_.front().dim();
        for (const auto& r : regions_)
            if (r.dim() != d) throw UsageError("homogeneous event regions have mixed dimensions");
    }

    static HomogeneousEvent all(double T, std::size_t dim = 1) {
        return HomogeneousEvent({0.0, T}, {Region::full(dim), Region::full(dim)});
    }

    const std::vector<double>& times() const { return times_; }
    const std::vector<Region>& regions() const { return regions_; }
    std::size_t num_times() const { return times_.size(); }
    double truncation_time() const { return times_.back(); }
    std::size_t dim() const { return regions_.front().dim(); }

    const Region& region_at_slot(std::size_t k) const { return regions_.at(k); }

    // an event is the empty set iff some slot's region is empty
    bool is_empty() const {
        for (const auto& r : regions_)
            if (r.is_empty()) return true;
        return false;
    }

    // trajectory membership, sampled as positions at this event's times
    bool contains(const std::vector<std::vector<double>>& positions_at_times) const {
        if (positions_at_times.size() != times_.size())
            throw UsageError("trajectory sample count does not match event times");
        for (std::size_t k = 0; k < times_.size(); ++k)
            if (!regions_[k].contains(positions_at_times[k])) return false;
        return true;
    }

    // membership of a trajectory given on a grid of times that contains ours
    bool contains_on(const std::vector<double>& grid_times,
                     const std::vector<std::vector<double>>& positions) const {
        for (std::size_t k = 0; k < times_.size(); ++k) {
            auto it = std::lower_bound(grid_times.begin(), grid_times.end(), times_[k]);
            if (it == grid_times.end() || *it != times_[k])
                throw UsageError("event time missing from trajectory grid");
            std::size_t idx = static_cast<std::size_t>(it - grid_times.begin());
            if (!regions_[k].contains(positions[idx])) return false;
        }
        return true;
    }

    // Canonical representative: interior Full slots dropped, regions
    // canonicalized. First and last slots always stay (they carry t=0 and T).
    HomogeneousEvent canonical() const {
        std::vector<double> ts;
        std::vector<Region> rs;
        for (std::size_t k = 0; k < times_.size(); ++k) {
            bool interior = k > 0 && k + 1 < times_.size();
            if (interior && regions_[k].is_full()) continue;
            ts.push_back(times_[k]);
            rs.push_back(regions_[k].canonical());
        }
        return HomogeneousEvent(std::move(ts), std::move(rs));
    }

    bool operator==(const HomogeneousEvent& o) const {
        HomogeneousEvent a = canonical(), b = o.canonical();
        if (a.times_ != b.times_) return false;
        for (std::size_t k = 0; k < a.regions_.size(); ++k)
            if (!region_equal(a.regions_[k], b.regions_[k])) return false;
        return true;
    }

  private:
    std::vector<double> times_;
    std::vector<Region> regions_;
};

// Re-represent both events on the merged time grid, inserting Full slots.
inline std::pair<HomogeneousEvent, HomogeneousEvent>
pad_to_common_times(const HomogeneousEvent& a, const HomogeneousEvent& b) {
    if (a.truncation_time() != b.truncation_time())
        throw UsageError("events have different truncation times");
    if (a.dim() != b.dim()) throw UsageError("events have different dimensions");
    std::vector<double> merged;
    std::merge(a.times().begin(), a.times().end(), b.times().begin(), b.times().end(),
               std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    auto pad = [&](const HomogeneousEvent& e) {
        std::vector<Region> rs;
        rs.reserve(merged.size());
        std::size_t k = 0;
        for (double t : merged) {
            if (k < e.times().size() && e.times()[k] == t) {
                rs.push_back(e.regions()[k]);
                ++k;
            } else {
                rs.push_back(Region::full(e.dim()));
            }
        }
        return HomogeneousEvent(merged, std::move(rs));
    };
    return {pad(a), pad(b)};
}

// Slot-wise intersection on the common time grid.
inline HomogeneousEvent homogeneous_intersection(const HomogeneousEvent& a,
                                                 const HomogeneousEvent& b) {
    auto [pa, pb] = pad_to_common_times(a, b);
    std::vector<Region> rs;
    rs.reserve(pa.num_times());
    for (std::size_t k = 0; k < pa.num_times(); ++k)
        rs.push_back(region_intersection(pa.regions()[k], pb.regions()[k]));
    return HomogeneousEvent(pa.times(), std::move(rs));
}

inline bool homogeneous_disjoint(const HomogeneousEvent& a, const HomogeneousEvent& b) {
    return homogeneous_intersection(a, b).is_empty();
}

// Complement of a homogeneous event as <= 2^N - 1 mutually disjoint
// homogeneous pieces: for every nonempty subset S of slots, take the slot
// complement on S and the original region elsewhere.
inline std::vector<HomogeneousEvent> homogeneous_complement(const HomogeneousEvent& e) {
    const std::size_t n = e.num_times();
    std::vector<HomogeneousEvent> out;
    for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
        std::vector<Region> rs;
        rs.reserve(n);
        bool empty = false;
        for (std::size_t k = 0; k < n; ++k) {
            Region r = (mask >> k) & 1u ? e.regions()[k].complement() : e.regions()[k];
            if (r.is_empty()) {
                empty = true;
                break;
            }
            rs.push_back(std::move(r));
        }
        if (!empty) out.emplace_back(e.times(), std::move(rs));
    }
    return out;
}

// a \ b as mutually disjoint homogeneous pieces.
inline std::vector<HomogeneousEvent> homogeneous_difference(const HomogeneousEvent& a,
                                                            const HomogeneousEvent& b) {
    auto [pa, pb] = pad_to_common_times(a, b);
    std::vector<HomogeneousEvent> out;
    for (const auto& piece : homogeneous_complement(pb)) {
        HomogeneousEvent h = homogeneous_intersection(pa, piece);
        if (!h.is_empty()) out.push_back(std::move(h));
    }
    return out;
}

// Finite union of mutually disjoint homogeneous events sharing a truncation time.
class ContinuumEvent {
  public:
    explicit ContinuumEvent(std::vector<HomogeneousEvent> parts) : parts_(std::move(parts)) {
        if (parts_.empty()) throw UsageError("continuum event needs at least one part");
        for (std::size_t i = 0; i < parts_.size(); ++i)
            for (std::size_t j = i + 1; j < parts_.size(); ++j)
                if (!homogeneous_disjoint(parts_[i], parts_[j]))
                    throw UsageError("continuum event parts must be mutually disjoint");
    }

    static ContinuumEvent single(HomogeneousEvent e) {
        return ContinuumEvent(std::vector<HomogeneousEvent>{std::move(e)});
    }

    const std::vector<HomogeneousEvent>& parts() const { return parts_; }
    double truncation_time() const { return parts_.front().truncation_time(); }
    std::size_t dim() const { return parts_.front().dim(); }

    bool contains_on(const std::vector<double>& grid_times,
                     const std::vector<std::vector<double>>& positions) const {
        for (const auto& p : parts_)
            if (p.contains_on(grid_times, positions)) return true;
        return false;
    }

    bool operator==(const ContinuumEvent& o) const;

  private:
    std::vector<HomogeneousEvent> parts_;
};

// The Boolean identity α∪β∪γ∪... = α + (1+α)β + (1+α)(1+β)γ + ... realized on
// homogeneous parts: the k-th input contributes its pieces minus all earlier
// inputs, and every output pair is disjoint.
inline ContinuumEvent disjoint_decomposition(const std::vector<HomogeneousEvent>& parts) {
    if (parts.empty()) throw UsageError("disjoint_decomposition needs a nonempty list");
    std::vector<HomogeneousEvent> out;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        std::vector<HomogeneousEvent> pieces{parts[k]};
        for (std::size_t j = 0; j < k; ++j) {
            std::vector<HomogeneousEvent> next;
            for (const auto& p : pieces) {
                auto diff = homogeneous_difference(p, parts[j]);
                next.insert(next.end(), diff.begin(), diff.end());
            }
            pieces = std::move(next);
        }
        for (auto& p : pieces)
            if (!p.is_empty()) out.push_back(std::move(p));
    }
    if (out.empty()) throw UsageError("disjoint_decomposition of an empty union");
    return ContinuumEvent(std::move(out));
}

// Union of two continuum events, re-decomposed into disjoint parts.
inline ContinuumEvent continuum_union(const ContinuumEvent& a, const ContinuumEvent& b) {
    std::vector<HomogeneousEvent> all = a.parts();
    all.insert(all.end(), b.parts().begin(), b.parts().end());
    return disjoint_decomposition(all);
}

inline bool ContinuumEvent::operator==(const ContinuumEvent& o) const {
    // A == B iff A \ B and B \ A are empty, piece by piece.
    auto minus_empty = [](const std::vector<HomogeneousEvent>& xs,
                          const std::vector<HomogeneousEvent>& ys) {
        for (const auto& x : xs) {
            std::vector<HomogeneousEvent> pieces{x};
            for (const auto& y : ys) {
                std::vector<HomogeneousEvent> next;
                for (const auto& p : pieces) {
                    auto diff = homogeneous_difference(p, y);
                    next.insert(next.end(), diff.begin(), diff.end());
                }
                pieces = std::move(next);
            }
            for (const auto& p : pieces)
                if (!p.is_empty()) return false;
        }
        return true;
    };
    return minus_empty(parts_, o.parts_) && minus_empty(o.parts_, parts_);
}

// Ordering for use as FreeVector keys: canonical forms compared structurally.
inline bool continuum_event_less(const ContinuumEvent& a, const ContinuumEvent& b) {
    auto key = [](const ContinuumEvent& e) {
        std::vector<std::vector<double>> rows;
        for (const auto& p : e.parts()) {
            HomogeneousEvent c = p.canonical();
            std::vector<double> row;
            row.insert(row.end(), c.times().begin(), c.times().end());
            row.push_back(-1.0); // separator
            for (const auto& r : c.regions()) {
                row.push_back(r.complemented() ? 1.0 : 0.0);
                for (const auto& bx : r.boxes()) {
                    row.insert(row.end(), bx.lo.begin(), bx.lo.end());
                    row.insert(row.end(), bx.hi.begin(), bx.hi.end());
                }
                row.push_back(-2.0);
            }
            rows.push_back(std::move(row));
        }
        std::sort(rows.begin(), rows.end());
        return rows;
    };
    return key(a) < key(b);
}

} // namespace qm
