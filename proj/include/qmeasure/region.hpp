#pragma once

// Position-space regions: finite unions of compact axis-aligned d-intervals,
// or complements of such unions. This is the decidable fragment the continuum
// event algebra is built over; every operation below is exact interval
// arithmetic.

#include "util.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <vector>

namespace qm {

// Compact axis-aligned box; lo[i] <= hi[i]. Zero-volume boxes count as empty.
struct Box {
    std::vector<double> lo, hi;

    Box() = default;
    Box(std::vector<double> l, std::vector<double> h) : lo(std::move(l)), hi(std::move(h)) {
        if (lo.size() != hi.size()) throw UsageError("box lo/hi dimension mismatch");
    }
    static Box interval(double a, double b) { return Box({a}, {b}); }

    std::size_t dim() const { return lo.size(); }

    bool degenerate() const {
        for (std::size_t i = 0; i < dim(); ++i)
            if (!(lo[i] < hi[i])) return true;
        return false;
    }

    double volume() const {
        double v = 1.0;
        for (std::size_t i = 0; i < dim(); ++i) v *= std::max(0.0, hi[i] - lo[i]);
        return v;
    }

    bool contains(const std::vector<double>& x) const {
        for (std::size_t i = 0; i < dim(); ++i)
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        return true;
    }

    bool operator==(const Box&) const = default;
};

inline std::optional<Box> box_intersection(const Box& a, const Box& b) {
    if (a.dim() != b.dim()) throw UsageError("box dimension mismatch");
    Box r = a;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        r.lo[i] = std::max(a.lo[i], b.lo[i]);
        r.hi[i] = std::min(a.hi[i], b.hi[i]);
        if (!(r.lo[i] < r.hi[i])) return std::nullopt;
    }
    return r;
}

// a \ b as disjoint boxes (axis-by-axis splitting; at most 2d pieces).
inline std::vector<Box> box_difference(const Box& a, const Box& b) {
    auto inter = box_intersection(a, b);
    if (!inter) return {a};
    std::vector<Box> out;
    Box core = a; // shrink towards the intersection, peeling slabs
    for (std::size_t i = 0; i < a.dim(); ++i) {
        if (core.lo[i] < inter->lo[i]) {
            Box slab = core;
            slab.hi[i] = inter->lo[i];
            if (!slab.degenerate()) out.push_back(slab);
            core.lo[i] = inter->lo[i];
        }
        if (inter->hi[i] < core.hi[i]) {
            Box slab = core;
            slab.lo[i] = inter->hi[i];
            if (!slab.degenerate()) out.push_back(slab);
            core.hi[i] = inter->hi[i];
        }
    }
    return out;
}

enum class RegionKind { BoundedUnion, ComplementOfBoundedUnion, Full };

// A region is either a finite union of compact boxes or the complement of one.
// Full is the complement of the empty union.
class Region {
  public:
    Region() = default; // empty 1-d region

    static Region empty(std::size_t dim = 1) { return Region(false, {}, dim); }
    static Region full(std::size_t dim = 1) { return Region(true, {}, dim); }

    static Region bounded_union(std::vector<Box> boxes) {
        if (boxes.empty()) throw UsageError("bounded_union needs at least one box; use empty()");
        std::size_t d = boxes.front().dim();
        return Region(false, std::move(boxes), d);
    }

    static Region complement_of(std::vector<Box> boxes) {
        if (boxes.empty()) return full(1);
        std::size_t d = boxes.front().dim();
        return Region(true, std::move(boxes), d);
    }

    static Region interval(double a, double b) { return bounded_union({Box::interval(a, b)}); }

    RegionKind kind() const {
        if (complemented_ && boxes_.empty()) return RegionKind::Full;
        return complemented_ ? RegionKind::ComplementOfBoundedUnion : RegionKind::BoundedUnion;
    }

    std::size_t dim() const { return dim_; }
    bool complemented() const { return complemented_; }
    const std::vector<Box>& boxes() const { return boxes_; }

    bool is_full() const { return complemented_ && normalized_empty_boxes(); }
    bool is_empty() const { return !complemented_ && normalized_empty_boxes(); }
    bool is_bounded() const { return !complemented_; }

    bool contains(const std::vector<double>& x) const {
        bool in_union = false;
        for (const auto& b : boxes_)
            if (b.contains(x)) {
                in_union = true;
                break;
            }
        return complemented_ ? !in_union : in_union;
    }

    bool contains1(double x) const { return contains(std::vector<double>{x}); }

    Region complement() const {
        Region r = *this;
        r.complemented_ = !r.complemented_;
        return r;
    }

    // Lebesgue measure of the bounded part (throws on co-bounded regions).
    double measure() const {
        if (complemented_) throw UsageError("measure of an unbounded region");
        double m = 0.0;
        for (const auto& b : disjoint_boxes()) m += b.volume();
        return m;
    }

    // Disjoint representation of the stored box union.
    std::vector<Box> disjoint_boxes() const {
        std::vector<Box> out;
        for (const auto& b : boxes_) {
            if (b.degenerate()) continue;
            std::vector<Box> pieces{b};
            for (const auto& placed : out) {
                std::vector<Box> next;
                for (const auto& p : pieces) {
                    auto diff = box_difference(p, placed);
                    next.insert(next.end(), diff.begin(), diff.end());
                }
                pieces = std::move(next);
            }
            out.insert(out.end(), pieces.begin(), pieces.end());
        }
        return out;
    }

    // Canonical form: disjoint, sorted; 1-d additionally merges touching
    // intervals, which makes equal 1-d sets structurally identical.
    Region canonical() const {
        std::vector<Box> d = disjoint_boxes();
        if (dim_ == 1) {
            std::sort(d.begin(), d.end(),
                      [](const Box& a, const Box& b) { return a.lo[0] < b.lo[0]; });
            std::vector<Box> merged;
            for (const auto& b : d) {
                if (!merged.empty() && b.lo[0] <= merged.back().hi[0]) {
                    merged.back().hi[0] = std::max(merged.back().hi[0], b.hi[0]);
                } else {
                    merged.push_back(b);
                }
            }
            d = std::move(merged);
        } else {
            std::sort(d.begin(), d.end(), [](const Box& a, const Box& b) {
                return std::lexicographical_compare(a.lo.begin(), a.lo.end(), b.lo.begin(),
                                                    b.lo.end()) ||
                       (a.lo == b.lo &&
                        std::lexicographical_compare(a.hi.begin(), a.hi.end(), b.hi.begin(),
                                                     b.hi.end()));
            });
        }
        Region r(complemented_, std::move(d), dim_);
        return r;
    }

    friend Region region_intersection(const Region& a, const Region& b) {
        a.check_dim(b);
        if (!a.complemented_ && !b.complemented_) {
            std::vector<Box> out;
            for (const auto& x : a.boxes_)
                for (const auto& y : b.boxes_)
                    if (auto i = box_intersection(x, y)) out.push_back(*i);
            return Region(false, std::move(out), a.dim_);
        }
        if (a.complemented_ && b.complemented_) {
            // (R^d \ S) ∩ (R^d \ T) = R^d \ (S ∪ T)
            std::vector<Box> out = a.boxes_;
            out.insert(out.end(), b.boxes_.begin(), b.boxes_.end());
            return Region(true, std::move(out), a.dim_);
        }
        const Region& bounded = a.complemented_ ? b : a;
        const Region& co = a.complemented_ ? a : b;
        // bounded \ (union of co's boxes)
        std::vector<Box> out;
        for (const auto& x : bounded.disjoint_boxes()) {
            std::vector<Box> pieces{x};
            for (const auto& hole : co.boxes_) {
                std::vector<Box> next;
                for (const auto& p : pieces) {
                    auto diff = box_difference(p, hole);
                    next.insert(next.end(), diff.begin(), diff.end());
                }
                pieces = std::move(next);
            }
            out.insert(out.end(), pieces.begin(), pieces.end());
        }
        return Region(false, std::move(out), bounded.dim_);
    }

    friend Region region_difference(const Region& a, const Region& b) {
        return region_intersection(a, b.complement());
    }

    // Set equality (exact; a bounded set never equals a co-bounded one).
    friend bool region_equal(const Region& a, const Region& b) {
        a.check_dim(b);
        if (a.complemented_ != b.complemented_) return false;
        if (a.complemented_) {
            // complements equal iff the removed unions are equal
            Region sa(false, a.boxes_, a.dim_), sb(false, b.boxes_, b.dim_);
            return region_equal(sa, sb);
        }
        return region_difference(a, b).is_empty() && region_difference(b, a).is_empty();
    }

    friend bool region_disjoint(const Region& a, const Region& b) {
        return region_intersection(a, b).is_empty();
    }

    bool operator==(const Region& o) const { return region_equal(*this, o); }

  private:
    Region(bool comp, std::vector<Box> boxes, std::size_t dim)
        : complemented_(comp), boxes_(std::move(boxes)), dim_(dim) {
        for (const auto& b : boxes_)
            if (b.dim() != dim_) throw UsageError("region boxes have mixed dimensions");
    }

    bool normalized_empty_boxes() const {
        for (const auto& b : boxes_)
            if (!b.degenerate()) return false;
        return true;
    }

    void check_dim(const Region& o) const {
        if (dim_ != o.dim_) throw UsageError("regions have different dimensions");
    }

    bool complemented_ = false;
    std::vector<Box> boxes_;
    std::size_t dim_ = 1;
};

} // namespace qm
