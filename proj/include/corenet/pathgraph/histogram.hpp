#ifndef CORENET_PATHGRAPH_HISTOGRAM_HPP
#define CORENET_PATHGRAPH_HISTOGRAM_HPP

#include <map>
#include <utility>

#include "corenet/error.hpp"
#include "corenet/exact.hpp"

namespace corenet::pathgraph {

enum class HistogramMode { unnormalized, normalized };

// Exact histogram of effective path lengths: length -> mass. In
// unnormalized mode every mass is a non-negative integer (a path count);
// in normalized mode masses are non-negative rationals. Zero entries are
// never stored.
class PathHistogram {
public:
    explicit PathHistogram(HistogramMode mode = HistogramMode::unnormalized) : mode_(mode) {}

    HistogramMode mode() const { return mode_; }

    static PathHistogram unit(HistogramMode mode) {
        PathHistogram h(mode);
        h.add(0, 1);
        return h;
    }

    void add(int length, const BigRat& mass) {
        if (mass == 0) return;
        auto [it, inserted] = counts_.emplace(length, mass);
        if (!inserted) {
            it->second += mass;
            if (it->second == 0) counts_.erase(it);
        }
    }

    void add(const PathHistogram& other) {
        for (const auto& [len, mass] : other.counts_) add(len, mass);
    }

    // Shift all lengths by +delta (an active unit was traversed).
    void shift(int delta = 1) {
        if (delta == 0) return;
        std::map<int, BigRat> shifted;
        for (auto& [len, mass] : counts_) shifted.emplace(len + delta, std::move(mass));
        counts_ = std::move(shifted);
    }

    void scale(const BigRat& factor) {
        if (factor == 0) {
            counts_.clear();
            return;
        }
        for (auto& [len, mass] : counts_) mass *= factor;
    }

    BigRat total_mass() const {
        BigRat total = 0;
        for (const auto& [len, mass] : counts_) total += mass;
        return total;
    }

    bool empty() const { return counts_.empty(); }

    size_t support_size() const { return counts_.size(); }

    int max_length() const {
        if (counts_.empty()) return 0;
        return counts_.rbegin()->first;
    }

    BigRat at(int length) const {
        const auto it = counts_.find(length);
        return it == counts_.end() ? BigRat(0) : it->second;
    }

    bool integral() const {
        for (const auto& [len, mass] : counts_)
            if (!is_integral(mass)) return false;
        return true;
    }

    // Exact weighted mean of lengths.
    BigRat apl_exact() const {
        BigRat weighted = 0;
        BigRat total = 0;
        for (const auto& [len, mass] : counts_) {
            weighted += BigRat(len) * mass;
            total += mass;
        }
        if (total == 0) throw EmptyHistogram("APL of a histogram with total mass 0");
        return weighted / total;
    }

    const std::map<int, BigRat>& counts() const { return counts_; }

    friend bool operator==(const PathHistogram& a, const PathHistogram& b) {
        return a.mode_ == b.mode_ && a.counts_ == b.counts_;
    }

private:
    HistogramMode mode_;
    std::map<int, BigRat> counts_;
};

// Average path length as a double.
inline double apl(const PathHistogram& hist) {
    return hist.apl_exact().convert_to<double>();
}

}  // namespace corenet::pathgraph

#endif  // CORENET_PATHGRAPH_HISTOGRAM_HPP
