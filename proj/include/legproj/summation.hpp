#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace legproj {

/// Neumaier's variant of Kahan summation: also compensates when the addend
/// is larger in magnitude than the running sum.
class KahanSum
{
  public:
    KahanSum() = default;
    explicit KahanSum(double initial) : sum_(initial) {}

    void add(double value) noexcept
    {
        const double t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value))
            comp_ += (sum_ - t) + value;
        else
            comp_ += (value - t) + sum_;
        sum_ = t;
    }

    KahanSum& operator+=(double value) noexcept
    {
        add(value);
        return *this;
    }

    KahanSum& operator+=(const KahanSum& other) noexcept
    {
        add(other.sum_);
        add(other.comp_);
        return *this;
    }

    double value() const noexcept { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Pairwise (balanced binary tree) reduction of per-partition accumulator
/// vectors. The tree shape depends only on the number of partitions, so the
/// result does not depend on how partitions were scheduled.
inline std::vector<KahanSum> tree_reduce(std::vector<std::vector<KahanSum>> parts)
{
    if (parts.empty())
        return {};
    for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
        for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
            auto& dst = parts[i];
            const auto& src = parts[i + stride];
            for (std::size_t k = 0; k < dst.size(); ++k)
                dst[k] += src[k];
        }
    }
    return std::move(parts.front());
}

}  // namespace legproj
