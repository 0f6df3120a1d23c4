#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "clcp/core/error.hpp"

namespace clcp {

using Shape = std::vector<std::size_t>;

[[nodiscard]] inline std::size_t element_count(const Shape& shape) noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

[[nodiscard]] inline std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out << (i ? "x" : "") << shape[i];
    }
    out << ']';
    return out.str();
}

/// Dense row-major complex tensor. Real and imaginary parts are stored
/// interleaved (std::complex layout); the explicit real/imag axis only
/// appears when a tensor is flattened into real features or serialized.
template <std::floating_point Real>
class BasicComplexTensor {
public:
    using real_type = Real;
    using value_type = std::complex<Real>;

    BasicComplexTensor() = default;

    explicit BasicComplexTensor(Shape shape)
        : shape_(std::move(shape)), data_(element_count(shape_)) {}

    BasicComplexTensor(Shape shape, std::vector<value_type> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        require(element_count(shape_) == data_.size(), ErrorCode::shape_mismatch,
                "shape " + shape_string(shape_) + " does not match " +
                    std::to_string(data_.size()) + " stored entries");
    }

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::span<value_type> data() noexcept { return data_; }
    [[nodiscard]] std::span<const value_type> data() const noexcept { return data_; }

    value_type& operator[](std::size_t i) noexcept { return data_[i]; }
    const value_type& operator[](std::size_t i) const noexcept { return data_[i]; }

    template <std::integral... Index>
    [[nodiscard]] std::size_t offset(Index... index) const noexcept {
        const std::size_t idx[] = {static_cast<std::size_t>(index)...};
        std::size_t flat = 0;
        for (std::size_t d = 0; d < sizeof...(Index); ++d) {
            flat = flat * shape_[d] + idx[d];
        }
        return flat;
    }

    template <std::integral... Index>
    value_type& at(Index... index) noexcept {
        return data_[offset(index...)];
    }

    template <std::integral... Index>
    const value_type& at(Index... index) const noexcept {
        return data_[offset(index...)];
    }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](const value_type& v) {
            return std::isfinite(v.real()) && std::isfinite(v.imag());
        });
    }

    [[nodiscard]] Real squared_norm() const noexcept {
        Real acc{0};
        for (const auto& v : data_) acc += std::norm(v);
        return acc;
    }

    template <std::floating_point Other>
    [[nodiscard]] BasicComplexTensor<Other> cast() const {
        std::vector<std::complex<Other>> out(data_.size());
        std::transform(data_.begin(), data_.end(), out.begin(), [](const value_type& v) {
            return std::complex<Other>(static_cast<Other>(v.real()), static_cast<Other>(v.imag()));
        });
        return BasicComplexTensor<Other>(shape_, std::move(out));
    }

    BasicComplexTensor& operator*=(value_type s) noexcept {
        for (auto& v : data_) v *= s;
        return *this;
    }

    bool operator==(const BasicComplexTensor&) const = default;

private:
    Shape shape_;
    std::vector<value_type> data_;
};

using ComplexTensor = BasicComplexTensor<double>;
using ComplexTensor32 = BasicComplexTensor<float>;

}  // namespace clcp
