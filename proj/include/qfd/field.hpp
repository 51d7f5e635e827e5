#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "qfd/error.hpp"
#include "qfd/grid.hpp"

namespace qfd {

using complex = std::complex<double>;

/// Values sampled on every node of a grid.
template <typename T>
class Field {
public:
    using value_type = T;

    Field() = default;
    explicit Field(Grid grid, T fill = T{}) : grid_(std::move(grid)), values_(grid_.size(), fill) {}
    Field(Grid grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_.size()) throw InvalidArgument("field value count does not match grid");
    }

    [[nodiscard]] const Grid& grid() const { return grid_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }

    T& operator[](std::size_t k) { return values_[k]; }
    const T& operator[](std::size_t k) const { return values_[k]; }
    T& operator()(std::size_t i, std::size_t j) { return values_[i * grid_.axis(1).n_points + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return values_[i * grid_.axis(1).n_points + j]; }

    [[nodiscard]] std::span<T> values() { return values_; }
    [[nodiscard]] std::span<const T> values() const { return values_; }
    [[nodiscard]] std::vector<T>& data() { return values_; }
    [[nodiscard]] const std::vector<T>& data() const { return values_; }

    auto begin() { return values_.begin(); }
    auto end() { return values_.end(); }
    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

    Field& operator*=(T s) {
        for (auto& v : values_) v *= s;
        return *this;
    }

private:
    Grid grid_;
    std::vector<T> values_;
};

using ComplexField = Field<complex>;
using RealField = Field<double>;
using MaskField = Field<std::uint8_t>;

}  // namespace qfd
