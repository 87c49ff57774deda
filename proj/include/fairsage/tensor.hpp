#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "fairsage/errors.hpp"

namespace fairsage {

// Dense row-major matrix of doubles, rank <= 2. Scalars are 1x1, vectors are
// 1xN or Nx1.
class Tensor {
public:
    Tensor() : rows_(0), cols_(0) {}
    Tensor(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_)
            throw NumericError("tensor buffer length does not match shape " + shape_str());
    }

    static Tensor scalar(double v) { return Tensor(1, 1, {v}); }
    static Tensor row(std::vector<double> v) {
        const std::size_t n = v.size();
        return Tensor(1, n, std::move(v));
    }
    static Tensor column(std::vector<double> v) {
        const std::size_t n = v.size();
        return Tensor(n, 1, std::move(v));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }
    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }

    double& at(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
};

// Ordered collection of named tensors. Order is part of the contract: both
// parameter initialization and checkpoint layout iterate it front to back.
class ParamSet {
public:
    ParamSet() = default;

    Tensor& add(const std::string& name, Tensor t) {
        for (const auto& e : entries_)
            if (e.first == name) throw NumericError("duplicate parameter name: " + name);
        entries_.emplace_back(name, std::move(t));
        return entries_.back().second;
    }

    bool has(const std::string& name) const {
        for (const auto& e : entries_)
            if (e.first == name) return true;
        return false;
    }

    Tensor& get(const std::string& name) {
        for (auto& e : entries_)
            if (e.first == name) return e.second;
        throw NumericError("unknown parameter: " + name);
    }
    const Tensor& get(const std::string& name) const {
        for (const auto& e : entries_)
            if (e.first == name) return e.second;
        throw NumericError("unknown parameter: " + name);
    }

    std::size_t size() const { return entries_.size(); }
    std::pair<std::string, Tensor>& operator[](std::size_t i) { return entries_[i]; }
    const std::pair<std::string, Tensor>& operator[](std::size_t i) const { return entries_[i]; }

    std::size_t index_of(const std::string& name) const {
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (entries_[i].first == name) return i;
        throw NumericError("unknown parameter: " + name);
    }

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
};

// Column-wise concatenation of equal-height matrices.
inline Tensor hstack(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows())
        throw NumericError("hstack needs equal heights, got " + a.shape_str() + " and " +
                           b.shape_str());
    Tensor out(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) out.at(r, c) = a.at(r, c);
        for (std::size_t c = 0; c < b.cols(); ++c) out.at(r, a.cols() + c) = b.at(r, c);
    }
    return out;
}

// Copies the listed rows of `m`, in the given order.
template <typename IndexRange>
Tensor select_rows(const Tensor& m, const IndexRange& rows) {
    Tensor out(rows.size(), m.cols());
    std::size_t r = 0;
    for (auto idx : rows) {
        if (static_cast<std::size_t>(idx) >= m.rows())
            throw NumericError("row selection out of range for " + m.shape_str());
        for (std::size_t c = 0; c < m.cols(); ++c)
            out.at(r, c) = m.at(static_cast<std::size_t>(idx), c);
        ++r;
    }
    return out;
}

}  // namespace fairsage
