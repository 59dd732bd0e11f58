#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "dip/errors.hpp"
#include "dip/rng.hpp"

namespace dip {

// 64-byte aligned storage for everything Eigen maps. Fixed alignment keeps
// vectorized kernels on one code path, so results are bit-identical across
// allocations and runs.
template <typename T, std::size_t Alignment>
struct AlignedAllocator {
    using value_type = T;
    AlignedAllocator() noexcept = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U, Alignment>&) noexcept {}
    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(Alignment)));
    }
    void deallocate(T* p, std::size_t) noexcept {
        ::operator delete(p, std::align_val_t(Alignment));
    }
    template <typename U>
    struct rebind { using other = AlignedAllocator<U, Alignment>; };
    bool operator==(const AlignedAllocator&) const noexcept { return true; }
    bool operator!=(const AlignedAllocator&) const noexcept { return false; }
};

using aligned_vector = std::vector<real, AlignedAllocator<real, 64>>;

// Dense CHW tensor of doubles. Images are tensors with 1 or 3 channels and
// values nominally in [0,1]; intermediate network activations use the same
// type without the range restriction.
class Tensor {
public:
    Tensor() = default;
    Tensor(int c, int h, int w) : c_(c), h_(h), w_(w),
        data_(static_cast<std::size_t>(c) * h * w, 0.0) {}

    static Tensor full(int c, int h, int w, real v) {
        Tensor t(c, h, w);
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }

    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    long size() const { return static_cast<long>(data_.size()); }
    long plane() const { return static_cast<long>(h_) * w_; }
    bool empty() const { return data_.empty(); }

    real* data() { return data_.data(); }
    const real* data() const { return data_.data(); }
    real* channel(int c) { return data_.data() + static_cast<std::size_t>(c) * plane(); }
    const real* channel(int c) const { return data_.data() + static_cast<std::size_t>(c) * plane(); }

    real& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x]; }
    real at(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x]; }
    real& operator[](long i) { return data_[i]; }
    real operator[](long i) const { return data_[i]; }

    bool same_shape(const Tensor& o) const {
        return c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
    }

    void fill(real v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(0.0); }

    // Reuses storage when the total size matches.
    void reshape_to(int c, int h, int w) {
        c_ = c; h_ = h; w_ = w;
        data_.resize(static_cast<std::size_t>(c) * h * w);
    }

    real sum() const;
    real mean() const { return empty() ? 0.0 : sum() / static_cast<real>(size()); }
    real min() const;
    real max() const;
    bool all_finite() const;

    Tensor& operator+=(const Tensor& o);
    Tensor& operator-=(const Tensor& o);
    Tensor& operator*=(real s);

private:
    int c_ = 0, h_ = 0, w_ = 0;
    aligned_vector data_;
};

using Image = Tensor;
using Rgb = std::array<real, 3>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

// y += s * x
void axpy(real s, const Tensor& x, Tensor& y);

Tensor clamp01(const Tensor& t);

// Extracts the top-left (h, w) window starting at (oy, ox).
Tensor crop(const Tensor& t, int oy, int ox, int h, int w);

Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& cat, int c_first, Tensor& a, Tensor& b);

// 2x2 average pooling with floor semantics (trailing odd row/col dropped).
Tensor avg_pool2(const Tensor& t);
// Adjoint of avg_pool2 into a (h, w) sized gradient.
Tensor avg_pool2_backward(const Tensor& g, int h, int w);

// Box mean with replicate padding over a (2r+1)^2 window, per channel.
Tensor box_mean(const Tensor& t, int radius);

// Area-average resize (exact fractional coverage); used for downscaling.
Tensor resize_area(const Tensor& t, int oh, int ow);
// Bilinear resize, half-pixel centers (align_corners = false).
Tensor resize_bilinear(const Tensor& t, int oh, int ow);

Tensor uniform_tensor(int c, int h, int w, real lo, real hi, Rng& rng);

} // namespace dip
