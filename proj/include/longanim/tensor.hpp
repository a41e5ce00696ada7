#pragma once

// Dense f32 tensors, seeded randomness, and the handful of numeric kernels
// the rest of the library is built from.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace longanim {

using Shape = std::vector<std::size_t>;

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition (wrong layer, wrong stage, ...).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

inline std::size_t shape_numel(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

class Tensor {
   public:
    Tensor() = default;

    explicit Tensor(Shape dims, float fill = 0.0f)
        : dims_(std::move(dims)), data_(shape_numel(dims_), fill) {}

    Tensor(Shape dims, std::vector<float> data) : dims_(std::move(dims)), data_(std::move(data)) {
        if (shape_numel(dims_) != data_.size()) {
            throw ShapeError("tensor: dims " + shape_str(dims_) + " do not match " +
                             std::to_string(data_.size()) + " values");
        }
    }

    const Shape& dims() const { return dims_; }
    std::size_t ndim() const { return dims_.size(); }
    std::size_t dim(std::size_t i) const { return dims_.at(i); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }
    float* ptr() { return data_.data(); }
    const float* ptr() const { return data_.data(); }
    const std::vector<float>& vec() const { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    float& at(std::size_t r, std::size_t c) { return data_[r * dims_.back() + c]; }
    float at(std::size_t r, std::size_t c) const { return data_[r * dims_.back() + c]; }

    // Row `r` of a tensor viewed as [rows, last_dim].
    std::span<float> row(std::size_t r) {
        const std::size_t w = dims_.back();
        return {data_.data() + r * w, w};
    }
    std::span<const float> row(std::size_t r) const {
        const std::size_t w = dims_.back();
        return {data_.data() + r * w, w};
    }
    std::size_t rows() const { return dims_.empty() ? 0 : data_.size() / dims_.back(); }
    std::size_t cols() const { return dims_.empty() ? 0 : dims_.back(); }

    Tensor reshaped(Shape dims) const {
        if (shape_numel(dims) != data_.size()) {
            throw ShapeError("reshape: " + shape_str(dims_) + " -> " + shape_str(dims));
        }
        return Tensor(std::move(dims), data_);
    }

    void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Tensor& o) const { return dims_ == o.dims_ && data_ == o.data_; }

   private:
    Shape dims_;
    std::vector<float> data_;
};

inline void require_finite(const Tensor& t, const char* op) {
    for (float v : t.data()) {
        if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite value produced");
    }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.dims() != b.dims()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.dims()) + " vs " +
                         shape_str(b.dims()));
    }
}

// ---------------------------------------------------------------------------
// Rng: mt19937_64 engine with portable uniform/normal transforms. The
// standard distribution objects are implementation-defined, so they are not
// used anywhere a stream has to be reproducible.

class Rng {
   public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: empty range");
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Tensor normal_tensor(Shape dims, float scale = 1.0f) {
        Tensor t(std::move(dims));
        for (auto& v : t.data()) v = static_cast<float>(normal()) * scale;
        return t;
    }

    Tensor uniform_tensor(Shape dims, float lo, float hi) {
        Tensor t(std::move(dims));
        for (auto& v : t.data()) v = static_cast<float>(uniform(lo, hi));
        return t;
    }

    // Independent child stream, reproducible from (seed, stream).
    Rng fork(std::uint64_t stream) const {
        std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return Rng(z ^ (z >> 31));
    }

   private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Raw kernels. Row-major; Eigen does the blocking.

namespace kernel {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using CMapM = Eigen::Map<const RowMat>;

// c[m,n] (+)= a[m,k] * b[k,n]
inline void gemm_nn(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
                    std::size_t n, bool accumulate = false) {
    CMapM A(a, m, k);
    CMapM B(b, k, n);
    MapM C(c, m, n);
    if (accumulate) {
        C.noalias() += A * B;
    } else {
        C.noalias() = A * B;
    }
}

// c[m,n] (+)= a[m,k] * b[n,k]^T
inline void gemm_nt(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
                    std::size_t n, bool accumulate = false) {
    CMapM A(a, m, k);
    CMapM B(b, n, k);
    MapM C(c, m, n);
    if (accumulate) {
        C.noalias() += A * B.transpose();
    } else {
        C.noalias() = A * B.transpose();
    }
}

// c[m,n] (+)= a[k,m]^T * b[k,n]
inline void gemm_tn(const float* a, const float* b, float* c, std::size_t m, std::size_t k,
                    std::size_t n, bool accumulate = false) {
    CMapM A(a, k, m);
    CMapM B(b, k, n);
    MapM C(c, m, n);
    if (accumulate) {
        C.noalias() += A.transpose() * B;
    } else {
        C.noalias() = A.transpose() * B;
    }
}

inline void softmax_row(float* x, std::size_t n) {
    float mx = x[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - mx);
        sum += x[i];
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (std::size_t i = 0; i < n; ++i) x[i] *= inv;
}

}  // namespace kernel

// ---------------------------------------------------------------------------
// Tensor operations.

// Matrix product, batched over identical leading dims. A 2-D `b` is shared
// across all batches of `a`.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() < 2 || b.ndim() < 2) throw ShapeError("matmul: operands must be at least 2-D");
    const std::size_t m = a.dim(a.ndim() - 2), k = a.dim(a.ndim() - 1);
    const std::size_t kb = b.dim(b.ndim() - 2), n = b.dim(b.ndim() - 1);
    if (k != kb) {
        throw ShapeError("matmul: inner dims disagree " + shape_str(a.dims()) + " x " +
                         shape_str(b.dims()));
    }
    const Shape lead_a(a.dims().begin(), a.dims().end() - 2);
    const Shape lead_b(b.dims().begin(), b.dims().end() - 2);
    if (!lead_b.empty() && lead_a != lead_b) {
        throw ShapeError("matmul: batch dims disagree " + shape_str(a.dims()) + " x " +
                         shape_str(b.dims()));
    }
    Shape out_dims = lead_a;
    out_dims.push_back(m);
    out_dims.push_back(n);
    Tensor out(out_dims);
    const std::size_t batches = shape_numel(lead_a);
    for (std::size_t i = 0; i < batches; ++i) {
        const float* bp = lead_b.empty() ? b.ptr() : b.ptr() + i * k * n;
        kernel::gemm_nn(a.ptr() + i * m * k, bp, out.ptr() + i * m * n, m, k, n);
    }
    require_finite(out, "matmul");
    return out;
}

inline Tensor transpose2d(const Tensor& a) {
    if (a.ndim() != 2) throw ShapeError("transpose2d: expected 2-D");
    Tensor out({a.dim(1), a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < a.dim(1); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

namespace detail {
// (outer, extent, inner) decomposition around `axis`.
struct AxisSplit {
    std::size_t outer, extent, inner;
};
inline AxisSplit split_axis(const Shape& dims, std::size_t axis) {
    if (axis >= dims.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range");
    AxisSplit s{1, dims[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) s.outer *= dims[i];
    for (std::size_t i = axis + 1; i < dims.size(); ++i) s.inner *= dims[i];
    return s;
}
}  // namespace detail

inline Tensor softmax(const Tensor& x, std::size_t axis) {
    const auto s = detail::split_axis(x.dims(), axis);
    Tensor out = x;
    std::vector<float> buf(s.extent);
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
            const std::size_t base = o * s.extent * s.inner + i;
            for (std::size_t e = 0; e < s.extent; ++e) buf[e] = x[base + e * s.inner];
            kernel::softmax_row(buf.data(), s.extent);
            for (std::size_t e = 0; e < s.extent; ++e) out[base + e * s.inner] = buf[e];
        }
    }
    require_finite(out, "softmax");
    return out;
}

// Normalizes over the last axis; gain/bias have the last axis' extent.
inline Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps = 1e-5f) {
    const std::size_t w = x.cols();
    if (gain.size() != w || bias.size() != w) throw ShapeError("layer_norm: gain/bias width mismatch");
    Tensor out(x.dims());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto in = x.row(r);
        double mean = 0.0;
        for (float v : in) mean += v;
        mean /= static_cast<double>(w);
        double var = 0.0;
        for (float v : in) var += (v - mean) * (v - mean);
        var /= static_cast<double>(w);
        const double inv = 1.0 / std::sqrt(var + eps);
        auto o = out.row(r);
        for (std::size_t i = 0; i < w; ++i)
            o[i] = static_cast<float>((in[i] - mean) * inv) * gain[i] + bias[i];
    }
    require_finite(out, "layer_norm");
    return out;
}

template <class F>
Tensor zip_with(const Tensor& a, const Tensor& b, F f, const char* op) {
    require_same_shape(a, b, op);
    Tensor out(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    require_finite(out, op);
    return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    return zip_with(a, b, [](float x, float y) { return x + y; }, "add");
}
inline Tensor sub(const Tensor& a, const Tensor& b) {
    return zip_with(a, b, [](float x, float y) { return x - y; }, "sub");
}
inline Tensor mul(const Tensor& a, const Tensor& b) {
    return zip_with(a, b, [](float x, float y) { return x * y; }, "mul");
}
inline Tensor scale(const Tensor& a, float s) {
    Tensor out = a;
    for (auto& v : out.data()) v *= s;
    require_finite(out, "scale");
    return out;
}
inline Tensor tanh(const Tensor& a) {
    Tensor out = a;
    for (auto& v : out.data()) v = std::tanh(v);
    return out;
}

// a += s * b
inline void axpy(Tensor& a, float s, const Tensor& b) {
    require_same_shape(a, b, "axpy");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

inline Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t len) {
    const auto s = detail::split_axis(x.dims(), axis);
    if (start + len > s.extent) {
        throw ShapeError("slice: [" + std::to_string(start) + ", " + std::to_string(start + len) +
                         ") exceeds extent " + std::to_string(s.extent));
    }
    Shape dims = x.dims();
    dims[axis] = len;
    Tensor out(dims);
    for (std::size_t o = 0; o < s.outer; ++o) {
        const float* src = x.ptr() + (o * s.extent + start) * s.inner;
        std::copy(src, src + len * s.inner, out.ptr() + o * len * s.inner);
    }
    return out;
}

inline Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    Shape dims = parts.front().dims();
    if (axis >= dims.size()) throw ShapeError("concat: axis out of range");
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.ndim() != dims.size()) throw ShapeError("concat: rank mismatch");
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (i != axis && p.dim(i) != dims[i]) {
                throw ShapeError("concat: mismatched dim " + std::to_string(i) + " " +
                                 shape_str(p.dims()) + " vs " + shape_str(dims));
            }
        }
        total += p.dim(axis);
    }
    dims[axis] = total;
    Tensor out(dims);
    const auto s = detail::split_axis(dims, axis);
    for (std::size_t o = 0; o < s.outer; ++o) {
        std::size_t off = 0;
        for (const auto& p : parts) {
            const std::size_t chunk = p.dim(axis) * s.inner;
            const float* src = p.ptr() + o * chunk;
            std::copy(src, src + chunk, out.ptr() + o * total * s.inner + off);
            off += chunk;
        }
    }
    return out;
}

inline Tensor pad(const Tensor& x, std::size_t axis, std::size_t before, std::size_t after,
                  float value = 0.0f) {
    const auto s = detail::split_axis(x.dims(), axis);
    Shape dims = x.dims();
    dims[axis] = s.extent + before + after;
    Tensor out(dims, value);
    for (std::size_t o = 0; o < s.outer; ++o) {
        const float* src = x.ptr() + o * s.extent * s.inner;
        std::copy(src, src + s.extent * s.inner, out.ptr() + (o * dims[axis] + before) * s.inner);
    }
    return out;
}

// ---------------------------------------------------------------------------
// 2-D DFT with unitary normalization (1/sqrt(H*W) both ways).

struct ComplexTensor {
    Tensor re;
    Tensor im;
};

namespace detail {
inline void dft1(std::vector<double>& re, std::vector<double>& im, std::size_t n, bool inverse,
                 std::vector<double>& tr, std::vector<double>& ti) {
    // radix-2 when possible, direct sum otherwise
    if (n > 1 && (n & (n - 1)) == 0) {
        for (std::size_t i = 1, j = 0; i < n; ++i) {
            std::size_t bit = n >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            if (i < j) {
                std::swap(re[i], re[j]);
                std::swap(im[i], im[j]);
            }
        }
        for (std::size_t len = 2; len <= n; len <<= 1) {
            const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
            for (std::size_t i = 0; i < n; i += len) {
                for (std::size_t k = 0; k < len / 2; ++k) {
                    const double c = std::cos(ang * static_cast<double>(k));
                    const double s = std::sin(ang * static_cast<double>(k));
                    const std::size_t a = i + k, b = i + k + len / 2;
                    const double xr = re[b] * c - im[b] * s;
                    const double xi = re[b] * s + im[b] * c;
                    re[b] = re[a] - xr;
                    im[b] = im[a] - xi;
                    re[a] += xr;
                    im[a] += xi;
                }
            }
        }
        return;
    }
    tr.assign(n, 0.0);
    ti.assign(n, 0.0);
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = sign * 2.0 * M_PI * static_cast<double>((k * j) % n) / static_cast<double>(n);
            tr[k] += re[j] * std::cos(ang) - im[j] * std::sin(ang);
            ti[k] += re[j] * std::sin(ang) + im[j] * std::cos(ang);
        }
    }
    re = tr;
    im = ti;
}
}  // namespace detail

// In-place unitary 2-D transform on double buffers of h*w values.
inline void dft2_inplace(std::vector<double>& re, std::vector<double>& im, std::size_t h,
                         std::size_t w, bool inverse) {
    std::vector<double> lr, li, tr, ti;
    lr.resize(w);
    li.resize(w);
    for (std::size_t y = 0; y < h; ++y) {
        std::copy_n(re.begin() + y * w, w, lr.begin());
        std::copy_n(im.begin() + y * w, w, li.begin());
        detail::dft1(lr, li, w, inverse, tr, ti);
        std::copy_n(lr.begin(), w, re.begin() + y * w);
        std::copy_n(li.begin(), w, im.begin() + y * w);
    }
    lr.resize(h);
    li.resize(h);
    for (std::size_t x = 0; x < w; ++x) {
        for (std::size_t y = 0; y < h; ++y) {
            lr[y] = re[y * w + x];
            li[y] = im[y * w + x];
        }
        detail::dft1(lr, li, h, inverse, tr, ti);
        for (std::size_t y = 0; y < h; ++y) {
            re[y * w + x] = lr[y];
            im[y * w + x] = li[y];
        }
    }
    const double norm = 1.0 / std::sqrt(static_cast<double>(h * w));
    for (auto& v : re) v *= norm;
    for (auto& v : im) v *= norm;
}

inline ComplexTensor dft2(const Tensor& frame) {
    if (frame.ndim() != 2) throw ShapeError("dft2: frame must be 2-D, got " + shape_str(frame.dims()));
    const std::size_t h = frame.dim(0), w = frame.dim(1);
    std::vector<double> re(frame.vec().begin(), frame.vec().end()), im(h * w, 0.0);
    dft2_inplace(re, im, h, w, false);
    ComplexTensor out{Tensor(frame.dims()), Tensor(frame.dims())};
    for (std::size_t i = 0; i < h * w; ++i) {
        out.re[i] = static_cast<float>(re[i]);
        out.im[i] = static_cast<float>(im[i]);
    }
    return out;
}

inline ComplexTensor idft2(const ComplexTensor& spec) {
    require_same_shape(spec.re, spec.im, "idft2");
    if (spec.re.ndim() != 2) throw ShapeError("idft2: expected 2-D spectrum");
    const std::size_t h = spec.re.dim(0), w = spec.re.dim(1);
    std::vector<double> re(spec.re.vec().begin(), spec.re.vec().end());
    std::vector<double> im(spec.im.vec().begin(), spec.im.vec().end());
    dft2_inplace(re, im, h, w, true);
    ComplexTensor out{Tensor(spec.re.dims()), Tensor(spec.re.dims())};
    for (std::size_t i = 0; i < h * w; ++i) {
        out.re[i] = static_cast<float>(re[i]);
        out.im[i] = static_cast<float>(im[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// LANM blob: magic, version u32 LE, dtype u8 (0 = f32), ndim u8, dims u64 LE,
// payload f32 LE.

inline constexpr char kBlobMagic[4] = {'L', 'A', 'N', 'M'};
inline constexpr std::uint32_t kBlobVersion = 1;

namespace detail {
template <class T>
void put_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}
template <class T>
T get_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("blob: truncated");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}
}  // namespace detail

inline void write_blob(std::ostream& os, const Tensor& t) {
    if (t.ndim() > 255) throw ShapeError("blob: too many dims");
    os.write(kBlobMagic, 4);
    detail::put_le<std::uint32_t>(os, kBlobVersion);
    detail::put_le<std::uint8_t>(os, 0);
    detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(t.ndim()));
    for (auto d : t.dims()) detail::put_le<std::uint64_t>(os, d);
    for (float v : t.data()) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        detail::put_le<std::uint32_t>(os, bits);
    }
}

inline Tensor read_blob(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4)) throw FormatError("blob: truncated header");
    if (std::memcmp(magic, kBlobMagic, 4) != 0) throw FormatError("blob: bad magic");
    const auto version = detail::get_le<std::uint32_t>(is);
    if (version != kBlobVersion) throw FormatError("blob: unsupported version " + std::to_string(version));
    const auto dtype = detail::get_le<std::uint8_t>(is);
    if (dtype != 0) throw FormatError("blob: unsupported dtype " + std::to_string(dtype));
    const auto ndim = detail::get_le<std::uint8_t>(is);
    Shape dims(ndim);
    for (auto& d : dims) d = static_cast<std::size_t>(detail::get_le<std::uint64_t>(is));
    Tensor t(dims);
    for (auto& v : t.data()) {
        const auto bits = detail::get_le<std::uint32_t>(is);
        std::memcpy(&v, &bits, 4);
    }
    return t;
}

// FNV-1a over raw bytes; used for config and artifact fingerprints.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(s.data(), s.size(), h);
}

inline std::uint64_t hash_tensor(const Tensor& t, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(t.ptr(), t.size() * sizeof(float), h);
}

}  // namespace longanim
