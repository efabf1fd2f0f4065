#pragma once

#include <dirpart/grid.hpp>

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

namespace dirpart {

namespace detail {

// The FFTW planner is not thread-safe; plan creation and destruction go
// through this lock. Executing an existing plan on fresh arrays is safe.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

template <class T>
struct FftwFree {
    void operator()(T* p) const noexcept { fftw_free(p); }
};

template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree<T>>;

template <class T>
FftwBuffer<T> fftw_alloc(std::size_t count) {
    void* p = fftw_malloc(sizeof(T) * std::max<std::size_t>(count, 1));
    if (p == nullptr) throw std::bad_alloc();
    return FftwBuffer<T>(static_cast<T*>(p));
}

// Forward r2c / inverse c2r pair for one grid shape.
class RealFftPlans {
public:
    explicit RealFftPlans(const GridSpec& spec) : real_size_(spec.size()) {
        const int n = static_cast<int>(spec.n());
        complex_size_ = real_size_ / spec.n() * (spec.n() / 2 + 1);
        auto in = fftw_alloc<double>(real_size_);
        auto out = fftw_alloc<fftw_complex>(complex_size_);
        std::lock_guard lock(fftw_planner_mutex());
        if (spec.dim() == 2) {
            forward_ = fftw_plan_dft_r2c_2d(n, n, in.get(), out.get(), FFTW_ESTIMATE);
            inverse_ = fftw_plan_dft_c2r_2d(n, n, out.get(), in.get(), FFTW_ESTIMATE);
        } else {
            forward_ = fftw_plan_dft_r2c_3d(n, n, n, in.get(), out.get(), FFTW_ESTIMATE);
            inverse_ = fftw_plan_dft_c2r_3d(n, n, n, out.get(), in.get(), FFTW_ESTIMATE);
        }
        if (forward_ == nullptr || inverse_ == nullptr) throw Error("FFTW planning failed");
    }

    RealFftPlans(const RealFftPlans&) = delete;
    RealFftPlans& operator=(const RealFftPlans&) = delete;

    ~RealFftPlans() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }

    std::size_t real_size() const noexcept { return real_size_; }
    std::size_t complex_size() const noexcept { return complex_size_; }

    void forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(forward_, in, out); }
    // Destroys `in`.
    void inverse(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(inverse_, in, out); }

private:
    std::size_t real_size_;
    std::size_t complex_size_{0};
    fftw_plan forward_{nullptr};
    fftw_plan inverse_{nullptr};
};

inline std::shared_ptr<const RealFftPlans> plans_for(const GridSpec& spec) {
    static std::mutex cache_mutex;
    static std::map<std::pair<int, std::size_t>, std::shared_ptr<const RealFftPlans>> cache;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[{spec.dim(), spec.n()}];
    if (!slot) slot = std::make_shared<const RealFftPlans>(spec);
    return slot;
}

// Integer wave number for FFT index i on an n-point axis: {-n/2, ..., n/2 - 1}.
inline double wave_number(std::size_t i, std::size_t n) {
    return i < n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
}

} // namespace detail

/// Heat semigroup exp((tau/2) * Laplacian) on the periodic box, applied as the
/// Fourier multiplier exp(-|m|^2 * tau / 2) over integer wave vectors m.
///
/// Immutable after construction; apply() allocates its own scratch space and
/// may be called concurrently.
class HeatOperator {
public:
    HeatOperator(const GridSpec& spec, double tau) : spec_(spec), tau_(tau) {
        if (!(tau >= 0.0) || !std::isfinite(tau)) {
            throw InvalidArgument("heat operator needs tau >= 0, got " + std::to_string(tau));
        }
        plans_ = detail::plans_for(spec_);
        build_multiplier();
    }

    const GridSpec& spec() const noexcept { return spec_; }
    double tau() const noexcept { return tau_; }

    /// Multiplier over the half spectrum (last axis 0..n/2), FFTW r2c order.
    std::span<const double> multiplier() const noexcept { return multiplier_; }

    ScalarField apply(const ScalarField& f) const {
        require_same_grid(spec_, f.spec(), "heat_semigroup");
        if (tau_ == 0.0) return f;
        ScalarField out(spec_);
        apply_to(f.values(), out.values());
        return out;
    }

    /// Raw-span variant used by the solver's inner loops.
    void apply_to(std::span<const double> in, std::span<double> out) const {
        if (in.size() != plans_->real_size() || out.size() != plans_->real_size()) {
            throw ShapeError("heat_semigroup: span length does not match grid " +
                             spec_.describe());
        }
        if (tau_ == 0.0) {
            std::copy(in.begin(), in.end(), out.begin());
            return;
        }
        auto real = detail::fftw_alloc<double>(plans_->real_size());
        auto freq = detail::fftw_alloc<fftw_complex>(plans_->complex_size());
        std::copy(in.begin(), in.end(), real.get());
        plans_->forward(real.get(), freq.get());
        const double scale = 1.0 / static_cast<double>(plans_->real_size());
        for (std::size_t j = 0; j < multiplier_.size(); ++j) {
            const double m = multiplier_[j] * scale;
            freq[j][0] *= m;
            freq[j][1] *= m;
        }
        // c2r is unnormalized and only reads the Hermitian half, so the
        // result is real by construction.
        plans_->inverse(freq.get(), real.get());
        std::copy(real.get(), real.get() + plans_->real_size(), out.begin());
    }

private:
    void build_multiplier() {
        const std::size_t n = spec_.n();
        const std::size_t half = n / 2 + 1;
        multiplier_.resize(plans_->complex_size());
        std::size_t j = 0;
        if (spec_.dim() == 2) {
            for (std::size_t a = 0; a < n; ++a) {
                const double ma = detail::wave_number(a, n);
                for (std::size_t b = 0; b < half; ++b, ++j) {
                    const double mb = static_cast<double>(b);
                    multiplier_[j] = std::exp(-(ma * ma + mb * mb) * tau_ / 2.0);
                }
            }
        } else {
            for (std::size_t a = 0; a < n; ++a) {
                const double ma = detail::wave_number(a, n);
                for (std::size_t b = 0; b < n; ++b) {
                    const double mb = detail::wave_number(b, n);
                    for (std::size_t c = 0; c < half; ++c, ++j) {
                        const double mc = static_cast<double>(c);
                        multiplier_[j] =
                            std::exp(-(ma * ma + mb * mb + mc * mc) * tau_ / 2.0);
                    }
                }
            }
        }
    }

    GridSpec spec_;
    double tau_;
    std::shared_ptr<const detail::RealFftPlans> plans_;
    std::vector<double> multiplier_;
};

inline ScalarField heat_semigroup(const HeatOperator& op, const ScalarField& f) {
    return op.apply(f);
}

} // namespace dirpart
