#include "flathiggs/torus.hpp"

#include <fftw3.h>

#include <cmath>
#include <sstream>

namespace fh {

struct LatticeTorus::Plan {
    int channels = 0;
    int sign = 0;
    fftw_plan plan = nullptr;
    ~Plan() {
        if (plan) fftw_destroy_plan(plan);
    }
};

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

LatticeTorus::LatticeTorus(int n, std::vector<int> dims, MatC tau)
    : n_(n), dims_(std::move(dims)), tau_(std::move(tau)) {
    if (n_ != 1 && n_ != 2) throw GeometryError("torus dimension must be 1 or 2");
    if (static_cast<int>(dims_.size()) != 2 * n_)
        throw GeometryError("torus needs one grid size per real axis");
    for (int d : dims_) {
        if (d < 4 || d % 2 != 0) throw GeometryError("grid sizes must be even and >= 4");
    }
    if (tau_.rows() != n_ || tau_.cols() != n_) throw GeometryError("period matrix has wrong shape");
    MatR y = tau_.imag();
    MatR ysym = 0.5 * (y + y.transpose());
    Eigen::SelfAdjointEigenSolver<MatR> es(ysym);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw GeometryError("period matrix must have positive-definite imaginary part");

    points_ = 1;
    for (int d : dims_) points_ *= static_cast<std::size_t>(d);
    lebesgue_volume_ = std::abs(y.determinant());

    // d/dz = (tau^T - conj(tau)^T)^{-1} (d/dv - conj(tau)^T d/du),  d/dzbar = d/du - d/dz.
    MatC m = (tau_.transpose() - tau_.conjugate().transpose()).inverse();
    MatC mu = -m * tau_.conjugate().transpose();
    complex_from_axes_ = MatC::Zero(2 * n_, 2 * n_);
    for (int a = 0; a < n_; ++a) {
        for (int k = 0; k < n_; ++k) {
            complex_from_axes_(a, k) = mu(a, k);
            complex_from_axes_(a, n_ + k) = m(a, k);
            complex_from_axes_(n_ + a, k) = (a == k ? 1.0 : 0.0) - mu(a, k);
            complex_from_axes_(n_ + a, n_ + k) = -m(a, k);
        }
    }

    symbols_.assign(static_cast<std::size_t>(2 * n_), std::vector<cd>(points_));
    std::vector<int> idx(dims_.size(), 0);
    std::vector<double> k(dims_.size(), 0.0);
    for (std::size_t p = 0; p < points_; ++p) {
        std::size_t rem = p;
        for (int ax = 2 * n_ - 1; ax >= 0; --ax) {
            idx[ax] = static_cast<int>(rem % static_cast<std::size_t>(dims_[ax]));
            rem /= static_cast<std::size_t>(dims_[ax]);
        }
        for (int ax = 0; ax < 2 * n_; ++ax) {
            int w = wave_number(ax, idx[ax]);
            k[ax] = (2 * std::abs(w) == dims_[ax]) ? 0.0 : static_cast<double>(w);
        }
        for (int a = 0; a < 2 * n_; ++a) {
            cd s = 0.0;
            for (int ax = 0; ax < 2 * n_; ++ax) s += complex_from_axes_(a, ax) * (2.0 * kPi * kI * k[ax]);
            symbols_[a][p] = s;
        }
    }
}

std::shared_ptr<const LatticeTorus> LatticeTorus::make(int n, int per_axis) {
    return make(n, per_axis, kI * MatC::Identity(n, n));
}

std::shared_ptr<const LatticeTorus> LatticeTorus::make(int n, int per_axis, const MatC& tau) {
    return std::make_shared<const LatticeTorus>(n, std::vector<int>(static_cast<std::size_t>(2 * n), per_axis), tau);
}

std::shared_ptr<const LatticeTorus> LatticeTorus::make(int n, std::vector<int> dims, const MatC& tau) {
    return std::make_shared<const LatticeTorus>(n, std::move(dims), tau);
}

int LatticeTorus::wave_number(int axis, int index) const {
    int d = dims_[static_cast<std::size_t>(axis)];
    return index <= d / 2 ? index : index - d;
}

std::vector<double> LatticeTorus::coords(std::size_t p) const {
    std::vector<double> x(dims_.size());
    for (int ax = 2 * n_ - 1; ax >= 0; --ax) {
        std::size_t d = static_cast<std::size_t>(dims_[ax]);
        x[ax] = static_cast<double>(p % d) / static_cast<double>(d);
        p /= d;
    }
    return x;
}

VecC LatticeTorus::z(std::size_t p) const {
    std::vector<double> x = coords(p);
    VecC out(n_);
    for (int a = 0; a < n_; ++a) {
        cd s = x[a];
        for (int b = 0; b < n_; ++b) s += tau_(a, b) * x[n_ + b];
        out(a) = s;
    }
    return out;
}

MatC LatticeTorus::axis_to_complex() const {
    MatC j = MatC::Zero(2 * n_, 2 * n_);
    for (int k = 0; k < n_; ++k) {
        j(k, k) = 1.0;
        j(k, n_ + k) = 1.0;
        for (int a = 0; a < n_; ++a) {
            j(n_ + k, a) = tau_(a, k);
            j(n_ + k, n_ + a) = std::conj(tau_(a, k));
        }
    }
    return j;
}

std::shared_ptr<LatticeTorus::Plan> LatticeTorus::plan_for(int channels, int sign) const {
    std::lock_guard<std::mutex> lock(plan_mutex_);
    for (const auto& pl : plans_)
        if (pl->channels == channels && pl->sign == sign) return pl;
    auto pl = std::make_shared<Plan>();
    pl->channels = channels;
    pl->sign = sign;
    std::size_t total = points_ * static_cast<std::size_t>(channels);
    {
        std::lock_guard<std::mutex> planner(planner_mutex());
        auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * total));
        pl->plan = fftw_plan_many_dft(2 * n_, dims_.data(), channels, buf, nullptr, channels, 1, buf, nullptr,
                                      channels, 1, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
    }
    if (!pl->plan) throw GeometryError("FFT planning failed");
    plans_.push_back(pl);
    return pl;
}

void LatticeTorus::forward(cd* data, int channels) const {
    auto pl = plan_for(channels, FFTW_FORWARD);
    auto* d = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(pl->plan, d, d);
}

void LatticeTorus::backward(cd* data, int channels) const {
    auto pl = plan_for(channels, FFTW_BACKWARD);
    auto* d = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(pl->plan, d, d);
    const double s = 1.0 / static_cast<double>(points_);
    std::size_t total = points_ * static_cast<std::size_t>(channels);
    for (std::size_t i = 0; i < total; ++i) data[i] *= s;
}

bool LatticeTorus::same_as(const LatticeTorus& other) const {
    if (this == &other) return true;
    return n_ == other.n_ && dims_ == other.dims_ && (tau_ - other.tau_).norm() == 0.0;
}

void require_same_base(const LatticeTorus& a, const LatticeTorus& b) {
    if (!a.same_as(b)) throw GeometryError("fields live on different tori");
}

}  // namespace fh
