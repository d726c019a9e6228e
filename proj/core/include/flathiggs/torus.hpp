#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace fh {

using cd = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;

constexpr double kPi = 3.14159265358979323846;
constexpr cd kI{0.0, 1.0};

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Complex torus C^n / (Z^n + tau Z^n) sampled on a periodic grid.
//
// Grid axes are the lattice coordinates (u_1..u_n, v_1..v_n) in [0,1), with
// z = u + tau v.  Point indices are row-major over that axis order.
class LatticeTorus {
public:
    LatticeTorus(int n, std::vector<int> dims, MatC tau);

    static std::shared_ptr<const LatticeTorus> make(int n, int per_axis);
    static std::shared_ptr<const LatticeTorus> make(int n, int per_axis, const MatC& tau);
    static std::shared_ptr<const LatticeTorus> make(int n, std::vector<int> dims, const MatC& tau);

    int n() const { return n_; }
    int real_dim() const { return 2 * n_; }
    const std::vector<int>& dims() const { return dims_; }
    const MatC& tau() const { return tau_; }
    std::size_t points() const { return points_; }

    // Euclidean (Lebesgue) measure of the fundamental domain in z-coordinates.
    double lebesgue_volume() const { return lebesgue_volume_; }
    double cell_volume() const { return lebesgue_volume_ / static_cast<double>(points_); }

    // Lattice coordinates (u, v) of a grid point.
    std::vector<double> coords(std::size_t p) const;
    VecC z(std::size_t p) const;

    // Jacobian rows: d/du_k = sum_a U(k,a) d_a, d/dv_k = sum_a V(k,a) d_a with
    // a running over (d/dz^1..d/dz^n, d/dzbar^1..d/dzbar^n).
    MatC axis_to_complex() const;
    // Inverse map: d_a = sum_j C(a,j) d/dx_j over the 2n lattice axes.
    const MatC& complex_from_axes() const { return complex_from_axes_; }

    // Fourier symbol of d/dz^a (a < n) or d/dzbar^(a-n) (a >= n); Nyquist modes zeroed.
    const std::vector<cd>& symbol(int a) const { return symbols_.at(static_cast<std::size_t>(a)); }
    // Integer wave number of grid index i on axis k (Nyquist reported as +N/2).
    int wave_number(int axis, int index) const;

    // In-place unnormalized transforms of `channels` interleaved fields
    // (layout [point][channel]).  backward() divides by the point count.
    void forward(cd* data, int channels) const;
    void backward(cd* data, int channels) const;

    bool same_as(const LatticeTorus& other) const;

private:
    int n_;
    std::vector<int> dims_;
    MatC tau_;
    std::size_t points_;
    double lebesgue_volume_;
    MatC complex_from_axes_;
    std::vector<std::vector<cd>> symbols_;

    struct Plan;
    mutable std::mutex plan_mutex_;
    mutable std::vector<std::shared_ptr<Plan>> plans_;
    std::shared_ptr<Plan> plan_for(int channels, int sign) const;
};

using TorusPtr = std::shared_ptr<const LatticeTorus>;

void require_same_base(const LatticeTorus& a, const LatticeTorus& b);

}  // namespace fh
