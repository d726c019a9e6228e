#pragma once

#include <functional>
#include <vector>

#include "flathiggs/torus.hpp"

namespace fh {

using MatRowC = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Monomial basis of the exterior algebra on the coframe
// (dz^1..dz^n, dzbar^1..dzbar^n), indexed by bitmask.
struct ExteriorBasis {
    int dim = 0;
    int n = 0;
    std::vector<std::vector<unsigned>> masks;  // by degree, increasing mask order
    std::vector<int> slot;                     // mask -> position within its degree

    static const ExteriorBasis& get(int n);

    int slots(int degree) const;
    int holomorphic_count(unsigned mask) const;
    int antiholomorphic_count(unsigned mask) const;
    unsigned conjugate(unsigned mask) const;
    // Sign relating conj(e_S) to e_{conjugate(S)}.
    int conjugate_sign(unsigned mask) const;
};

// e_a ^ e_b = sign * e_{a|b}; zero when the masks overlap.
int wedge_sign(unsigned a, unsigned b);

// A matrix-valued differential form of fixed total degree on a LatticeTorus.
//
// Fiber values are rows x cols matrices: 1x1 for scalar forms, r x r for
// End(E), r x 1 for sections.  A constant field stores a single grid point
// and has vanishing derivatives.
class FormField {
public:
    FormField() = default;
    FormField(TorusPtr base, int degree, int rows, int cols, bool constant = false);

    static FormField zeros(TorusPtr base, int degree, int rows, int cols, bool constant = false);
    static FormField identity(TorusPtr base, int r, bool constant = true);
    static FormField scalar_function(TorusPtr base, const std::function<cd(std::size_t)>& f);
    static FormField constant_matrix(TorusPtr base, const MatC& m);

    const TorusPtr& base() const { return base_; }
    const LatticeTorus& torus() const { return *base_; }
    int degree() const { return degree_; }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int fiber() const { return rows_ * cols_; }
    bool is_constant() const { return constant_; }
    bool empty() const { return !base_; }
    std::size_t npts() const { return npts_; }
    int nslots() const { return nslots_; }
    int channels() const { return nslots_ * rows_ * cols_; }
    unsigned mask(int slot) const;
    int slot_of(unsigned mask) const;

    cd* block(std::size_t p, int slot) { return data_.data() + (p * nslots_ + slot) * fiber(); }
    const cd* block(std::size_t p, int slot) const { return data_.data() + (p * nslots_ + slot) * fiber(); }
    Eigen::Map<MatRowC> mat(std::size_t p, int slot) { return {block(p, slot), rows_, cols_}; }
    Eigen::Map<const MatRowC> mat(std::size_t p, int slot) const { return {block(p, slot), rows_, cols_}; }
    MatC matrix(std::size_t p, int slot) const { return mat(p, slot); }
    // Point lookup that broadcasts constant fields.
    MatC at(std::size_t p, int slot = 0) const { return mat(constant_ ? 0 : p, slot); }

    std::vector<cd>& data() { return data_; }
    const std::vector<cd>& data() const { return data_; }

    FormField to_lattice() const;
    // Spatial mean of every coefficient, as a constant field.
    FormField mean() const;
    // Restrict to the components of bidegree (p, q).
    FormField part(int p, int q) const;
    // Largest pointwise coefficient magnitude.
    double max_abs() const;
    // Largest deviation from the spatial mean.
    double spatial_variation() const;

    FormField& operator+=(const FormField& o);
    FormField& operator-=(const FormField& o);
    FormField& operator*=(cd s);

private:
    TorusPtr base_;
    int degree_ = 0;
    int rows_ = 0;
    int cols_ = 0;
    bool constant_ = false;
    std::size_t npts_ = 0;
    int nslots_ = 0;
    std::vector<cd> data_;
};

FormField operator+(const FormField& a, const FormField& b);
FormField operator-(const FormField& a, const FormField& b);
FormField operator-(const FormField& a);
FormField operator*(cd s, const FormField& a);
FormField operator*(const FormField& a, cd s);

// Pointwise exterior product with matrix multiplication of fiber values.
// A 1x1 operand acts as a scalar on the other operand.
FormField wedge(const FormField& a, const FormField& b);
// a ^ b - (-1)^{deg a deg b} b ^ a
FormField graded_commutator(const FormField& a, const FormField& b);

// Exterior derivative and its (1,0) / (0,1) parts, computed spectrally.
FormField d(const FormField& a);
FormField del(const FormField& a);
FormField delbar(const FormField& a);

// Conjugate the form part (dz <-> dzbar) and take the matrix adjoint.
FormField conj_transpose(const FormField& a);
// Fiberwise trace to a scalar form.
FormField trace(const FormField& a);
// Multiply fiber values by fixed matrices: left * value * right.
FormField sandwich(const MatC& left, const FormField& a, const MatC& right);

// Pointwise operations on 0-forms with square fibers.
FormField inverse(const FormField& a);
FormField adjoint_matrix(const FormField& a);
FormField apply_pointwise(const FormField& a, const std::function<MatC(const MatC&)>& f);
// Hermitian functional calculus; input must be pointwise Hermitian.
FormField hermitian_function(const FormField& a, const std::function<double(double)>& f);
FormField hermitian_sqrt(const FormField& a);
FormField hermitian_inv_sqrt(const FormField& a);
FormField hermitian_exp(const FormField& a);
FormField hermitian_log(const FormField& a);

// Convert a 0-form to a plain vector of pointwise scalars (1x1 fibers).
std::vector<cd> scalar_values(const FormField& a);

// Embed the scalar 1x1 form `s` times the identity of rank r.
FormField times_identity(const FormField& s, int r);

// Largest coefficient magnitude of a - b.
double max_difference(const FormField& a, const FormField& b);
// Root mean square over the grid of the coefficient norm, sum over slots and fiber entries.
double rms_norm(const FormField& a);

void require_compatible(const FormField& a, const FormField& b);

}  // namespace fh
