#pragma once

#include <Eigen/Dense>

#include <optional>
#include <variant>
#include <vector>

#include "exitrate/errors.hpp"

namespace exitrate {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Linear plant xdot = A x + sum_i B_i u_i with one input matrix per channel.
class MultiChannelSystem {
public:
    MultiChannelSystem(Matrix A, std::vector<Matrix> B);

    int dim() const noexcept { return static_cast<int>(A_.rows()); }
    int channels() const noexcept { return static_cast<int>(B_.size()); }
    int input_dim(int channel) const { return static_cast<int>(B_.at(channel).cols()); }

    const Matrix& A() const noexcept { return A_; }
    const std::vector<Matrix>& B() const noexcept { return B_; }
    const Matrix& B(int channel) const { return B_.at(channel); }

private:
    Matrix A_;
    std::vector<Matrix> B_;
};

/// An n-tuple of state-feedback gains, one r_i x d matrix per channel.
class FeedbackTuple {
public:
    explicit FeedbackTuple(std::vector<Matrix> gains) : gains_(std::move(gains)) {}

    int channels() const noexcept { return static_cast<int>(gains_.size()); }
    const Matrix& gain(int channel) const { return gains_.at(channel); }
    const std::vector<Matrix>& gains() const noexcept { return gains_; }

    /// Checks shape compatibility against `system`, throwing DimensionError
    /// that names the offending channel.
    void validate_against(const MultiChannelSystem& system) const;

private:
    std::vector<Matrix> gains_;
};

/// A + sum_i B_i gamma_i.
Matrix closed_loop(const MultiChannelSystem& system, const FeedbackTuple& feedbacks);

/// Bounded open set the process is confined to. Boxes and balls only, both
/// with exact membership tests and exact Euclidean signed distance.
class Domain {
public:
    struct Box {
        Vector lower;
        Vector upper;
    };
    struct Ball {
        Vector center;
        double radius;
    };

    static Domain box(Vector lower, Vector upper);
    static Domain ball(Vector center, double radius);

    int dim() const noexcept;

    /// Strict interior membership, x in D.
    bool contains(const Vector& x) const { return signed_distance(x) < 0.0; }
    /// Closure membership, x in D or on its boundary.
    bool contains_closure(const Vector& x) const { return signed_distance(x) <= 0.0; }

    /// Negative inside, zero on the boundary, positive outside (Euclidean).
    double signed_distance(const Vector& x) const;

    /// Nearest point of the closure.
    Vector project(const Vector& x) const;

    /// Axis-aligned bounding box of the closure.
    void bounding_box(Vector& lower, Vector& upper) const;

    bool is_box() const noexcept { return std::holds_alternative<Box>(shape_); }
    bool is_ball() const noexcept { return std::holds_alternative<Ball>(shape_); }
    const Box& as_box() const { return std::get<Box>(shape_); }
    const Ball& as_ball() const { return std::get<Ball>(shape_); }

private:
    explicit Domain(std::variant<Box, Ball> shape) : shape_(std::move(shape)) {}

    std::variant<Box, Ball> shape_;
};

enum class ModulationKind { Constant, Saturating };

/// Scalar factor applied to the base noise matrix. The saturating family is
/// m(x) = 1 + beta |x|^2 / (1 + |x|^2) with beta > -1, which is globally
/// Lipschitz, bounded, and has an analytically known infimum.
struct Modulation {
    ModulationKind kind = ModulationKind::Constant;
    double beta = 0.0;

    double value(const Vector& x) const;
    /// Gradient of m at x (zero for the constant family).
    Vector gradient(const Vector& x) const;
    /// inf_x m(x); attained at 0 for beta >= 0, approached as |x| -> inf otherwise.
    double infimum() const;
    /// sup_x m(x).
    double supremum() const;
};

/// sigma(x) = m(x) * sigma0 with a certified uniform ellipticity constant
/// kappa such that sigma(x) sigma(x)^T >= kappa I everywhere.
class DiffusionSpec {
public:
    explicit DiffusionSpec(Matrix base, Modulation modulation = {});

    int dim() const noexcept { return static_cast<int>(base_.rows()); }
    const Matrix& base() const noexcept { return base_; }
    const Modulation& modulation() const noexcept { return modulation_; }
    double kappa() const noexcept { return kappa_; }

    Matrix sigma(const Vector& x) const;
    /// a(x) = sigma(x) sigma(x)^T = m(x)^2 * sigma0 sigma0^T.
    Matrix a(const Vector& x) const;
    Matrix a_inverse(const Vector& x) const;
    const Matrix& base_aat() const noexcept { return base_aat_; }
    const Matrix& base_aat_inverse() const noexcept { return base_aat_inv_; }

private:
    Matrix base_;
    Modulation modulation_;
    Matrix base_aat_;
    Matrix base_aat_inv_;
    double kappa_ = 0.0;
};

/// Largest kappa provable for the enumerated family:
/// kappa = (inf m)^2 * lambda_min(sigma0 sigma0^T). Throws EllipticityError
/// if the bound is not strictly positive.
double validate_diffusion(const Matrix& base, const Modulation& modulation);
double validate_diffusion(const DiffusionSpec& spec);

/// Axis-aligned admissible control box for one channel.
struct ControlBox {
    Vector lower;
    Vector upper;

    ControlBox(Vector lo, Vector hi);

    int dim() const noexcept { return static_cast<int>(lower.size()); }
    Vector midpoint() const { return 0.5 * (lower + upper); }
    bool contains(const Vector& u, double tol = 0.0) const;
    Vector clamp(const Vector& u) const;
};

/// Per-channel admissible control sets.
struct ControlSpec {
    std::vector<ControlBox> channels;

    int n() const noexcept { return static_cast<int>(channels.size()); }
    const ControlBox& channel(int i) const { return channels.at(i); }
};

/// Perturbation level 0 < epsilon < epsilon_max.
struct NoiseLevel {
    double epsilon;
    double epsilon_max;

    NoiseLevel(double eps, double eps_max);
};

} // namespace exitrate
