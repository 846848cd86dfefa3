#include "exitrate/model.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace exitrate {

namespace {

void require_finite(const Matrix& m, const std::string& name) {
    if (!m.allFinite()) {
        throw NumericError(name + " contains non-finite entries");
    }
}

} // namespace

MultiChannelSystem::MultiChannelSystem(Matrix A, std::vector<Matrix> B)
    : A_(std::move(A)), B_(std::move(B)) {
    if (A_.rows() < 1 || A_.rows() != A_.cols()) {
        throw DimensionError("system matrix A must be square with d >= 1, got " +
                             std::to_string(A_.rows()) + "x" + std::to_string(A_.cols()));
    }
    if (B_.empty()) {
        throw DimensionError("system needs at least one input channel");
    }
    require_finite(A_, "A");
    for (std::size_t i = 0; i < B_.size(); ++i) {
        if (B_[i].rows() != A_.rows()) {
            throw DimensionError("input matrix B_" + std::to_string(i + 1) + " has " +
                                 std::to_string(B_[i].rows()) + " rows, expected " +
                                 std::to_string(A_.rows()));
        }
        if (B_[i].cols() < 1) {
            throw DimensionError("input matrix B_" + std::to_string(i + 1) + " has no columns");
        }
        require_finite(B_[i], "B_" + std::to_string(i + 1));
    }
}

void FeedbackTuple::validate_against(const MultiChannelSystem& system) const {
    if (channels() != system.channels()) {
        throw DimensionError("feedback tuple has " + std::to_string(channels()) +
                             " gains, system has " + std::to_string(system.channels()) +
                             " channels");
    }
    for (int i = 0; i < channels(); ++i) {
        const Matrix& g = gains_[static_cast<std::size_t>(i)];
        if (g.rows() != system.input_dim(i) || g.cols() != system.dim()) {
            throw DimensionError("gain for channel " + std::to_string(i + 1) + " is " +
                                 std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                                 ", expected " + std::to_string(system.input_dim(i)) + "x" +
                                 std::to_string(system.dim()));
        }
        require_finite(g, "gamma_" + std::to_string(i + 1));
    }
}

Matrix closed_loop(const MultiChannelSystem& system, const FeedbackTuple& feedbacks) {
    feedbacks.validate_against(system);
    Matrix M = system.A();
    for (int i = 0; i < system.channels(); ++i) {
        M += system.B(i) * feedbacks.gain(i);
    }
    return M;
}

Domain Domain::box(Vector lower, Vector upper) {
    if (lower.size() != upper.size() || lower.size() < 1) {
        throw DimensionError("box bounds must have equal positive dimension");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(upper[i] > lower[i])) {
            throw DimensionError("box has empty interior along axis " + std::to_string(i + 1));
        }
    }
    return Domain(Box{std::move(lower), std::move(upper)});
}

Domain Domain::ball(Vector center, double radius) {
    if (center.size() < 1) {
        throw DimensionError("ball center must have positive dimension");
    }
    if (!(radius > 0.0)) {
        throw DimensionError("ball radius must be positive");
    }
    return Domain(Ball{std::move(center), radius});
}

int Domain::dim() const noexcept {
    if (is_box()) return static_cast<int>(as_box().lower.size());
    return static_cast<int>(as_ball().center.size());
}

double Domain::signed_distance(const Vector& x) const {
    if (is_ball()) {
        const Ball& b = as_ball();
        return (x - b.center).norm() - b.radius;
    }
    const Box& b = as_box();
    // Per-axis excess over the slab; exact Euclidean distance outside,
    // max of (negative) per-axis margins inside.
    double inside = -std::numeric_limits<double>::infinity();
    double outside_sq = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double e = std::max(b.lower[i] - x[i], x[i] - b.upper[i]);
        inside = std::max(inside, e);
        if (e > 0.0) outside_sq += e * e;
    }
    return outside_sq > 0.0 ? std::sqrt(outside_sq) : inside;
}

Vector Domain::project(const Vector& x) const {
    if (is_ball()) {
        const Ball& b = as_ball();
        const Vector r = x - b.center;
        const double n = r.norm();
        if (n <= b.radius) return x;
        double scale = b.radius / n;
        Vector p = b.center + scale * r;
        // Rounding can land a hair outside; nudge the scale down until the
        // point is inside the closure.
        for (int i = 0; i < 4 && (p - b.center).norm() > b.radius; ++i) {
            scale = std::nextafter(scale, 0.0);
            p = b.center + scale * r;
        }
        return p;
    }
    const Box& b = as_box();
    return x.cwiseMax(b.lower).cwiseMin(b.upper);
}

void Domain::bounding_box(Vector& lower, Vector& upper) const {
    if (is_box()) {
        lower = as_box().lower;
        upper = as_box().upper;
        return;
    }
    const Ball& b = as_ball();
    lower = b.center.array() - b.radius;
    upper = b.center.array() + b.radius;
}

double Modulation::value(const Vector& x) const {
    if (kind == ModulationKind::Constant) return 1.0;
    const double t = x.squaredNorm();
    return 1.0 + beta * t / (1.0 + t);
}

Vector Modulation::gradient(const Vector& x) const {
    if (kind == ModulationKind::Constant) return Vector::Zero(x.size());
    const double t = x.squaredNorm();
    const double s = 1.0 + t;
    return (2.0 * beta / (s * s)) * x;
}

double Modulation::infimum() const {
    if (kind == ModulationKind::Constant) return 1.0;
    // t/(1+t) ranges over [0,1): inf is at t=0 for beta >= 0 and at the
    // t -> inf limit for beta < 0.
    return beta >= 0.0 ? 1.0 : 1.0 + beta;
}

double Modulation::supremum() const {
    if (kind == ModulationKind::Constant) return 1.0;
    return beta >= 0.0 ? 1.0 + beta : 1.0;
}

double validate_diffusion(const Matrix& base, const Modulation& modulation) {
    if (base.rows() != base.cols() || base.rows() < 1) {
        throw DimensionError("diffusion base matrix must be square");
    }
    if (modulation.kind == ModulationKind::Saturating && !(modulation.beta > -1.0)) {
        throw EllipticityError("saturating modulation needs beta > -1, got " +
                               std::to_string(modulation.beta));
    }
    require_finite(base, "sigma0");
    const Matrix aat = base * base.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(aat);
    const double lambda_min = es.eigenvalues().minCoeff();
    const double inf_m = modulation.infimum();
    const double kappa = inf_m * inf_m * lambda_min;
    if (!(kappa > 0.0)) {
        throw EllipticityError("sigma(x) sigma(x)^T is not uniformly positive definite "
                               "(kappa = " + std::to_string(kappa) + ")");
    }
    return kappa;
}

double validate_diffusion(const DiffusionSpec& spec) {
    return validate_diffusion(spec.base(), spec.modulation());
}

DiffusionSpec::DiffusionSpec(Matrix base, Modulation modulation)
    : base_(std::move(base)), modulation_(modulation) {
    kappa_ = validate_diffusion(base_, modulation_);
    base_aat_ = base_ * base_.transpose();
    base_aat_inv_ = base_aat_.inverse();
}

Matrix DiffusionSpec::sigma(const Vector& x) const {
    return modulation_.value(x) * base_;
}

Matrix DiffusionSpec::a(const Vector& x) const {
    const double m = modulation_.value(x);
    return (m * m) * base_aat_;
}

Matrix DiffusionSpec::a_inverse(const Vector& x) const {
    const double m = modulation_.value(x);
    return (1.0 / (m * m)) * base_aat_inv_;
}

ControlBox::ControlBox(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size() || lower.size() < 1) {
        throw DimensionError("control box bounds must have equal positive dimension");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(upper[i] >= lower[i])) {
            throw DimensionError("control box is empty along component " + std::to_string(i + 1));
        }
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i])) {
            throw DimensionError("control box must be bounded");
        }
    }
}

bool ControlBox::contains(const Vector& u, double tol) const {
    if (u.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (u[i] < lower[i] - tol || u[i] > upper[i] + tol) return false;
    }
    return true;
}

Vector ControlBox::clamp(const Vector& u) const {
    return u.cwiseMax(lower).cwiseMin(upper);
}

NoiseLevel::NoiseLevel(double eps, double eps_max) : epsilon(eps), epsilon_max(eps_max) {
    if (!(eps > 0.0) || !(eps < eps_max)) {
        throw PreconditionError("noise level requires 0 < epsilon < epsilon_max, got epsilon=" +
                                std::to_string(eps) + ", epsilon_max=" + std::to_string(eps_max));
    }
}

} // namespace exitrate
