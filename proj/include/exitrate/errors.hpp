#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace exitrate {

/// Base class for every structured failure raised by the toolkit. `kind()`
/// is a stable machine-readable tag used by the CLI error stream.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// Shape/size mismatch between plant, gains, controls or state vectors.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& message)
        : Error("dimension", message) {}
};

/// sigma(x) sigma(x)^T cannot be bounded away from zero.
class EllipticityError : public Error {
public:
    explicit EllipticityError(const std::string& message)
        : Error("ellipticity", message) {}
};

/// Non-finite values encountered during a computation.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& message)
        : Error("numeric", message) {}
};

/// Iterative solver failed to converge or produced an inconsistent pair.
class SolverError : public Error {
public:
    explicit SolverError(const std::string& message)
        : Error("solver", message) {}
};

/// Discrete operator lost its sign structure at the current resolution.
/// Carries the interior node ordinals whose rows are affected.
class StencilError : public Error {
public:
    StencilError(const std::string& message, std::vector<std::int64_t> nodes)
        : Error("stencil", message), nodes_(std::move(nodes)) {}

    const std::vector<std::int64_t>& offending_nodes() const noexcept { return nodes_; }

private:
    std::vector<std::int64_t> nodes_;
};

/// Survival-curve tail too thin for a trustworthy rate regression.
class TailStarvedError : public Error {
public:
    explicit TailStarvedError(const std::string& message)
        : Error("tail_starved", message) {}
};

/// Violation of a documented precondition (e.g. start point outside D).
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& message)
        : Error("precondition", message) {}
};

/// Configuration parsing/validation failure. Collects every issue found
/// rather than stopping at the first; each issue names the offending key.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> issues)
        : Error("config", join(issues)), issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const noexcept { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out;
        for (const auto& s : issues) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> issues_;
};

} // namespace exitrate
